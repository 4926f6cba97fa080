#pragma once

#include "aidcsim/lp.hpp"
#include "aidcsim/scenario.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aidcsim::grid {

// The TSO problem has no feasible point; carries the offending step (0-based).
class TsoInfeasible : public std::runtime_error {
public:
    TsoInfeasible(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Flow on line l per MW injected at bus position n and withdrawn at the reference bus.
struct Ptdf {
    Eigen::MatrixXd m;  // lines x buses
    int ref = 0;        // reference bus position

    double operator()(int line, int bus) const { return m(line, bus); }
    std::vector<double> flows(std::span<const double> injection_mw) const;
};

// Throws std::runtime_error when the reduced susceptance matrix is singular.
Ptdf compute_ptdf(const NetworkCase& c);

// Angle-based DC power flow for a balanced injection vector; independent of
// the PTDF route and used for verification.
class AngleFlow {
public:
    explicit AngleFlow(const NetworkCase& c);
    // Per-line flows (MW, from -> to). The injection must sum to zero.
    std::vector<double> flows(std::span<const double> injection_mw) const;
    // Angles in radians with the reference at zero.
    Eigen::VectorXd angles(std::span<const double> injection_mw) const;

private:
    const NetworkCase* case_;
    int ref_;
    std::vector<int> from_, to_;
    std::vector<double> b_mw_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

struct BaselineDispatch {
    std::vector<std::vector<double>> g;      // [t][generator]
    std::vector<std::vector<double>> flows;  // [t][line]
    std::vector<double> step_cost;           // sum_i c_i g_i per step
    double total_cost = 0.0;
    int windows = 1;
};

struct BaselineOptions {
    // 0 solves the horizon as one LP; otherwise rolling windows of this many
    // committed steps, each solved with `overlap_steps` of look-ahead.
    int window_steps = 0;
    int overlap_steps = 48;
};

// Windows are used automatically when the trace is longer than one day and
// no explicit option is given.
BaselineOptions default_baseline_options(int steps);

BaselineDispatch solve_baseline_dispatch(const NetworkCase& c, const ExogenousTrace& trace,
                                         double rating_scale, const BaselineOptions& opt);

// The same horizon problem in angle/flow variables, solved monolithically.
// Returns the optimal total cost; throws TsoInfeasible when infeasible.
double solve_baseline_angle_form(const NetworkCase& c, const ExogenousTrace& trace,
                                 double rating_scale);

struct BaselineCheck {
    double max_balance_mw = 0.0;  // nodal balance residual via angles
    double max_line_excess_mw = 0.0;
    double max_bound_excess_mw = 0.0;
    double max_ramp_excess_mw = 0.0;
    double worst() const;
};

BaselineCheck verify_baseline(const NetworkCase& c, const ExogenousTrace& trace,
                              double rating_scale, const BaselineDispatch& b);

// Largest sum of `budget` entries of |impacts|, the last one weighted by the
// fractional part of the budget.
double budget_protection(std::span<const double> impacts, double budget);

std::vector<double> participation_factors(const NetworkCase& c, ParticipationRule rule);

// Per-bus impact of a unit normalized deviation on the flow of line l:
// eps * d_n * (sum_i alpha_i PTDF[l, n_i] - PTDF[l, n]).
std::vector<double> line_impacts(const Ptdf& ptdf, const NetworkCase& c,
                                 std::span<const double> alpha, std::span<const double> bus_mw,
                                 double eps, int line);

struct ProtectionTerms {
    std::vector<std::vector<double>> delta_f;  // [t][line], MW
    std::vector<double> delta_d;               // [t], MW
    std::vector<double> alpha;                 // participation per generator
};

ProtectionTerms protection_terms(const Ptdf& ptdf, const ExogenousTrace& trace,
                                 const TsoConfig& cfg, const NetworkCase& c);

enum class Mechanism { None, Congestion, Ramp, Robustness, Mixed };
const char* to_string(Mechanism m);

struct TsoState {
    bool has_prev = false;
    std::vector<double> g_prev;
    double p_acc_prev = 0.0;
};

struct AcceptanceOutcome {
    int t = 0;
    double p_req = 0.0;
    double p_acc = 0.0;
    double kappa = 0.0;
    std::vector<double> g;
    std::vector<double> flows;  // at the forecast demand
    Mechanism mechanism = Mechanism::None;
    double dispatch_cost = 0.0;
    double objective = 0.0;
    double max_line_utilization = 0.0;
    int lp_iterations = 0;
    std::string diagnostic;
};

// Everything the TSO precomputes for a scenario; immutable afterwards.
struct GridContext {
    NetworkCase network;
    ExogenousTrace trace;
    TsoConfig cfg;
    double rating_scale = 1.0;
    Ptdf ptdf;
    BaselineDispatch baseline;
    ProtectionTerms protection;
    int aidc_pos = 0;
    std::vector<int> gen_pos;
};

GridContext make_grid_context(const NetworkCase& c, const ExogenousTrace& trace,
                              const TsoConfig& cfg, double rating_scale);
GridContext make_grid_context(const Scenario& s);

struct StepOptions {
    bool attribute = true;
    // Relaxations used for mechanism attribution and test oracles.
    bool drop_ramps = false;       // generator ramp and PCC ramp
    bool drop_protection = false;  // zero protection terms
    bool drop_lines = false;       // no thermal limits
    double fixed_kappa = -1.0;     // >= 0 pins the curtailment
};

// Solves the robust acceptance problem for request p_req at step t (0-based
// into the context trace). Throws TsoInfeasible when no curtailment level is
// admissible.
AcceptanceOutcome robust_acceptance_step(const GridContext& ctx, double p_req, int t,
                                         const TsoState& state, const StepOptions& opt = {});

// The LP solved by robust_acceptance_step, exposed for dumps and tests.
lp::LinearProgram acceptance_lp(const GridContext& ctx, double p_req, int t, const TsoState& state,
                                const StepOptions& opt = {});

TsoState advance(const AcceptanceOutcome& out);

struct RobustCheck {
    double max_violation = 0.0;
    long long vertices = 0;
    // Largest flow excursion above the forecast flow over the vertices, per line,
    // and largest total demand excursion.
    std::vector<double> max_flow_excursion;
    double max_total_excursion = 0.0;
};

// Exhaustive check of an outcome over every vertex of the budget set, with the
// participation response applied. Throws std::length_error above `vertex_cap`.
RobustCheck check_robust_feasibility(const AcceptanceOutcome& out, const GridContext& ctx, int t,
                                     long long vertex_cap = 2'000'000);

void write_acceptance_header(std::ostream& os);
void write_acceptance_row(std::ostream& os, const AcceptanceOutcome& out);

}  // namespace aidcsim::grid
