#pragma once

#include "aidcsim/scenario.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace aidcsim::plant {

// The accepted budget cannot be met by any admissible internal operating point.
class InfeasibleBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AidcState {
    double e_bess_mwh = 0.0;
    std::array<double, kGroups> s_prev{};   // executed throughputs of the previous step
    std::array<double, 2> delivered_h{};     // W_k, throughput-hours, training groups only
    int steps_done = 0;
};

AidcState initial_state(const AidcConfig& cfg);

// Cumulative training target w_req * T * dt in throughput-hours.
double workload_target_h(const AidcConfig& cfg, Group g, int horizon, double dt_h);
// Remaining target, floored at zero.
double remaining_h(const AidcState& st, const AidcConfig& cfg, Group g, int horizon, double dt_h);

struct PlanningAction {
    std::array<double, kGroups> s{};  // target throughputs
    double phi_ch = 0.0;
    double phi_dis = 0.0;

    std::array<double, 5> to_array() const;
    static PlanningAction from_array(const std::array<double, 5>& a);
};

double it_power(const ClusterSpec& spec, double s);
// Grid-side draw for the given throughputs and battery powers.
double facility_power(const AidcConfig& cfg, const std::array<double, kGroups>& s, double p_ch_mw,
                      double p_dis_mw);

// Battery energy after one step; throws std::logic_error when the result leaves
// [E_min, E_max].
double soc_step(double e_mwh, double p_ch_mw, double p_dis_mw, double dt_h, const BessSpec& spec);

// Largest charge / discharge the battery can take this step without leaving its
// energy bounds (also capped at the power rating).
double max_charge_mw(double e_mwh, double dt_h, const BessSpec& spec);
double max_discharge_mw(double e_mwh, double dt_h, const BessSpec& spec);

// Lowest and highest grid draw any admissible operating point can realize.
double min_admissible_draw(const AidcConfig& cfg, double e_mwh, double dt_h);
double max_admissible_draw(const AidcConfig& cfg, double e_mwh, double d_inf, double dt_h);

struct Decision {
    std::array<double, kGroups> s{};
    double p_ch_mw = 0.0;
    double p_dis_mw = 0.0;
    int beta = 0;  // 1: charging allowed, 0: discharging allowed
};

struct ExecutionResult {
    Decision x;
    std::array<double, kGroups> targets{};  // after clipping the inference target
    std::array<double, kGroups> u{};         // |s - target|
    std::array<double, kGroups> p_it_mw{};
    double p_it_total_mw = 0.0;
    double p_cool_mw = 0.0;
    double r_2 = 0.0;
    double soc_after_mwh = 0.0;
    double balance_residual_mw = 0.0;
    double objective = 0.0;
    int lp_iterations = 0;
};

// Execution objective for a decision against (clipped) targets.
double execution_objective(const Decision& x, const std::array<double, kGroups>& targets,
                           const AidcConfig& cfg, double dt_h);

// Allocates the accepted budget by solving the discharge branch and the charge
// branch as separate LPs and keeping the cheaper one (ties go to discharge).
// Throws InfeasibleBudget when p_acc lies outside the admissible draw range.
ExecutionResult execute_step(const PlanningAction& action, double p_acc_mw, double e_bess_mwh,
                             double d_inf, double dt_h, const AidcConfig& cfg);

struct CheckItem {
    std::string name;
    double slack = 0.0;  // negative when violated
    bool pass = true;
};

struct FeasibilityReport {
    std::vector<CheckItem> items;
    bool ok() const;
    const CheckItem* find(const std::string& name) const;
};

FeasibilityReport feasibility_check(const Decision& x, double p_acc_mw, double e_bess_mwh, double d_inf,
                                    double dt_h, const AidcConfig& cfg, double tol = 1e-6);

// Advances the state with an executed decision.
void apply(AidcState& st, const ExecutionResult& r, double dt_h);

// Under-delivery max(0, target - W_k) per training group, throughput-hours.
std::array<double, 2> terminal_shortfall(const AidcState& st, const AidcConfig& cfg, int horizon,
                                         double dt_h);

}  // namespace aidcsim::plant
