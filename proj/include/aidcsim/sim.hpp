#pragma once

#include "aidcsim/grid.hpp"
#include "aidcsim/plant.hpp"
#include "aidcsim/policy.hpp"
#include "aidcsim/scenario.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace aidcsim::sim {

struct RewardParts {
    double urgency = 0.0;
    double rejection = 0.0;
    double curtailment = 0.0;
    double total() const { return urgency + rejection + curtailment; }
};

// Shortfall against the uniform schedule as a fraction of the target share,
// after 1-based step t: max(0, (t/T) w_req - W / (T dt)) / w_req.
double shortfall_ratio(double delivered_h, double w_req, int t, int horizon, double dt_h);

// Per-step reward; `delivered_h` already includes the step just executed.
RewardParts step_reward(const std::array<double, 2>& delivered_h, double r_2, double kappa_mw, int t,
                        int horizon, double dt_h, const AidcConfig& cfg);

struct StepRecord {
    int t = 0;          // 1-based within the episode
    int trace_row = 0;  // row of the scenario trace
    std::array<double, policy::kObsDim> obs_raw{};
    std::array<double, policy::kObsDim> features{};
    plant::PlanningAction action;   // as emitted by the policy
    plant::PlanningAction request;  // after clipping to what is executable
    double p_req = 0.0;
    double p_acc = 0.0;
    double kappa = 0.0;
    grid::Mechanism mechanism = grid::Mechanism::None;
    double dispatch_cost = 0.0;
    double max_line_utilization = 0.0;
    plant::ExecutionResult exec;
    RewardParts parts;
    double reward = 0.0;
    plant::AidcState state_after;
};

struct EpisodeRecord {
    std::string scenario;
    std::string policy;
    std::uint64_t seed = 0;
    int first_row = 0;
    int horizon = 0;
    double dt_h = 0.25;
    std::vector<double> demand;  // system demand over the episode window
    std::vector<StepRecord> steps;
    bool aborted = false;
    int abort_step = 0;  // 1-based step that failed
    std::string abort_reason;
    std::array<double, 2> delivered_h{};
    std::array<double, 2> shortfall_h{};
    double terminal_soc_dev_mwh = 0.0;
};

// One closed-loop episode advanced a step at a time; shared by run_episode and
// the environment server.
class Episode {
public:
    Episode(const Scenario& s, std::shared_ptr<const grid::GridContext> ctx, int first_row, int horizon,
            std::string policy_name = "");

    bool done() const { return done_; }
    int next_t() const { return t_; }
    const policy::Observation& observation() const { return obs_; }
    std::array<double, policy::kObsDim> features() const;
    const policy::Normalization& normalization() const { return norm_; }

    // Runs one protocol step. On grid::TsoInfeasible or plant::InfeasibleBudget
    // the episode is marked aborted and the exception rethrown.
    const StepRecord& step(const plant::PlanningAction& action);

    const EpisodeRecord& record() const { return rec_; }

private:
    void finish();

    AidcConfig cfg_;
    std::shared_ptr<const grid::GridContext> ctx_;
    policy::Normalization norm_;
    plant::AidcState st_;
    grid::TsoState tso_;
    policy::Observation obs_;
    double p_acc_prev_ = 0.0;
    double kappa_prev_ = 0.0;
    int t_ = 1;
    bool done_ = false;
    EpisodeRecord rec_;
};

// Builds a policy from `fixed-buffer`, `heuristic` or `mlp:PATH` for the trace
// window [first_row, first_row + horizon).
std::unique_ptr<policy::Policy> make_policy(const std::string& spec, const Scenario& s, int first_row,
                                            int horizon);

// Whole-trace episode. Infeasibility aborts the episode and is recorded, not thrown.
EpisodeRecord run_episode(const Scenario& s, std::shared_ptr<const grid::GridContext> ctx,
                          policy::Policy& pol);

struct GroupMeans {
    double peak = 0.0;
    double offpeak = 0.0;
    double delta() const { return offpeak - peak; }
};

struct MetricsReport {
    int steps = 0;
    bool aborted = false;
    double cumulative_reward = 0.0;
    RewardParts reward_parts;
    double mean_kappa_mw = 0.0;
    int curtailed_steps = 0;
    double curtail_freq_pct = 0.0;
    double curtailed_energy_mwh = 0.0;
    std::array<double, 2> w_pct{};  // delivered work as % of target
    double peak_threshold_mw = 0.0;
    double offpeak_threshold_mw = 0.0;
    int peak_steps = 0;
    int offpeak_steps = 0;
    GroupMeans p_req, kappa, s_1a, s_1b, s_2;
    std::array<std::vector<double>, 2> completion_lag_pct;
    std::array<double, 2> max_completion_lag_pct{};
    double bess_idle_pct = 0.0;
    std::map<std::string, int> mechanisms;  // curtailed steps per tag
    double terminal_soc_dev_mwh = 0.0;
    std::array<double, 2> shortfall_h{};
    double max_balance_residual_mw = 0.0;
};

MetricsReport compute_metrics(const EpisodeRecord& ep, const AidcConfig& cfg);
std::string metrics_json(const MetricsReport& m, int indent = 2);

struct SweepCell {
    double gamma_u = 0.0;
    double eps = 0.0;
    bool feasible = true;
    double curtail_freq_pct = 0.0;
    int curtailed_steps = 0;
    std::map<std::string, int> mechanisms;
    std::string detail;
};

// Re-runs the whole-trace episode for every (gamma_u, eps) pair; the baseline
// dispatch of `base` is reused.
std::vector<SweepCell> run_sweep(const Scenario& s, const grid::GridContext& base,
                                 const std::vector<double>& gammas, const std::vector<double>& eps,
                                 const std::string& policy_spec);
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);
void write_sweep_mechanisms_csv(std::ostream& os, const std::vector<SweepCell>& cells);

// Per-step logs.
void write_execution_csv(std::ostream& os, const EpisodeRecord& ep);
void write_acceptance_csv(std::ostream& os, const EpisodeRecord& ep);

// A run directory holds acceptance.csv, execution.csv, episode.csv (the full
// step log), metrics.json and run.json (metadata).
void write_run(const std::filesystem::path& dir, const EpisodeRecord& ep, const AidcConfig& cfg);
// Rebuilds the episode from a run directory; `cfg` receives the workload
// shares the metrics depend on.
EpisodeRecord load_run(const std::filesystem::path& dir, AidcConfig& cfg);

// Text summary laid out like the strategy comparison and cluster behaviour
// tables.
void print_summary(std::ostream& os, const EpisodeRecord& ep, const MetricsReport& m);
// Writes summary.csv, cluster_behavior.csv, completion_lag.csv and
// timeseries.csv into `dir`.
void write_report_csvs(const std::filesystem::path& dir, const EpisodeRecord& ep, const MetricsReport& m);

}  // namespace aidcsim::sim
