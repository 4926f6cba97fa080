#include "aidcsim/sim.hpp"

#include <algorithm>
#include <cmath>

namespace aidcsim::sim {

double shortfall_ratio(double delivered_h, double w_req, int t, int horizon, double dt_h) {
    if (!(w_req > 0.0) || horizon <= 0) {
        return 0.0;
    }
    const double pace = static_cast<double>(t) / horizon * w_req;
    return std::max(0.0, pace - delivered_h / (horizon * dt_h)) / w_req;
}

RewardParts step_reward(const std::array<double, 2>& delivered_h, double r_2, double kappa_mw, int t,
                        int horizon, double dt_h, const AidcConfig& cfg) {
    const double eta_1a = shortfall_ratio(delivered_h[0], cfg.cluster(Group::Frontier).w_req, t, horizon, dt_h);
    const double eta_1b = shortfall_ratio(delivered_h[1], cfg.cluster(Group::Batch).w_req, t, horizon, dt_h);
    RewardParts r;
    r.urgency = -cfg.alpha_w * (cfg.m_1a * eta_1a + cfg.m_1b * eta_1b);
    r.rejection = -cfg.alpha_rej * r_2 * dt_h;
    r.curtailment = -cfg.alpha_kappa * kappa_mw;
    return r;
}

Episode::Episode(const Scenario& s, std::shared_ptr<const grid::GridContext> ctx, int first_row, int horizon,
                 std::string policy_name)
    : cfg_(s.aidc), ctx_(std::move(ctx)) {
    const int steps = ctx_->trace.steps();
    if (first_row < 0 || horizon <= 0 || first_row + horizon > steps) {
        throw std::out_of_range("episode window [" + std::to_string(first_row) + ", " +
                                std::to_string(first_row + horizon) + ") outside the trace of " +
                                std::to_string(steps) + " steps");
    }
    norm_ = policy::make_normalization(cfg_, s.scaling, ctx_->trace, horizon);
    st_ = plant::initial_state(cfg_);
    rec_.scenario = s.name;
    rec_.policy = std::move(policy_name);
    rec_.seed = s.seed;
    rec_.first_row = first_row;
    rec_.horizon = horizon;
    rec_.dt_h = ctx_->trace.dt_h;
    rec_.demand.assign(ctx_->trace.demand.begin() + first_row, ctx_->trace.demand.begin() + first_row + horizon);
    rec_.steps.reserve(horizon);
    obs_ = policy::build_observation(st_, 0.0, 0.0, ctx_->trace, first_row, 1, horizon, cfg_);
}

std::array<double, policy::kObsDim> Episode::features() const { return policy::normalize(obs_, norm_); }

const StepRecord& Episode::step(const plant::PlanningAction& action) {
    if (done_) {
        throw std::logic_error("episode already finished");
    }
    for (double v : action.to_array()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("planning action component outside [0, 1]");
        }
    }
    const ExogenousTrace& tr = ctx_->trace;
    const double dt = tr.dt_h;
    const int row = rec_.first_row + t_ - 1;
    const double d_inf = tr.d_inf[row];

    StepRecord r;
    r.t = t_;
    r.trace_row = row;
    r.obs_raw = obs_.raw;
    r.features = features();
    r.action = action;
    r.request = policy::admissible_action(action, cfg_, d_inf, st_.e_bess_mwh, dt);
    r.p_req = policy::action_to_request(r.request, cfg_, d_inf);
    try {
        const grid::AcceptanceOutcome acc = grid::robust_acceptance_step(*ctx_, r.p_req, row, tso_);
        r.p_acc = acc.p_acc;
        r.kappa = acc.kappa;
        r.mechanism = acc.mechanism;
        r.dispatch_cost = acc.dispatch_cost;
        r.max_line_utilization = acc.max_line_utilization;
        r.exec = plant::execute_step(r.request, r.p_acc, st_.e_bess_mwh, d_inf, dt, cfg_);
        tso_ = grid::advance(acc);
    } catch (const grid::TsoInfeasible& e) {
        rec_.aborted = true;
        rec_.abort_step = t_;
        rec_.abort_reason = std::string("grid: ") + e.what();
        finish();
        throw;
    } catch (const plant::InfeasibleBudget& e) {
        rec_.aborted = true;
        rec_.abort_step = t_;
        rec_.abort_reason = std::string("plant: ") + e.what();
        finish();
        throw;
    }
    plant::apply(st_, r.exec, dt);
    r.state_after = st_;
    r.parts = step_reward(st_.delivered_h, r.exec.r_2, r.kappa, t_, rec_.horizon, dt, cfg_);
    r.reward = r.parts.total();
    p_acc_prev_ = r.p_acc;
    kappa_prev_ = r.kappa;
    rec_.steps.push_back(r);
    ++t_;
    if (t_ > rec_.horizon) {
        finish();
    }
    obs_ = policy::build_observation(st_, p_acc_prev_, kappa_prev_, tr, rec_.first_row, t_, rec_.horizon, cfg_);
    return rec_.steps.back();
}

void Episode::finish() {
    done_ = true;
    rec_.delivered_h = st_.delivered_h;
    rec_.shortfall_h = plant::terminal_shortfall(st_, cfg_, rec_.horizon, rec_.dt_h);
    rec_.terminal_soc_dev_mwh = std::abs(st_.e_bess_mwh - cfg_.bess.e_init_mwh());
}

std::unique_ptr<policy::Policy> make_policy(const std::string& spec, const Scenario& s, int first_row,
                                            int horizon) {
    if (spec == "fixed-buffer") {
        return std::make_unique<policy::FixedBufferPolicy>();
    }
    if (spec == "heuristic") {
        std::vector<double> demand(s.trace.demand.begin() + first_row,
                                   s.trace.demand.begin() + first_row + horizon);
        return std::make_unique<policy::HeuristicPolicy>(s.heuristic, s.aidc, std::move(demand));
    }
    if (spec.rfind("mlp:", 0) == 0) {
        return std::make_unique<policy::MlpPolicy>(policy::load_weights(spec.substr(4)),
                                                   policy::make_normalization(s.aidc, s.scaling, s.trace, horizon));
    }
    throw std::invalid_argument("unknown policy '" + spec + "' (expected fixed-buffer, heuristic or mlp:PATH)");
}

EpisodeRecord run_episode(const Scenario& s, std::shared_ptr<const grid::GridContext> ctx, policy::Policy& pol) {
    Episode ep(s, std::move(ctx), 0, s.trace.steps(), pol.name());
    while (!ep.done()) {
        try {
            ep.step(pol.act(ep.observation()));
        } catch (const grid::TsoInfeasible&) {
            break;
        } catch (const plant::InfeasibleBudget&) {
            break;
        }
    }
    return ep.record();
}

}  // namespace aidcsim::sim
