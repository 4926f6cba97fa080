#include "aidcsim/sim.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace aidcsim::sim {

namespace {

constexpr double kIdleTol = 1e-9;  // MW

struct Mean {
    double sum = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    double value() const { return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(); }
};

}  // namespace

MetricsReport compute_metrics(const EpisodeRecord& ep, const AidcConfig& cfg) {
    MetricsReport m;
    m.steps = static_cast<int>(ep.steps.size());
    m.aborted = ep.aborted;
    m.terminal_soc_dev_mwh = ep.terminal_soc_dev_mwh;
    m.shortfall_h = ep.shortfall_h;
    if (!ep.demand.empty()) {
        m.peak_threshold_mw = policy::percentile(ep.demand, 75.0);
        m.offpeak_threshold_mw = policy::percentile(ep.demand, 25.0);
    }
    std::array<Mean, 5> peak, off;
    int idle = 0;
    double kappa_sum = 0.0;
    for (const StepRecord& r : ep.steps) {
        m.cumulative_reward += r.reward;
        m.reward_parts.urgency += r.parts.urgency;
        m.reward_parts.rejection += r.parts.rejection;
        m.reward_parts.curtailment += r.parts.curtailment;
        kappa_sum += r.kappa;
        if (r.kappa > 0.0) {
            ++m.curtailed_steps;
            ++m.mechanisms[grid::to_string(r.mechanism)];
        }
        m.curtailed_energy_mwh += r.kappa * ep.dt_h;
        if (r.exec.x.p_ch_mw <= kIdleTol && r.exec.x.p_dis_mw <= kIdleTol) {
            ++idle;
        }
        m.max_balance_residual_mw = std::max(m.max_balance_residual_mw, std::abs(r.exec.balance_residual_mw));
        const double d = ep.demand.at(r.t - 1);
        const std::array<double, 5> v = {r.p_req, r.kappa, r.exec.x.s[0], r.exec.x.s[1], r.exec.x.s[2]};
        for (int i = 0; i < 5; ++i) {
            if (d > m.peak_threshold_mw) {
                peak[i].add(v[i]);
            } else if (d < m.offpeak_threshold_mw) {
                off[i].add(v[i]);
            }
        }
        for (int k = 0; k < 2; ++k) {
            m.completion_lag_pct[k].push_back(
                100.0 * shortfall_ratio(r.state_after.delivered_h[k], cfg.clusters[k].w_req, r.t, ep.horizon, ep.dt_h));
            m.max_completion_lag_pct[k] = std::max(m.max_completion_lag_pct[k], m.completion_lag_pct[k].back());
        }
    }
    m.peak_steps = peak[0].n;
    m.offpeak_steps = off[0].n;
    GroupMeans* groups[5] = {&m.p_req, &m.kappa, &m.s_1a, &m.s_1b, &m.s_2};
    for (int i = 0; i < 5; ++i) {
        groups[i]->peak = peak[i].value();
        groups[i]->offpeak = off[i].value();
    }
    if (m.steps > 0) {
        m.mean_kappa_mw = kappa_sum / m.steps;
        m.curtail_freq_pct = 100.0 * m.curtailed_steps / m.steps;
        m.bess_idle_pct = 100.0 * idle / m.steps;
    }
    const std::array<double, 2> delivered = ep.steps.empty() ? std::array<double, 2>{} : ep.steps.back().state_after.delivered_h;
    for (int k = 0; k < 2; ++k) {
        const double target = cfg.clusters[k].w_req * ep.horizon * ep.dt_h;
        m.w_pct[k] = target > 0.0 ? 100.0 * delivered[k] / target : 100.0;
    }
    return m;
}

std::string metrics_json(const MetricsReport& m, int indent) {
    using nlohmann::json;
    auto group = [](const GroupMeans& g) {
        return json{{"peak", g.peak}, {"offpeak", g.offpeak}, {"delta", g.delta()}};
    };
    json j;
    j["steps"] = m.steps;
    j["aborted"] = m.aborted;
    j["cumulative_reward"] = m.cumulative_reward;
    j["reward_components"] = {{"urgency", m.reward_parts.urgency},
                              {"rejection", m.reward_parts.rejection},
                              {"curtailment", m.reward_parts.curtailment}};
    j["mean_kappa_mw"] = m.mean_kappa_mw;
    j["curtailed_steps"] = m.curtailed_steps;
    j["curtail_freq_pct"] = m.curtail_freq_pct;
    j["curtailed_energy_mwh"] = m.curtailed_energy_mwh;
    j["w_1a_pct"] = m.w_pct[0];
    j["w_1b_pct"] = m.w_pct[1];
    j["peak_threshold_mw"] = m.peak_threshold_mw;
    j["offpeak_threshold_mw"] = m.offpeak_threshold_mw;
    j["peak_steps"] = m.peak_steps;
    j["offpeak_steps"] = m.offpeak_steps;
    j["p_req_mw"] = group(m.p_req);
    j["kappa_mw"] = group(m.kappa);
    j["s_1a"] = group(m.s_1a);
    j["s_1b"] = group(m.s_1b);
    j["s_2"] = group(m.s_2);
    j["max_completion_lag_1a_pct"] = m.max_completion_lag_pct[0];
    j["max_completion_lag_1b_pct"] = m.max_completion_lag_pct[1];
    j["bess_idle_pct"] = m.bess_idle_pct;
    j["mechanisms"] = m.mechanisms;
    j["terminal_soc_dev_mwh"] = m.terminal_soc_dev_mwh;
    j["shortfall_1a_h"] = m.shortfall_h[0];
    j["shortfall_1b_h"] = m.shortfall_h[1];
    j["max_balance_residual_mw"] = m.max_balance_residual_mw;
    return j.dump(indent);
}

std::vector<SweepCell> run_sweep(const Scenario& s, const grid::GridContext& base,
                                 const std::vector<double>& gammas, const std::vector<double>& eps,
                                 const std::string& policy_spec) {
    if (gammas.empty() || eps.empty()) {
        throw std::invalid_argument("sweep needs at least one budget and one deviation ratio");
    }
    std::vector<SweepCell> cells;
    for (double g : gammas) {
        for (double e : eps) {
            SweepCell cell;
            cell.gamma_u = g;
            cell.eps = e;
            Scenario sc = s;
            sc.tso.gamma_u = g;
            sc.tso.eps = e;
            const ValidationReport rep = validate_scenario(sc);
            if (!rep.ok()) {
                throw ScenarioError("sweep cell gamma=" + std::to_string(g) + " eps=" + std::to_string(e) +
                                        " is not a valid configuration",
                                    rep.errors);
            }
            auto ctx = std::make_shared<grid::GridContext>(base);
            ctx->cfg = sc.tso;
            ctx->protection = grid::protection_terms(ctx->ptdf, ctx->trace, sc.tso, ctx->network);
            auto pol = make_policy(policy_spec, sc, 0, sc.trace.steps());
            const EpisodeRecord ep = run_episode(sc, ctx, *pol);
            if (ep.aborted) {
                cell.feasible = false;
                cell.detail = "step " + std::to_string(ep.abort_step) + ": " + ep.abort_reason;
            } else {
                const MetricsReport m = compute_metrics(ep, sc.aidc);
                cell.curtail_freq_pct = m.curtail_freq_pct;
                cell.curtailed_steps = m.curtailed_steps;
                cell.mechanisms = m.mechanisms;
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os << "gamma,eps,curtail_freq,status\n";
    for (const SweepCell& c : cells) {
        os << c.gamma_u << ',' << c.eps << ',';
        if (c.feasible) {
            os << c.curtail_freq_pct;
        }
        os << ',' << (c.feasible ? "ok" : "infeasible") << '\n';
    }
}

void write_sweep_mechanisms_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os << "gamma,eps,curtailed_steps,ramp,congestion,robustness,mixed,status\n";
    for (const SweepCell& c : cells) {
        auto count = [&](const char* k) {
            auto it = c.mechanisms.find(k);
            return it == c.mechanisms.end() ? 0 : it->second;
        };
        os << c.gamma_u << ',' << c.eps << ',' << c.curtailed_steps << ',' << count("ramp") << ','
           << count("congestion") << ',' << count("robustness") << ',' << count("mixed") << ','
           << (c.feasible ? "ok" : "infeasible") << '\n';
    }
}

}  // namespace aidcsim::sim
