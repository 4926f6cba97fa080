#include "aidcsim/plant.hpp"

#include "aidcsim/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aidcsim::plant {

namespace {

constexpr double kSocTol = 1e-7;   // MWh
constexpr double kDrawTol = 1e-7;  // MW

double training_share(const AidcConfig& cfg, Group g) { return cfg.cluster(g).w_req; }

// Grid-side MW per unit of throughput for group k.
double draw_slope(const AidcConfig& cfg, int k) {
    const ClusterSpec& c = cfg.clusters[k];
    return (1.0 / cfg.eta_ipcs + cfg.gamma) * (c.p_peak_mw - c.p_idle_mw());
}

struct Branch {
    bool solved = false;
    Decision x;
    double objective = 0.0;
    int iterations = 0;
};

Branch solve_branch(int beta, const std::array<double, kGroups>& targets, double d_inf, double p_acc,
                    double e, double dt, const AidcConfig& cfg) {
    lp::LinearProgram p;
    const double cyc = cfg.bess.c_cyc * dt;
    std::array<int, kGroups> sv{}, uv{};
    for (int k = 0; k < kGroups; ++k) {
        const double ub = k == static_cast<int>(Group::Inference) ? d_inf : 1.0;
        sv[k] = p.add_variable(std::string("s_") + group_label(static_cast<Group>(k)), 0.0, ub);
    }
    for (int k = 0; k < kGroups; ++k) {
        uv[k] = p.add_variable(std::string("u_") + group_label(static_cast<Group>(k)), 0.0, lp::kInf, cfg.lambda);
    }
    const int ch = p.add_variable("p_ch", 0.0, beta == 1 ? max_charge_mw(e, dt, cfg.bess) : 0.0, cyc);
    const int dis = p.add_variable("p_dis", 0.0, beta == 0 ? max_discharge_mw(e, dt, cfg.bess) : 0.0, cyc);

    std::vector<lp::Term> bal;
    for (int k = 0; k < kGroups; ++k) {
        bal.push_back({sv[k], draw_slope(cfg, k)});
    }
    bal.push_back({ch, 1.0 / cfg.eta_ipcs});
    bal.push_back({dis, -1.0 / cfg.eta_ipcs});
    p.add_constraint("balance", bal, lp::Relation::Equal, p_acc - cfg.idle_floor_mw());
    for (int k = 0; k < kGroups; ++k) {
        p.add_constraint("track_up", {{uv[k], 1.0}, {sv[k], -1.0}}, lp::Relation::GreaterEqual, -targets[k]);
        p.add_constraint("track_dn", {{uv[k], 1.0}, {sv[k], 1.0}}, lp::Relation::GreaterEqual, targets[k]);
    }
    const lp::LpSolution sol = lp::solve_lp(p);
    Branch b;
    b.iterations = sol.iterations;
    if (!sol.optimal()) {
        return b;
    }
    b.solved = true;
    b.x.beta = beta;
    for (int k = 0; k < kGroups; ++k) {
        const double ub = k == static_cast<int>(Group::Inference) ? d_inf : 1.0;
        b.x.s[k] = std::clamp(sol.x[sv[k]], 0.0, ub);
    }
    b.x.p_ch_mw = std::max(0.0, sol.x[ch]);
    b.x.p_dis_mw = std::max(0.0, sol.x[dis]);
    b.objective = execution_objective(b.x, targets, cfg, dt);
    return b;
}

}  // namespace

AidcState initial_state(const AidcConfig& cfg) {
    AidcState st;
    st.e_bess_mwh = cfg.bess.e_init_mwh();
    return st;
}

double workload_target_h(const AidcConfig& cfg, Group g, int horizon, double dt_h) {
    return training_share(cfg, g) * horizon * dt_h;
}

double remaining_h(const AidcState& st, const AidcConfig& cfg, Group g, int horizon, double dt_h) {
    const int k = static_cast<int>(g);
    return std::max(0.0, workload_target_h(cfg, g, horizon, dt_h) - st.delivered_h[k]);
}

std::array<double, 5> PlanningAction::to_array() const { return {s[0], s[1], s[2], phi_ch, phi_dis}; }

PlanningAction PlanningAction::from_array(const std::array<double, 5>& a) {
    PlanningAction p;
    p.s = {a[0], a[1], a[2]};
    p.phi_ch = a[3];
    p.phi_dis = a[4];
    return p;
}

double it_power(const ClusterSpec& spec, double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("throughput " + std::to_string(s) + " outside [0, 1] for cluster " + spec.id);
    }
    return spec.p_idle_mw() + (spec.p_peak_mw - spec.p_idle_mw()) * s;
}

double facility_power(const AidcConfig& cfg, const std::array<double, kGroups>& s, double p_ch_mw,
                      double p_dis_mw) {
    double it = 0.0;
    for (int k = 0; k < kGroups; ++k) {
        it += it_power(cfg.clusters[k], s[k]);
    }
    const double p = (it + p_ch_mw - p_dis_mw) / cfg.eta_ipcs + cfg.gamma * it;
    if (p < 0.0) {
        throw std::logic_error("facility draw is negative; discharge exceeds internal load");
    }
    return p;
}

double soc_step(double e_mwh, double p_ch_mw, double p_dis_mw, double dt_h, const BessSpec& spec) {
    double e = e_mwh + (spec.eta_ch * p_ch_mw - p_dis_mw / spec.eta_dis) * dt_h;
    if (e < spec.e_min_mwh - kSocTol || e > spec.e_max_mwh + kSocTol) {
        std::ostringstream msg;
        msg << "battery energy " << e << " MWh leaves [" << spec.e_min_mwh << ", " << spec.e_max_mwh << "]";
        throw std::logic_error(msg.str());
    }
    return std::clamp(e, spec.e_min_mwh, spec.e_max_mwh);
}

double max_charge_mw(double e_mwh, double dt_h, const BessSpec& spec) {
    return std::clamp((spec.e_max_mwh - e_mwh) / (spec.eta_ch * dt_h), 0.0, spec.p_max_mw);
}

double max_discharge_mw(double e_mwh, double dt_h, const BessSpec& spec) {
    return std::clamp((e_mwh - spec.e_min_mwh) * spec.eta_dis / dt_h, 0.0, spec.p_max_mw);
}

double min_admissible_draw(const AidcConfig& cfg, double e_mwh, double dt_h) {
    return cfg.idle_floor_mw() - max_discharge_mw(e_mwh, dt_h, cfg.bess) / cfg.eta_ipcs;
}

double max_admissible_draw(const AidcConfig& cfg, double e_mwh, double d_inf, double dt_h) {
    return facility_power(cfg, {1.0, 1.0, std::clamp(d_inf, 0.0, 1.0)}, max_charge_mw(e_mwh, dt_h, cfg.bess), 0.0);
}

double execution_objective(const Decision& x, const std::array<double, kGroups>& targets,
                           const AidcConfig& cfg, double dt_h) {
    double track = 0.0;
    for (int k = 0; k < kGroups; ++k) {
        track += std::abs(x.s[k] - targets[k]);
    }
    return cfg.lambda * track + cfg.bess.c_cyc * (x.p_ch_mw + x.p_dis_mw) * dt_h;
}

ExecutionResult execute_step(const PlanningAction& action, double p_acc_mw, double e_bess_mwh,
                             double d_inf, double dt_h, const AidcConfig& cfg) {
    for (double v : action.to_array()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("planning action component outside [0, 1]");
        }
    }
    if (!(d_inf >= 0.0 && d_inf <= 1.0)) {
        throw std::invalid_argument("inference arrival rate outside [0, 1]");
    }
    const double lo = min_admissible_draw(cfg, e_bess_mwh, dt_h);
    const double hi = max_admissible_draw(cfg, e_bess_mwh, d_inf, dt_h);
    if (p_acc_mw < lo - kDrawTol || p_acc_mw > hi + kDrawTol) {
        std::ostringstream msg;
        msg << "accepted power " << p_acc_mw << " MW outside the admissible draw [" << lo << ", " << hi
            << "] MW at battery energy " << e_bess_mwh << " MWh";
        throw InfeasibleBudget(msg.str());
    }
    const double p_acc = std::clamp(p_acc_mw, lo, hi);
    std::array<double, kGroups> targets = action.s;
    targets[static_cast<int>(Group::Inference)] = std::min(targets[static_cast<int>(Group::Inference)], d_inf);

    const Branch dis = solve_branch(0, targets, d_inf, p_acc, e_bess_mwh, dt_h, cfg);
    const Branch chg = solve_branch(1, targets, d_inf, p_acc, e_bess_mwh, dt_h, cfg);
    if (!dis.solved && !chg.solved) {
        throw std::logic_error("both battery branches infeasible inside the admissible draw range");
    }
    const Branch& best = !chg.solved || (dis.solved && dis.objective <= chg.objective + 1e-9) ? dis : chg;

    ExecutionResult r;
    r.x = best.x;
    r.targets = targets;
    r.lp_iterations = dis.iterations + chg.iterations;
    for (int k = 0; k < kGroups; ++k) {
        r.u[k] = std::abs(r.x.s[k] - targets[k]);
        r.p_it_mw[k] = it_power(cfg.clusters[k], r.x.s[k]);
        r.p_it_total_mw += r.p_it_mw[k];
    }
    r.p_cool_mw = cfg.gamma * r.p_it_total_mw;
    r.r_2 = d_inf - r.x.s[static_cast<int>(Group::Inference)];
    r.soc_after_mwh = soc_step(e_bess_mwh, r.x.p_ch_mw, r.x.p_dis_mw, dt_h, cfg.bess);
    r.balance_residual_mw = p_acc_mw - facility_power(cfg, r.x.s, r.x.p_ch_mw, r.x.p_dis_mw);
    r.objective = best.objective;
    return r;
}

bool FeasibilityReport::ok() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& i) { return i.pass; });
}

const CheckItem* FeasibilityReport::find(const std::string& name) const {
    for (const CheckItem& i : items) {
        if (i.name == name) {
            return &i;
        }
    }
    return nullptr;
}

FeasibilityReport feasibility_check(const Decision& x, double p_acc_mw, double e_bess_mwh, double d_inf,
                                    double dt_h, const AidcConfig& cfg, double tol) {
    FeasibilityReport rep;
    auto add = [&](std::string name, double slack) {
        rep.items.push_back({std::move(name), slack, slack >= -tol});
    };
    for (int k = 0; k < kGroups; ++k) {
        const std::string g = group_label(static_cast<Group>(k));
        add("throughput_min_" + g, x.s[k]);
        add("throughput_max_" + g, 1.0 - x.s[k]);
    }
    const double s2 = x.s[static_cast<int>(Group::Inference)];
    add("inference_cap", d_inf - s2);
    add("rejection_nonneg", d_inf - s2);
    const BessSpec& b = cfg.bess;
    add("mode_binary", x.beta == 0 || x.beta == 1 ? 0.0 : -1.0);
    add("charge_nonneg", x.p_ch_mw);
    add("discharge_nonneg", x.p_dis_mw);
    add("charge_limit", (x.beta == 1 ? b.p_max_mw : 0.0) - x.p_ch_mw);
    add("discharge_limit", (x.beta == 0 ? b.p_max_mw : 0.0) - x.p_dis_mw);
    const double e_next = e_bess_mwh + (b.eta_ch * x.p_ch_mw - x.p_dis_mw / b.eta_dis) * dt_h;
    add("soc_min", e_next - b.e_min_mwh);
    add("soc_max", b.e_max_mwh - e_next);

    double it = 0.0;
    for (int k = 0; k < kGroups; ++k) {
        const ClusterSpec& c = cfg.clusters[k];
        it += c.p_idle_mw() + (c.p_peak_mw - c.p_idle_mw()) * x.s[k];
    }
    const double draw = (it + x.p_ch_mw - x.p_dis_mw) / cfg.eta_ipcs + cfg.gamma * it;
    add("power_balance", -std::abs(p_acc_mw - draw));
    add("import_nonneg", p_acc_mw);
    return rep;
}

void apply(AidcState& st, const ExecutionResult& r, double dt_h) {
    st.e_bess_mwh = r.soc_after_mwh;
    st.s_prev = r.x.s;
    st.delivered_h[0] += r.x.s[0] * dt_h;
    st.delivered_h[1] += r.x.s[1] * dt_h;
    ++st.steps_done;
}

std::array<double, 2> terminal_shortfall(const AidcState& st, const AidcConfig& cfg, int horizon,
                                         double dt_h) {
    std::array<double, 2> out{};
    for (int k = 0; k < 2; ++k) {
        out[k] = std::max(0.0, workload_target_h(cfg, static_cast<Group>(k), horizon, dt_h) - st.delivered_h[k]);
    }
    return out;
}

}  // namespace aidcsim::plant
