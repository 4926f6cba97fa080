#include "aidcsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aidcsim::grid {

namespace {

constexpr double kCoefEps = 1e-12;

struct Window {
    std::vector<std::vector<double>> g;
    double cost = 0.0;
};

Window solve_window(const NetworkCase& c, const Ptdf& ptdf, const ExogenousTrace& trace,
                    double scale, int t0, int len, const std::vector<double>* g_before) {
    const int G = c.num_generators();
    const int N = c.num_buses();
    std::vector<int> gen_pos(G);
    for (int i = 0; i < G; ++i) {
        gen_pos[i] = c.bus_index(c.generators[i].bus);
    }
    lp::LinearProgram p;
    auto var = [&](int k, int i) { return k * G + i; };
    for (int k = 0; k < len; ++k) {
        for (int i = 0; i < G; ++i) {
            const Generator& gen = c.generators[i];
            double lo = gen.g_min_mw;
            double hi = gen.g_max_mw;
            if (k == 0 && g_before) {
                const double r = gen.ramp_mw_per_h * trace.dt_h;
                lo = std::max(lo, (*g_before)[i] - r);
                hi = std::min(hi, (*g_before)[i] + r);
                if (lo > hi) {
                    throw TsoInfeasible("baseline ramp trap entering step " + std::to_string(t0 + 1) +
                                            " for generator at bus " + std::to_string(gen.bus),
                                        t0);
                }
            }
            p.add_variable("g_" + std::to_string(t0 + k + 1) + "_" + std::to_string(i), lo, hi, gen.cost);
        }
    }
    for (int k = 0; k < len; ++k) {
        const int t = t0 + k;
        const auto& d = trace.bus_mw[t];
        std::vector<lp::Term> bal;
        for (int i = 0; i < G; ++i) {
            bal.push_back({var(k, i), 1.0});
        }
        const double total = std::accumulate(d.begin(), d.end(), 0.0);
        p.add_constraint("balance_" + std::to_string(t + 1), bal, lp::Relation::Equal, total);
        for (int l = 0; l < c.num_lines(); ++l) {
            double kl = 0.0;
            for (int n = 0; n < N; ++n) {
                kl += ptdf(l, n) * d[n];
            }
            std::vector<lp::Term> terms;
            for (int i = 0; i < G; ++i) {
                const double a = ptdf(l, gen_pos[i]);
                if (std::abs(a) > kCoefEps) {
                    terms.push_back({var(k, i), a});
                }
            }
            const double f = scale * c.lines[l].f_max_mw;
            p.add_range("line_" + std::to_string(t + 1) + "_" + std::to_string(l), terms, kl - f, kl + f);
        }
        if (k > 0) {
            for (int i = 0; i < G; ++i) {
                const double r = c.generators[i].ramp_mw_per_h * trace.dt_h;
                p.add_range("ramp_" + std::to_string(t + 1) + "_" + std::to_string(i),
                            {{var(k, i), 1.0}, {var(k - 1, i), -1.0}}, -r, r);
            }
        }
    }
    const lp::LpSolution sol = lp::solve_lp(p);
    if (sol.status == lp::LpStatus::Infeasible) {
        throw TsoInfeasible("baseline dispatch infeasible in steps " + std::to_string(t0 + 1) + ".." +
                                std::to_string(t0 + len) + ": " + sol.diagnostic,
                            t0);
    }
    if (!sol.optimal()) {
        throw std::runtime_error("baseline dispatch solve failed (" + lp::to_string(sol.status) +
                                 "): " + sol.diagnostic);
    }
    Window w;
    w.cost = sol.objective;
    for (int k = 0; k < len; ++k) {
        w.g.emplace_back(sol.x.begin() + k * G, sol.x.begin() + (k + 1) * G);
    }
    return w;
}

}  // namespace

BaselineOptions default_baseline_options(int steps) {
    BaselineOptions o;
    o.window_steps = steps > 96 ? 96 : 0;
    return o;
}

BaselineDispatch solve_baseline_dispatch(const NetworkCase& c, const ExogenousTrace& trace,
                                         double rating_scale, const BaselineOptions& opt) {
    if (trace.bus_mw.size() != trace.demand.size()) {
        throw std::invalid_argument("trace has no per-bus forecast attached");
    }
    const int T = trace.steps();
    const Ptdf ptdf = compute_ptdf(c);
    BaselineDispatch out;
    if (opt.window_steps <= 0 || opt.window_steps >= T) {
        out.g = solve_window(c, ptdf, trace, rating_scale, 0, T, nullptr).g;
        out.windows = 1;
    } else {
        out.windows = 0;
        std::vector<double> last;
        for (int s = 0; s < T; s += opt.window_steps) {
            const int len = std::min(opt.window_steps + std::max(0, opt.overlap_steps), T - s);
            const int keep = std::min(opt.window_steps, T - s);
            Window w = solve_window(c, ptdf, trace, rating_scale, s, len, s == 0 ? nullptr : &last);
            for (int k = 0; k < keep; ++k) {
                out.g.push_back(w.g[k]);
            }
            last = out.g.back();
            ++out.windows;
        }
    }
    const int N = c.num_buses();
    for (int t = 0; t < T; ++t) {
        std::vector<double> inj(N);
        for (int n = 0; n < N; ++n) {
            inj[n] = -trace.bus_mw[t][n];
        }
        double cost = 0.0;
        for (int i = 0; i < c.num_generators(); ++i) {
            inj[c.bus_index(c.generators[i].bus)] += out.g[t][i];
            cost += c.generators[i].cost * out.g[t][i];
        }
        out.flows.push_back(ptdf.flows(inj));
        out.step_cost.push_back(cost);
        out.total_cost += cost;
    }
    return out;
}

double solve_baseline_angle_form(const NetworkCase& c, const ExogenousTrace& trace, double rating_scale) {
    const int T = trace.steps();
    const int G = c.num_generators();
    const int N = c.num_buses();
    const int L = c.num_lines();
    const int ref = c.bus_index(c.ref_bus);
    lp::LinearProgram p;
    const int per = G + N + L;
    auto gv = [&](int t, int i) { return t * per + i; };
    auto th = [&](int t, int n) { return t * per + G + n; };
    auto fv = [&](int t, int l) { return t * per + G + N + l; };
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < G; ++i) {
            const Generator& gen = c.generators[i];
            p.add_variable("g", gen.g_min_mw, gen.g_max_mw, gen.cost);
        }
        for (int n = 0; n < N; ++n) {
            if (n == ref) {
                p.add_variable("theta", 0.0, 0.0);
            } else {
                p.add_variable("theta", -lp::kInf, lp::kInf);
            }
        }
        for (int l = 0; l < L; ++l) {
            const double f = rating_scale * c.lines[l].f_max_mw;
            p.add_variable("f", -f, f);
        }
    }
    for (int t = 0; t < T; ++t) {
        for (int l = 0; l < L; ++l) {
            const Line& ln = c.lines[l];
            const double y = ln.b_pu * c.mva_base;
            p.add_constraint("flowdef",
                             {{fv(t, l), 1.0}, {th(t, c.bus_index(ln.from)), -y}, {th(t, c.bus_index(ln.to)), y}},
                             lp::Relation::Equal, 0.0);
        }
        std::vector<std::vector<lp::Term>> node(N);
        for (int i = 0; i < G; ++i) {
            node[c.bus_index(c.generators[i].bus)].push_back({gv(t, i), 1.0});
        }
        for (int l = 0; l < L; ++l) {
            node[c.bus_index(c.lines[l].from)].push_back({fv(t, l), -1.0});
            node[c.bus_index(c.lines[l].to)].push_back({fv(t, l), 1.0});
        }
        for (int n = 0; n < N; ++n) {
            p.add_constraint("node", node[n], lp::Relation::Equal, trace.bus_mw[t][n]);
        }
        if (t > 0) {
            for (int i = 0; i < G; ++i) {
                const double r = c.generators[i].ramp_mw_per_h * trace.dt_h;
                p.add_range("ramp", {{gv(t, i), 1.0}, {gv(t - 1, i), -1.0}}, -r, r);
            }
        }
    }
    const lp::LpSolution sol = lp::solve_lp(p);
    if (sol.status == lp::LpStatus::Infeasible) {
        throw TsoInfeasible("angle-form baseline infeasible: " + sol.diagnostic, 0);
    }
    if (!sol.optimal()) {
        throw std::runtime_error("angle-form baseline failed (" + lp::to_string(sol.status) +
                                 "): " + sol.diagnostic);
    }
    return sol.objective;
}

double BaselineCheck::worst() const {
    return std::max({max_balance_mw, max_line_excess_mw, max_bound_excess_mw, max_ramp_excess_mw});
}

BaselineCheck verify_baseline(const NetworkCase& c, const ExogenousTrace& trace, double rating_scale,
                              const BaselineDispatch& b) {
    const AngleFlow af(c);
    const int N = c.num_buses();
    BaselineCheck chk;
    for (int t = 0; t < trace.steps(); ++t) {
        std::vector<double> inj(N);
        for (int n = 0; n < N; ++n) {
            inj[n] = -trace.bus_mw[t][n];
        }
        for (int i = 0; i < c.num_generators(); ++i) {
            const Generator& gen = c.generators[i];
            const double g = b.g[t][i];
            inj[c.bus_index(gen.bus)] += g;
            chk.max_bound_excess_mw =
                std::max({chk.max_bound_excess_mw, gen.g_min_mw - g, g - gen.g_max_mw});
            if (t > 0) {
                const double step = std::abs(g - b.g[t - 1][i]);
                chk.max_ramp_excess_mw =
                    std::max(chk.max_ramp_excess_mw, step - gen.ramp_mw_per_h * trace.dt_h);
            }
        }
        const std::vector<double> f = af.flows(inj);
        std::vector<double> net(inj);
        for (int l = 0; l < c.num_lines(); ++l) {
            net[c.bus_index(c.lines[l].from)] -= f[l];
            net[c.bus_index(c.lines[l].to)] += f[l];
            chk.max_line_excess_mw =
                std::max(chk.max_line_excess_mw, std::abs(f[l]) - rating_scale * c.lines[l].f_max_mw);
        }
        for (double r : net) {
            chk.max_balance_mw = std::max(chk.max_balance_mw, std::abs(r));
        }
    }
    return chk;
}

}  // namespace aidcsim::grid
