#include "aidcsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace aidcsim::grid {

namespace {

constexpr double kCoefEps = 1e-12;
// Curtailment below this is reported as none; attribution compares against it.
constexpr double kKappaTol = 1e-6;

}  // namespace

double budget_protection(std::span<const double> impacts, double budget) {
    std::vector<double> a(impacts.size());
    std::transform(impacts.begin(), impacts.end(), a.begin(), [](double v) { return std::abs(v); });
    std::sort(a.begin(), a.end(), std::greater<>());
    if (!(budget > 0.0)) {
        return 0.0;
    }
    const double whole = std::floor(budget);
    const std::size_t k = static_cast<std::size_t>(std::min<double>(whole, static_cast<double>(a.size())));
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += a[i];
    }
    if (k < a.size()) {
        sum += (budget - whole) * a[k];
    }
    return sum;
}

std::vector<double> participation_factors(const NetworkCase& c, ParticipationRule rule) {
    std::vector<double> w;
    for (const Generator& g : c.generators) {
        w.push_back(rule == ParticipationRule::Ramp ? g.ramp_mw_per_h : g.g_max_mw - g.g_min_mw);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) {
        v = total > 0.0 ? v / total : 1.0 / static_cast<double>(w.size());
    }
    return w;
}

std::vector<double> line_impacts(const Ptdf& ptdf, const NetworkCase& c, std::span<const double> alpha,
                                 std::span<const double> bus_mw, double eps, int line) {
    double response = 0.0;
    for (int i = 0; i < c.num_generators(); ++i) {
        response += alpha[i] * ptdf(line, c.bus_index(c.generators[i].bus));
    }
    std::vector<double> out(bus_mw.size());
    for (std::size_t n = 0; n < bus_mw.size(); ++n) {
        out[n] = eps * bus_mw[n] * (response - ptdf(line, static_cast<int>(n)));
    }
    return out;
}

ProtectionTerms protection_terms(const Ptdf& ptdf, const ExogenousTrace& trace, const TsoConfig& cfg,
                                 const NetworkCase& c) {
    ProtectionTerms p;
    p.alpha = participation_factors(c, cfg.participation);
    const int L = c.num_lines();
    for (int t = 0; t < trace.steps(); ++t) {
        const auto& d = trace.bus_mw[t];
        std::vector<double> dev(d.size());
        for (std::size_t n = 0; n < d.size(); ++n) {
            dev[n] = cfg.eps * d[n];
        }
        p.delta_d.push_back(budget_protection(dev, cfg.gamma_u));
        std::vector<double> df(L);
        for (int l = 0; l < L; ++l) {
            df[l] = budget_protection(line_impacts(ptdf, c, p.alpha, d, cfg.eps, l), cfg.gamma_u);
        }
        p.delta_f.push_back(std::move(df));
    }
    return p;
}

const char* to_string(Mechanism m) {
    switch (m) {
        case Mechanism::None:
            return "none";
        case Mechanism::Congestion:
            return "congestion";
        case Mechanism::Ramp:
            return "ramp";
        case Mechanism::Robustness:
            return "robustness";
        case Mechanism::Mixed:
            return "mixed";
    }
    return "?";
}

GridContext make_grid_context(const NetworkCase& c, const ExogenousTrace& trace, const TsoConfig& cfg,
                              double rating_scale) {
    GridContext ctx;
    ctx.network = c;
    ctx.trace = trace;
    if (ctx.trace.bus_mw.size() != ctx.trace.demand.size()) {
        attach_bus_forecast(ctx.trace, c);
    }
    ctx.cfg = cfg;
    ctx.rating_scale = rating_scale;
    ctx.ptdf = compute_ptdf(c);
    ctx.baseline = solve_baseline_dispatch(c, ctx.trace, rating_scale, default_baseline_options(trace.steps()));
    ctx.protection = protection_terms(ctx.ptdf, ctx.trace, cfg, c);
    ctx.aidc_pos = c.bus_index(c.aidc_bus);
    for (const Generator& g : c.generators) {
        ctx.gen_pos.push_back(c.bus_index(g.bus));
    }
    return ctx;
}

GridContext make_grid_context(const Scenario& s) {
    return make_grid_context(s.network, s.trace, s.tso, s.line_rating_scale);
}

lp::LinearProgram acceptance_lp(const GridContext& ctx, double p_req, int t, const TsoState& state,
                                const StepOptions& opt) {
    const NetworkCase& c = ctx.network;
    const int G = c.num_generators();
    const int N = c.num_buses();
    if (t < 0 || t >= ctx.trace.steps()) {
        throw std::out_of_range("acceptance step " + std::to_string(t) + " outside the trace");
    }
    if (!(p_req >= 0.0) || !std::isfinite(p_req)) {
        throw std::invalid_argument("power request must be a finite nonnegative number");
    }
    const auto& d = ctx.trace.bus_mw[t];
    const auto& g0 = ctx.baseline.g[t];
    const double dD = opt.drop_protection ? 0.0 : ctx.protection.delta_d[t];
    const std::vector<double>& g_prev = state.has_prev ? state.g_prev : g0;

    lp::LinearProgram p;
    for (int i = 0; i < G; ++i) {
        const Generator& gen = c.generators[i];
        double lo = gen.g_min_mw + ctx.protection.alpha[i] * dD;
        double hi = gen.g_max_mw - ctx.protection.alpha[i] * dD;
        if (lo > hi) {
            throw TsoInfeasible("protected output range of generator at bus " + std::to_string(gen.bus) +
                                    " is empty at step " + std::to_string(t + 1),
                                t);
        }
        if (!opt.drop_ramps) {
            const double r = gen.ramp_mw_per_h * ctx.trace.dt_h;
            lo = std::max(lo, g_prev[i] - r);
            hi = std::min(hi, g_prev[i] + r);
            if (lo > hi) {
                throw TsoInfeasible("generator at bus " + std::to_string(gen.bus) +
                                        " cannot ramp into its protected range at step " +
                                        std::to_string(t + 1),
                                    t);
            }
        }
        p.add_variable("g" + std::to_string(i), lo, hi, gen.cost);
    }
    double k_lo = 0.0;
    if (!opt.drop_ramps && state.has_prev) {
        // Only increases of the accepted exchange are rate limited.
        k_lo = std::max(0.0, p_req - state.p_acc_prev - ctx.cfg.r_grid_mw);
    }
    double k_hi = p_req;
    if (opt.fixed_kappa >= 0.0) {
        k_lo = k_hi = std::min(opt.fixed_kappa, p_req);
    }
    const int kappa = p.add_variable("kappa", k_lo, k_hi, ctx.cfg.gamma_kappa);
    std::vector<int> up(G), dn(G);
    for (int i = 0; i < G; ++i) {
        up[i] = p.add_variable("dev_up" + std::to_string(i), 0.0, lp::kInf, ctx.cfg.rho);
        dn[i] = p.add_variable("dev_dn" + std::to_string(i), 0.0, lp::kInf, ctx.cfg.rho);
    }

    std::vector<lp::Term> bal;
    for (int i = 0; i < G; ++i) {
        bal.push_back({i, 1.0});
    }
    bal.push_back({kappa, 1.0});
    const double total = std::accumulate(d.begin(), d.end(), 0.0);
    p.add_constraint("balance", bal, lp::Relation::Equal, total + p_req);

    if (!opt.drop_lines) {
        for (int l = 0; l < c.num_lines(); ++l) {
            const double rating = ctx.rating_scale * c.lines[l].f_max_mw -
                                  (opt.drop_protection ? 0.0 : ctx.protection.delta_f[t][l]);
            if (rating < 0.0) {
                throw TsoInfeasible("protection exceeds the rating of line " + std::to_string(c.lines[l].from) +
                                        "-" + std::to_string(c.lines[l].to) + " at step " +
                                        std::to_string(t + 1),
                                    t);
            }
            // Flow = sum PTDF*g - sum PTDF*d - PTDF_a*(p_req - kappa).
            double kl = ctx.ptdf(l, ctx.aidc_pos) * p_req;
            for (int n = 0; n < N; ++n) {
                kl += ctx.ptdf(l, n) * d[n];
            }
            std::vector<lp::Term> terms;
            for (int i = 0; i < G; ++i) {
                const double a = ctx.ptdf(l, ctx.gen_pos[i]);
                if (std::abs(a) > kCoefEps) {
                    terms.push_back({i, a});
                }
            }
            const double a_k = ctx.ptdf(l, ctx.aidc_pos);
            if (std::abs(a_k) > kCoefEps) {
                terms.push_back({kappa, a_k});
            }
            p.add_range("line" + std::to_string(l), terms, kl - rating, kl + rating);
        }
    }
    for (int i = 0; i < G; ++i) {
        p.add_constraint("dev" + std::to_string(i), {{i, 1.0}, {up[i], -1.0}, {dn[i], 1.0}},
                         lp::Relation::Equal, g0[i]);
    }
    return p;
}

AcceptanceOutcome robust_acceptance_step(const GridContext& ctx, double p_req, int t, const TsoState& state,
                                         const StepOptions& opt) {
    const lp::LinearProgram p = acceptance_lp(ctx, p_req, t, state, opt);
    const lp::LpSolution sol = lp::solve_lp(p);
    if (sol.status == lp::LpStatus::Infeasible) {
        throw TsoInfeasible("acceptance problem infeasible at step " + std::to_string(t + 1) + ": " +
                                sol.diagnostic,
                            t);
    }
    if (!sol.optimal()) {
        throw std::runtime_error("acceptance solve failed at step " + std::to_string(t + 1) + " (" +
                                 lp::to_string(sol.status) + "): " + sol.diagnostic);
    }
    const NetworkCase& c = ctx.network;
    const int G = c.num_generators();
    AcceptanceOutcome out;
    out.t = t;
    out.p_req = p_req;
    out.kappa = std::clamp(sol.x[G], 0.0, p_req);
    if (out.kappa < 1e-9) {
        out.kappa = 0.0;
    }
    out.p_acc = p_req - out.kappa;
    out.g.assign(sol.x.begin(), sol.x.begin() + G);
    out.objective = sol.objective;
    out.lp_iterations = sol.iterations;
    for (int i = 0; i < G; ++i) {
        out.dispatch_cost += c.generators[i].cost * out.g[i];
    }
    std::vector<double> inj(c.num_buses());
    for (int n = 0; n < c.num_buses(); ++n) {
        inj[n] = -ctx.trace.bus_mw[t][n];
    }
    for (int i = 0; i < G; ++i) {
        inj[ctx.gen_pos[i]] += out.g[i];
    }
    inj[ctx.aidc_pos] -= out.p_acc;
    out.flows = ctx.ptdf.flows(inj);
    for (int l = 0; l < c.num_lines(); ++l) {
        out.max_line_utilization = std::max(
            out.max_line_utilization, std::abs(out.flows[l]) / (ctx.rating_scale * c.lines[l].f_max_mw));
    }

    if (out.kappa <= kKappaTol || !opt.attribute) {
        out.mechanism = Mechanism::None;
        return out;
    }
    // Attribution by nested relaxation. Curtailment that vanishes once
    // protection is zeroed is robustness-driven; of the rest, whatever a
    // dispatch free of ramp limits could still not host is static congestion
    // (lines or generation capacity), and the difference is ramp-driven.
    auto relaxed_kappa = [&](bool ramps, bool prot) {
        StepOptions r = opt;
        r.attribute = false;
        r.fixed_kappa = -1.0;
        r.drop_ramps = r.drop_ramps || ramps;
        r.drop_protection = r.drop_protection || prot;
        return robust_acceptance_step(ctx, p_req, t, state, r).kappa;
    };
    const double k_nom = opt.drop_protection ? out.kappa : relaxed_kappa(false, true);
    const double k_static = (opt.drop_ramps || k_nom <= kKappaTol) ? k_nom : relaxed_kappa(true, true);
    const bool robust = out.kappa - k_nom > kKappaTol;
    const bool ramp = k_nom - k_static > kKappaTol;
    const bool line = k_static > kKappaTol;
    const int count = int(robust) + int(ramp) + int(line);
    if (count > 1) {
        out.mechanism = Mechanism::Mixed;
    } else {
        out.mechanism = robust ? Mechanism::Robustness : ramp ? Mechanism::Ramp : Mechanism::Congestion;
    }
    std::ostringstream diag;
    diag << "kappa " << out.kappa << " MW, without protection " << k_nom << " MW, static " << k_static
         << " MW;" << (robust ? " robustness" : "") << (ramp ? " ramp" : "") << (line ? " congestion" : "");
    out.diagnostic = diag.str();
    return out;
}

TsoState advance(const AcceptanceOutcome& out) {
    TsoState s;
    s.has_prev = true;
    s.g_prev = out.g;
    s.p_acc_prev = out.p_acc;
    return s;
}

RobustCheck check_robust_feasibility(const AcceptanceOutcome& out, const GridContext& ctx, int t,
                                     long long vertex_cap) {
    const NetworkCase& c = ctx.network;
    const int N = c.num_buses();
    const int G = c.num_generators();
    const double budget = ctx.cfg.gamma_u;
    int k = static_cast<int>(std::floor(std::max(0.0, budget)));
    double frac = std::max(0.0, budget) - k;
    if (k >= N) {
        k = N;
        frac = 0.0;
    }
    // Vertex count: C(N,k) * 2^k, times 2(N-k) when a fractional entry exists.
    double count = 1.0;
    for (int i = 0; i < k; ++i) {
        count = count * (N - i) / (i + 1);
    }
    count *= std::pow(2.0, k);
    if (frac > 0.0) {
        count *= 2.0 * (N - k);
    }
    if (count > static_cast<double>(vertex_cap)) {
        throw std::length_error("budget set has " + std::to_string(static_cast<long long>(count)) +
                                " vertices, above the cap of " + std::to_string(vertex_cap));
    }

    const AngleFlow af(c);
    const auto& dhat = ctx.trace.bus_mw[t];
    const double eps = ctx.cfg.eps;
    const std::vector<double>& alpha = ctx.protection.alpha;

    auto injection_for = [&](const std::vector<double>& xi, double& total_dev) {
        std::vector<double> inj(N);
        total_dev = 0.0;
        for (int n = 0; n < N; ++n) {
            const double dev = eps * dhat[n] * xi[n];
            total_dev += dev;
            inj[n] = -(dhat[n] + dev);
        }
        for (int i = 0; i < G; ++i) {
            inj[ctx.gen_pos[i]] += out.g[i] + alpha[i] * total_dev;
        }
        inj[ctx.aidc_pos] -= out.p_acc;
        return inj;
    };

    RobustCheck rep;
    rep.max_flow_excursion.assign(c.num_lines(), 0.0);
    double dummy = 0.0;
    const std::vector<double> f0 = af.flows(injection_for(std::vector<double>(N, 0.0), dummy));

    auto evaluate = [&](const std::vector<double>& xi) {
        ++rep.vertices;
        double total_dev = 0.0;
        const std::vector<double> inj = injection_for(xi, total_dev);
        rep.max_total_excursion = std::max(rep.max_total_excursion, total_dev);
        // Nodal balance at the reference bus absorbs any mismatch; it must vanish.
        const double mismatch = std::accumulate(inj.begin(), inj.end(), 0.0);
        rep.max_violation = std::max(rep.max_violation, std::abs(mismatch));
        const std::vector<double> f = af.flows(inj);
        for (int l = 0; l < c.num_lines(); ++l) {
            rep.max_flow_excursion[l] = std::max(rep.max_flow_excursion[l], f[l] - f0[l]);
            rep.max_violation =
                std::max(rep.max_violation, std::abs(f[l]) - ctx.rating_scale * c.lines[l].f_max_mw);
        }
        for (int i = 0; i < G; ++i) {
            const double g = out.g[i] + alpha[i] * total_dev;
            rep.max_violation = std::max(
                {rep.max_violation, c.generators[i].g_min_mw - g, g - c.generators[i].g_max_mw});
        }
    };

    std::vector<int> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<double> xi(N, 0.0);
    while (true) {
        for (long long mask = 0; mask < (1LL << k); ++mask) {
            std::fill(xi.begin(), xi.end(), 0.0);
            for (int j = 0; j < k; ++j) {
                xi[pick[j]] = (mask >> j) & 1 ? -1.0 : 1.0;
            }
            if (frac > 0.0) {
                for (int n = 0; n < N; ++n) {
                    if (xi[n] != 0.0) {
                        continue;
                    }
                    xi[n] = frac;
                    evaluate(xi);
                    xi[n] = -frac;
                    evaluate(xi);
                    xi[n] = 0.0;
                }
            } else {
                evaluate(xi);
            }
        }
        int i = k - 1;
        while (i >= 0 && pick[i] == N - k + i) {
            --i;
        }
        if (i < 0) {
            break;
        }
        ++pick[i];
        for (int j = i + 1; j < k; ++j) {
            pick[j] = pick[j - 1] + 1;
        }
    }
    return rep;
}

void write_acceptance_header(std::ostream& os) {
    os << "t,p_req_mw,p_acc_mw,kappa_mw,mechanism,dispatch_cost,max_line_utilization\n";
}

void write_acceptance_row(std::ostream& os, const AcceptanceOutcome& out) {
    const auto prec = os.precision(10);
    os << out.t + 1 << ',' << out.p_req << ',' << out.p_acc << ',' << out.kappa << ','
       << to_string(out.mechanism) << ',' << out.dispatch_cost << ',' << out.max_line_utilization << '\n';
    os.precision(prec);
}

}  // namespace aidcsim::grid
