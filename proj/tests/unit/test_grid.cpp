#include "aidcsim/grid.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <random>

using namespace aidcsim;
using namespace aidcsim::grid;

namespace {

// Independent DC power flow: Laplacian solve with the reference row removed,
// flows b_l (theta_from - theta_to) in MW.
std::vector<double> dc_flows(const NetworkCase& c, const std::vector<double>& inj) {
    const int n = c.num_buses();
    const int ref = c.bus_index(c.ref_bus);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (const Line& l : c.lines) {
        const int i = c.bus_index(l.from), j = c.bus_index(l.to);
        const double y = l.b_pu * c.mva_base;
        b(i, i) += y;
        b(j, j) += y;
        b(i, j) -= y;
        b(j, i) -= y;
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
        if (i != ref) {
            keep.push_back(i);
        }
    }
    const int m = n - 1;
    Eigen::MatrixXd br(m, m);
    Eigen::VectorXd p(m);
    for (int r = 0; r < m; ++r) {
        p[r] = inj[keep[r]];
        for (int s = 0; s < m; ++s) {
            br(r, s) = b(keep[r], keep[s]);
        }
    }
    const Eigen::VectorXd th_r = br.colPivHouseholderQr().solve(p);
    Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < m; ++r) {
        th[keep[r]] = th_r[r];
    }
    std::vector<double> f;
    for (const Line& l : c.lines) {
        f.push_back(l.b_pu * c.mva_base * (th[c.bus_index(l.from)] - th[c.bus_index(l.to)]));
    }
    return f;
}

// Brute-force worst case of sum xi_n c_n over the budget set by enumerating
// every support/sign pattern, with the fractional entry tried on each free bus.
double enumerate_protection(const std::vector<double>& c, double budget) {
    const int n = static_cast<int>(c.size());
    const int k = std::min(n, static_cast<int>(std::floor(budget)));
    const double frac = k < n ? budget - std::floor(budget) : 0.0;
    double best = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        if (__builtin_popcount(mask) != k) {
            continue;
        }
        double base = 0.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1 << i)) {
                base += std::max(c[i], -c[i]);  // best sign
            }
        }
        best = std::max(best, base);
        for (int j = 0; j < n; ++j) {
            if (!(mask & (1 << j))) {
                best = std::max(best, base + frac * std::abs(c[j]));
            }
        }
    }
    return best;
}

GridContext toy_ctx(const NetworkCase& c, double demand, double gamma_u = 0.0, double eps = 0.05,
                    double r_grid = 150.0, int steps = 1) {
    return make_grid_context(c, fixtures::flat_trace(c, steps, demand), fixtures::tso(gamma_u, eps, r_grid), 1.0);
}

Scenario bundled_day() {
    Scenario s = load_scenario(fixtures::data_path("scenarios/stress_day.json"));
    return s;
}

}  // namespace

TEST(Ptdf, TwoBusSinglePath) {
    const NetworkCase c = fixtures::make_case({1, 2}, {{1, 2, 5.0, 500.0}}, {{1, 0, 1000, 10, 100, "coal"}}, 1, 2,
                                              {{1, 0.5}, {2, 0.5}});
    const Ptdf p = compute_ptdf(c);
    const std::vector<double> inj{100.0, -100.0};
    EXPECT_NEAR(p.flows(inj)[0], 100.0, 1e-9);
}

TEST(Ptdf, TriangleSplitsTwoToOne) {
    const NetworkCase c = fixtures::toy3();
    const Ptdf p = compute_ptdf(c);
    const std::vector<double> inj{90.0, -90.0, 0.0};
    const auto f = p.flows(inj);
    const auto oracle = dc_flows(c, inj);
    EXPECT_NEAR(f[0], 60.0, 1e-9);   // 1-2 direct
    EXPECT_NEAR(f[1], -30.0, 1e-9);  // 2-3, flowing 3 -> 2
    EXPECT_NEAR(f[2], 30.0, 1e-9);   // 1-3
    for (int l = 0; l < 3; ++l) {
        EXPECT_NEAR(f[l], oracle[l], 1e-9);
    }
}

TEST(Ptdf, ReferenceColumnIsZero) {
    const NetworkCase c = load_network_case(fixtures::data_path("cases/ieee39.json"));
    const Ptdf p = compute_ptdf(c);
    EXPECT_EQ(p.m.rows(), 46);
    EXPECT_EQ(p.m.cols(), 39);
    EXPECT_EQ(p.m.col(p.ref).cwiseAbs().maxCoeff(), 0.0);
    std::vector<double> inj(39, 0.0);
    inj[p.ref] = 250.0;
    for (double f : p.flows(inj)) {
        EXPECT_EQ(f, 0.0);
    }
}

TEST(Ptdf, MatchesAngleFlowOnRandomBalancedInjections) {
    const NetworkCase c = load_network_case(fixtures::data_path("cases/ieee39.json"));
    const Ptdf p = compute_ptdf(c);
    const AngleFlow af(c);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-400.0, 400.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> inj(39);
        for (double& v : inj) {
            v = u(rng);
        }
        const double sum = std::accumulate(inj.begin(), inj.end(), 0.0);
        inj[7] -= sum;
        const auto a = p.flows(inj);
        const auto b = af.flows(inj);
        const auto o = dc_flows(c, inj);
        for (int l = 0; l < 46; ++l) {
            ASSERT_NEAR(a[l], b[l], 1e-8);
            ASSERT_NEAR(a[l], o[l], 1e-8);
        }
    }
}

TEST(Ptdf, DisconnectedNetworkIsRejected) {
    NetworkCase c = fixtures::make_case({1, 2, 3}, {{1, 2, 5.0, 500.0}}, {{1, 0, 1000, 10, 100, "coal"}}, 1, 2,
                                        {{1, 0.5}, {2, 0.5}});
    EXPECT_THROW(compute_ptdf(c), std::runtime_error);
}

TEST(Baseline, SingleGeneratorBalance) {
    const NetworkCase c = fixtures::make_case({1, 2}, {{1, 2, 5.0, 5000.0}}, {{1, 0, 1000, 10, 4000, "coal"}}, 1, 2,
                                              {{1, 0.0}, {2, 1.0}});
    const auto tr = fixtures::flat_trace(c, 1, 500.0);
    const auto b = solve_baseline_dispatch(c, tr, 1.0, {});
    EXPECT_NEAR(b.g[0][0], 500.0, 1e-7);
    EXPECT_NEAR(b.total_cost, 5000.0, 1e-6);
}

TEST(Baseline, MeritOrder) {
    const NetworkCase c = fixtures::make_case(
        {1, 2}, {{1, 2, 5.0, 5000.0}}, {{1, 0, 1000, 120, 4000, "gas"}, {2, 0, 1000, 10, 4000, "coal"}}, 1, 2,
        {{1, 0.5}, {2, 0.5}});
    const auto tr = fixtures::flat_trace(c, 3, 700.0);
    const auto b = solve_baseline_dispatch(c, tr, 1.0, {});
    for (int t = 0; t < 3; ++t) {
        EXPECT_NEAR(b.g[t][1], 700.0, 1e-7);
        EXPECT_NEAR(b.g[t][0], 0.0, 1e-7);
    }
}

TEST(Baseline, InfeasibleDemandNamesAStep) {
    const NetworkCase c = fixtures::make_case({1, 2}, {{1, 2, 5.0, 5000.0}}, {{1, 0, 400, 10, 4000, "coal"}}, 1, 2,
                                              {{1, 0.5}, {2, 0.5}});
    const auto tr = fixtures::flat_trace(c, 2, 700.0);
    EXPECT_THROW(solve_baseline_dispatch(c, tr, 1.0, {}), TsoInfeasible);
}

TEST(Baseline, BundledDayIsRampFeasibleAndMatchesAngleForm) {
    const Scenario s = bundled_day();
    ExogenousTrace tr = s.trace;
    attach_bus_forecast(tr, s.network);
    const auto b = solve_baseline_dispatch(s.network, tr, s.line_rating_scale, {});
    const auto chk = verify_baseline(s.network, tr, s.line_rating_scale, b);
    EXPECT_LE(chk.worst(), 1e-6);
    for (int t = 1; t < tr.steps(); ++t) {
        for (int i = 0; i < s.network.num_generators(); ++i) {
            ASSERT_LE(std::abs(b.g[t][i] - b.g[t - 1][i]),
                      s.network.generators[i].ramp_mw_per_h * tr.dt_h + 1e-6);
        }
    }
    const double angle = solve_baseline_angle_form(s.network, tr, s.line_rating_scale);
    EXPECT_NEAR(b.total_cost, angle, 1e-4 * angle);
}

TEST(Baseline, WindowsMatchMonolithic) {
    const Scenario s = bundled_day();
    ExogenousTrace tr = s.trace;
    attach_bus_forecast(tr, s.network);
    const auto mono = solve_baseline_dispatch(s.network, tr, s.line_rating_scale, {});
    const auto win = solve_baseline_dispatch(s.network, tr, s.line_rating_scale, {32, 24});
    EXPECT_GT(win.windows, 1);
    EXPECT_LE(verify_baseline(s.network, tr, s.line_rating_scale, win).worst(), 1e-6);
    EXPECT_NEAR(win.total_cost, mono.total_cost, 1e-4 * mono.total_cost);
}

TEST(Protection, SortedPartialSumMatchesEnumeration) {
    const std::vector<double> c{5.0, -3.0, 2.0};
    EXPECT_DOUBLE_EQ(budget_protection(c, 2.0), 8.0);
    EXPECT_DOUBLE_EQ(enumerate_protection(c, 2.0), 8.0);
    EXPECT_DOUBLE_EQ(budget_protection(c, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(budget_protection(c, 3.0), 10.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_real_distribution<double> gb(0.0, 7.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(7);
        for (double& x : v) {
            x = u(rng);
        }
        const double g = gb(rng);
        ASSERT_NEAR(budget_protection(v, g), enumerate_protection(v, g), 1e-9);
    }
}

TEST(Protection, ZeroBudgetGivesZeroTerms) {
    const Scenario s = bundled_day();
    ExogenousTrace tr = s.trace;
    attach_bus_forecast(tr, s.network);
    const auto p = protection_terms(compute_ptdf(s.network), tr, fixtures::tso(0.0, 0.1), s.network);
    for (int t = 0; t < tr.steps(); ++t) {
        EXPECT_EQ(p.delta_d[t], 0.0);
        for (double v : p.delta_f[t]) {
            EXPECT_EQ(v, 0.0);
        }
    }
    EXPECT_NEAR(std::accumulate(p.alpha.begin(), p.alpha.end(), 0.0), 1.0, 1e-12);
}

TEST(Protection, MonotoneInBudgetAndDeviation) {
    const Scenario s = bundled_day();
    ExogenousTrace tr = s.trace.window(0, 8);
    attach_bus_forecast(tr, s.network);
    const Ptdf ptdf = compute_ptdf(s.network);
    const std::vector<double> gammas{0, 0.5, 1, 2, 3.7, 5, 8, 10, 39};
    const std::vector<double> eps{0.01, 0.04, 0.07, 0.1, 0.13};
    for (std::size_t e = 0; e < eps.size(); ++e) {
        ProtectionTerms prev;
        for (std::size_t g = 0; g < gammas.size(); ++g) {
            const auto cur = protection_terms(ptdf, tr, fixtures::tso(gammas[g], eps[e]), s.network);
            if (e > 0) {
                const auto lower = protection_terms(ptdf, tr, fixtures::tso(gammas[g], eps[e - 1]), s.network);
                for (int t = 0; t < tr.steps(); ++t) {
                    ASSERT_GE(cur.delta_d[t] + 1e-12, lower.delta_d[t]);
                    for (int l = 0; l < s.network.num_lines(); ++l) {
                        ASSERT_GE(cur.delta_f[t][l] + 1e-12, lower.delta_f[t][l]);
                    }
                }
            }
            if (g > 0) {
                for (int t = 0; t < tr.steps(); ++t) {
                    ASSERT_GE(cur.delta_d[t] + 1e-12, prev.delta_d[t]);
                    for (int l = 0; l < s.network.num_lines(); ++l) {
                        ASSERT_GE(cur.delta_f[t][l] + 1e-12, prev.delta_f[t][l]);
                    }
                }
            }
            prev = cur;
        }
    }
}

TEST(Protection, FullBudgetIsBoxWorstCase) {
    const NetworkCase c = fixtures::toy4();
    const auto tr = fixtures::flat_trace(c, 1, 1000.0);
    const Ptdf ptdf = compute_ptdf(c);
    const auto p = protection_terms(ptdf, tr, fixtures::tso(4.0, 0.1), c);
    for (int l = 0; l < c.num_lines(); ++l) {
        const auto imp = line_impacts(ptdf, c, p.alpha, tr.bus_mw[0], 0.1, l);
        double box = 0.0;
        for (double v : imp) {
            box += std::abs(v);
        }
        EXPECT_NEAR(p.delta_f[0][l], box, 1e-9);
    }
    EXPECT_NEAR(p.delta_d[0], 100.0, 1e-9);
}

TEST(Acceptance, AmpleRatingsAcceptEverything) {
    const GridContext ctx = toy_ctx(fixtures::toy3(), 500.0);
    const auto out = robust_acceptance_step(ctx, 100.0, 0, {});
    EXPECT_EQ(out.kappa, 0.0);
    EXPECT_EQ(out.p_acc, 100.0);
    EXPECT_EQ(out.mechanism, Mechanism::None);
}

TEST(Acceptance, PccRampBinds) {
    const GridContext ctx = toy_ctx(fixtures::toy3(), 500.0);
    TsoState st;
    st.has_prev = true;
    st.g_prev = ctx.baseline.g[0];
    st.p_acc_prev = 900.0;
    const auto out = robust_acceptance_step(ctx, 1100.0, 0, st);
    EXPECT_NEAR(out.p_acc, 1050.0, 1e-7);
    EXPECT_NEAR(out.kappa, 50.0, 1e-7);
    EXPECT_EQ(out.p_acc, 1100.0 - out.kappa);
    EXPECT_EQ(out.mechanism, Mechanism::Ramp);
    // Without the PCC limit the same request is fully accepted.
    const GridContext wide = toy_ctx(fixtures::toy3(), 500.0, 0.0, 0.05, 1e6);
    EXPECT_EQ(robust_acceptance_step(wide, 1100.0, 0, st).kappa, 0.0);
}

TEST(Acceptance, PccRampDoesNotLimitDecreases) {
    const GridContext ctx = toy_ctx(fixtures::toy3(), 500.0);
    TsoState st;
    st.has_prev = true;
    st.g_prev = ctx.baseline.g[0];
    st.p_acc_prev = 900.0;
    const auto out = robust_acceptance_step(ctx, 300.0, 0, st);
    EXPECT_EQ(out.kappa, 0.0);
}

TEST(Acceptance, CongestionMatchesGridSearchOracle) {
    // Line 1-2 is tight and the expensive unit at bus 3 is small, so the AIDC
    // at bus 2 cannot be fully served from either side.
    NetworkCase c = fixtures::toy3(300.0, 5000.0);
    c.generators[1].g_max_mw = 300.0;
    const GridContext ctx = toy_ctx(c, 500.0);
    const double p_req = 800.0;
    const auto out = robust_acceptance_step(ctx, p_req, 0, {});
    ASSERT_GT(out.kappa, 1.0);
    EXPECT_EQ(out.mechanism, Mechanism::Congestion);

    // Oracle: for a given P_acc the unit at bus 3 takes g3, the unit at bus 1
    // the remainder; flows are affine in g3, so each limit cuts an interval.
    const auto& d = ctx.trace.bus_mw[0];
    auto feasible = [&](double p_acc) {
        const double total = d[0] + d[1] + d[2] + p_acc;
        double lo = std::max(0.0, total - c.generators[0].g_max_mw);
        double hi = std::min(c.generators[1].g_max_mw, total);
        auto inj = [&](double g3) { return std::vector<double>{total - g3 - d[0], -d[1] - p_acc, g3 - d[2]}; };
        const auto f0 = dc_flows(c, inj(0.0));
        const auto f1 = dc_flows(c, inj(1.0));
        for (int l = 0; l < 3; ++l) {
            const double slope = f1[l] - f0[l];
            const double r = c.lines[l].f_max_mw;
            if (std::abs(slope) < 1e-12) {
                if (std::abs(f0[l]) > r + 1e-9) {
                    return false;
                }
                continue;
            }
            double a = (-r - f0[l]) / slope, b = (r - f0[l]) / slope;
            if (a > b) {
                std::swap(a, b);
            }
            lo = std::max(lo, a);
            hi = std::min(hi, b);
        }
        return lo <= hi + 1e-9;
    };
    double best = 0.0;
    for (int i = 0; i <= 80000; ++i) {
        const double p = 0.01 * i;
        if (feasible(p)) {
            best = p;
        }
    }
    EXPECT_NEAR(out.p_acc, best, 0.011);
}

TEST(Acceptance, LastResortCurtailment) {
    // Whenever curtailment is reported, pinning it to zero (or to slightly less)
    // must be infeasible.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rating(150.0, 900.0);
    std::uniform_real_distribution<double> req(0.0, 1500.0);
    int curtailed = 0;
    for (int trial = 0; trial < 60; ++trial) {
        NetworkCase c = fixtures::toy3(rating(rng), rating(rng));
        const GridContext ctx = toy_ctx(c, 400.0);
        const double p_req = req(rng);
        AcceptanceOutcome out;
        try {
            out = robust_acceptance_step(ctx, p_req, 0, {});
        } catch (const TsoInfeasible&) {
            continue;
        }
        ASSERT_EQ(out.p_acc, p_req - out.kappa);
        ASSERT_GE(out.kappa, 0.0);
        ASSERT_LE(out.kappa, p_req);
        if (out.kappa > 1e-6) {
            ++curtailed;
            StepOptions pin;
            pin.fixed_kappa = 0.0;
            EXPECT_THROW(robust_acceptance_step(ctx, p_req, 0, {}, pin), TsoInfeasible);
            pin.fixed_kappa = out.kappa - 1e-3;
            EXPECT_THROW(robust_acceptance_step(ctx, p_req, 0, {}, pin), TsoInfeasible);
        }
    }
    EXPECT_GT(curtailed, 5);
}

TEST(Acceptance, ZeroRequestReproducesBaselineCostWithoutRampCoupling) {
    // With ramp limits that never bind, the horizon baseline is a sequence of
    // static optima and the per-step problem must reproduce it exactly.
    Scenario s = bundled_day();
    for (Generator& g : s.network.generators) {
        g.ramp_mw_per_h = 1e5;
    }
    TsoConfig cfg = s.tso;
    cfg.gamma_u = 0.0;
    const GridContext ctx = make_grid_context(s.network, s.trace, cfg, s.line_rating_scale);
    TsoState st;
    for (int t = 0; t < ctx.trace.steps(); ++t) {
        const auto out = robust_acceptance_step(ctx, 0.0, t, st);
        ASSERT_NEAR(out.dispatch_cost, ctx.baseline.step_cost[t], 1e-6 * ctx.baseline.step_cost[t]) << "step " << t;
        ASSERT_EQ(out.kappa, 0.0);
        st = advance(out);
    }
}

TEST(Acceptance, FirstDepartureFromBaselineIsCheaper) {
    // With binding baseline ramps the myopic step may leave the horizon
    // trajectory, but only where that is cheaper: the baseline point itself
    // stays feasible while the previous dispatch matches it.
    const Scenario s = bundled_day();
    TsoConfig cfg = s.tso;
    cfg.gamma_u = 0.0;
    const GridContext ctx = make_grid_context(s.network, s.trace, cfg, s.line_rating_scale);
    TsoState st;
    for (int t = 0; t < ctx.trace.steps(); ++t) {
        const auto out = robust_acceptance_step(ctx, 0.0, t, st);
        double dev = 0.0;
        for (int i = 0; i < s.network.num_generators(); ++i) {
            dev += std::abs(out.g[i] - ctx.baseline.g[t][i]);
        }
        ASSERT_EQ(out.kappa, 0.0);
        ASSERT_LE(out.dispatch_cost + cfg.rho * dev, ctx.baseline.step_cost[t] * (1 + 1e-9)) << "step " << t;
        if (dev > 1e-6) {
            break;
        }
        st = advance(out);
    }
}

TEST(Acceptance, EmptyProtectedRangeIsInfeasible) {
    // Tiny generation headroom: the protected output range of the only unit
    // collapses and the step is reported infeasible, never as full curtailment.
    NetworkCase c = fixtures::toy3();
    c.generators[0].g_max_mw = 420.0;
    c.generators[1].g_max_mw = 100.0;
    const GridContext ctx = toy_ctx(c, 500.0, 3.0, 0.13);
    EXPECT_THROW(robust_acceptance_step(ctx, 50.0, 0, {}), TsoInfeasible);
}

TEST(RobustCheck, SlackStepIsRobustlyFeasible) {
    const GridContext ctx = toy_ctx(fixtures::toy3(), 500.0, 1.0, 0.1);
    const auto out = robust_acceptance_step(ctx, 200.0, 0, {});
    const auto rep = check_robust_feasibility(out, ctx, 0);
    EXPECT_EQ(rep.vertices, 6);
    EXPECT_LE(rep.max_violation, 1e-6);
}

TEST(RobustCheck, ZeroBudgetHasOneVertex) {
    const GridContext ctx = toy_ctx(fixtures::toy3(), 500.0, 0.0, 0.1);
    const auto out = robust_acceptance_step(ctx, 200.0, 0, {});
    const auto rep = check_robust_feasibility(out, ctx, 0);
    EXPECT_EQ(rep.vertices, 1);
    EXPECT_LE(rep.max_violation, 1e-6);
}

TEST(RobustCheck, CorruptedOutcomeIsFlagged) {
    NetworkCase c = fixtures::toy3(300.0, 5000.0);
    c.generators[1].g_max_mw = 300.0;
    const GridContext ctx = toy_ctx(c, 500.0, 1.0, 0.05);
    auto out = robust_acceptance_step(ctx, 800.0, 0, {});
    ASSERT_GT(out.kappa, 10.0);
    EXPECT_LE(check_robust_feasibility(out, ctx, 0).max_violation, 1e-6);
    out.kappa -= 10.0;
    out.p_acc += 10.0;
    EXPECT_GT(check_robust_feasibility(out, ctx, 0).max_violation, 1.0);
}

TEST(RobustCheck, RefusesHugeVertexSets) {
    const Scenario s = bundled_day();
    TsoConfig cfg = s.tso;
    cfg.gamma_u = 10.0;
    const GridContext ctx = make_grid_context(s.network, s.trace.window(0, 1), cfg, s.line_rating_scale);
    AcceptanceOutcome out;
    out.g = ctx.baseline.g[0];
    EXPECT_THROW(check_robust_feasibility(out, ctx, 0), std::length_error);
}

TEST(RobustCheck, ToyOutcomesAcrossBudgets) {
    for (double gamma : {0.0, 1.0, 2.0}) {
        const NetworkCase c = fixtures::toy4();
        const GridContext ctx = toy_ctx(c, 1100.0, gamma, 0.1, 150.0, 4);
        TsoState st;
        for (int t = 0; t < 4; ++t) {
            const auto out = robust_acceptance_step(ctx, 100.0 + 120.0 * t, t, st);
            const auto rep = check_robust_feasibility(out, ctx, t);
            EXPECT_LE(rep.max_violation, 1e-6);
            for (int l = 0; l < c.num_lines(); ++l) {
                EXPECT_NEAR(rep.max_flow_excursion[l], ctx.protection.delta_f[t][l], 1e-9);
            }
            EXPECT_NEAR(rep.max_total_excursion, ctx.protection.delta_d[t], 1e-9);
            st = advance(out);
        }
    }
}

TEST(AcceptanceLog, HeaderAndRow) {
    std::ostringstream os;
    write_acceptance_header(os);
    AcceptanceOutcome out;
    out.t = 4;
    out.p_req = 100.0;
    out.p_acc = 90.0;
    out.kappa = 10.0;
    out.mechanism = Mechanism::Ramp;
    write_acceptance_row(os, out);
    EXPECT_EQ(os.str(),
              "t,p_req_mw,p_acc_mw,kappa_mw,mechanism,dispatch_cost,max_line_utilization\n"
              "5,100,90,10,ramp,0,0\n");
}
