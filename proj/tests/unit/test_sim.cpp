#include "aidcsim/env.hpp"
#include "aidcsim/sim.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>
#include <thread>

using namespace aidcsim;
using nlohmann::json;

namespace {

struct Loaded {
    Scenario scenario;
    std::shared_ptr<const grid::GridContext> ctx;
};

// Contexts are expensive; build each bundled scenario once per process.
const Loaded& bundled(const std::string& file) {
    static std::map<std::string, Loaded> cache;
    auto it = cache.find(file);
    if (it == cache.end()) {
        Loaded l;
        l.scenario = load_scenario(fixtures::data_path("scenarios/" + file));
        l.ctx = std::make_shared<const grid::GridContext>(grid::make_grid_context(l.scenario));
        it = cache.emplace(file, std::move(l)).first;
    }
    return it->second;
}

sim::EpisodeRecord run(const std::string& file, const std::string& policy) {
    const Loaded& l = bundled(file);
    auto pol = sim::make_policy(policy, l.scenario, 0, l.scenario.trace.steps());
    return sim::run_episode(l.scenario, l.ctx, *pol);
}

// Largest AIDC draw the network can carry at step t with generator limits and
// line ratings only.
double static_capacity(const grid::GridContext& ctx, int t) {
    const NetworkCase& c = ctx.network;
    lp::LinearProgram prob;
    const int p = prob.add_variable("p", 0.0, 1e5, -1.0);
    std::vector<int> g;
    for (int i = 0; i < c.num_generators(); ++i) {
        g.push_back(prob.add_variable("g" + std::to_string(i), c.generators[i].g_min_mw, c.generators[i].g_max_mw));
    }
    const auto& d = ctx.trace.bus_mw[t];
    double total = 0.0;
    for (double x : d) {
        total += x;
    }
    std::vector<lp::Term> bal;
    for (int v : g) {
        bal.push_back({v, 1.0});
    }
    bal.push_back({p, -1.0});
    prob.add_constraint("balance", bal, lp::Relation::Equal, total);
    for (int l = 0; l < c.num_lines(); ++l) {
        std::vector<lp::Term> row;
        double fixed = 0.0;
        for (int i = 0; i < c.num_generators(); ++i) {
            row.push_back({g[i], ctx.ptdf(l, ctx.gen_pos[i])});
        }
        for (int n = 0; n < c.num_buses(); ++n) {
            fixed -= ctx.ptdf(l, n) * d[n];
        }
        row.push_back({p, -ctx.ptdf(l, ctx.aidc_pos)});
        const double r = ctx.rating_scale * c.lines[l].f_max_mw;
        prob.add_range("f" + std::to_string(l), row, -r - fixed, r - fixed);
    }
    const auto sol = lp::solve_lp(prob);
    EXPECT_EQ(sol.status, lp::LpStatus::Optimal);
    return sol.x[p];
}

json ask(env::Session& s, const json& msg) { return json::parse(s.handle(msg.dump())); }

}  // namespace

TEST(Reward, Examples) {
    const AidcConfig cfg = default_aidc_config();
    const int T = 96;
    const double dt = 0.25;
    const double w1a = cfg.cluster(Group::Frontier).w_req, w1b = cfg.cluster(Group::Batch).w_req;
    // On schedule after step 10.
    const std::array<double, 2> on{10.0 / T * w1a * T * dt, 10.0 / T * w1b * T * dt};
    EXPECT_NEAR(sim::step_reward(on, 0.0, 0.0, 10, T, dt, cfg).total(), 0.0, 1e-12);
    const auto k = sim::step_reward(on, 0.0, 64.8, 10, T, dt, cfg);
    EXPECT_NEAR(k.total(), -0.324, 1e-12);
    EXPECT_NEAR(k.curtailment, -0.324, 1e-12);
    const auto rej = sim::step_reward(on, 0.5 - 0.3, 0.0, 10, T, dt, cfg);
    EXPECT_NEAR(rej.rejection, -0.15, 1e-12);
    // Behind schedule: only the urgency term moves.
    const std::array<double, 2> behind{0.0, on[1]};
    const auto u = sim::step_reward(behind, 0.0, 0.0, 10, T, dt, cfg);
    EXPECT_NEAR(u.urgency, -cfg.alpha_w * cfg.m_1a * (10.0 / T), 1e-12);
    EXPECT_EQ(u.rejection, 0.0);
}

TEST(Reward, ShortfallRatio) {
    EXPECT_EQ(sim::shortfall_ratio(0.0, 0.0, 5, 96, 0.25), 0.0);
    EXPECT_NEAR(sim::shortfall_ratio(0.0, 0.9, 48, 96, 0.25), 0.5, 1e-12);
    EXPECT_EQ(sim::shortfall_ratio(24.0, 0.9, 48, 96, 0.25), 0.0);
}

TEST(Episode, UnconstrainedDayHasNoCurtailment) {
    for (const char* policy : {"heuristic", "fixed-buffer"}) {
        const auto ep = run("unconstrained_day.json", policy);
        ASSERT_FALSE(ep.aborted) << ep.abort_reason;
        ASSERT_EQ(static_cast<int>(ep.steps.size()), ep.horizon);
        for (const auto& s : ep.steps) {
            EXPECT_EQ(s.kappa, 0.0);
            EXPECT_EQ(s.p_acc, s.p_req);
            EXPECT_EQ(s.mechanism, grid::Mechanism::None);
        }
        const auto m = sim::compute_metrics(ep, bundled("unconstrained_day.json").scenario.aidc);
        EXPECT_EQ(m.curtail_freq_pct, 0.0);
        EXPECT_EQ(m.curtailed_energy_mwh, 0.0);
        EXPECT_EQ(m.curtailed_steps, 0);
    }
}

TEST(Episode, StepInvariants) {
    const Loaded& l = bundled("congestion_spike.json");
    const auto ep = run("congestion_spike.json", "heuristic");
    ASSERT_FALSE(ep.aborted) << ep.abort_reason;
    std::array<double, 2> w{};
    for (const auto& s : ep.steps) {
        EXPECT_EQ(s.p_acc, s.p_req - s.kappa);
        EXPECT_GE(s.kappa, 0.0);
        EXPECT_LE(s.kappa, s.p_req);
        EXPECT_LE(std::abs(s.exec.balance_residual_mw), 1e-6);
        EXPECT_EQ(s.reward, s.parts.urgency + s.parts.rejection + s.parts.curtailment);
        EXPECT_GE(s.state_after.e_bess_mwh, l.scenario.aidc.bess.e_min_mwh);
        EXPECT_LE(s.state_after.e_bess_mwh, l.scenario.aidc.bess.e_max_mwh);
        w[0] += s.exec.x.s[0] * ep.dt_h;
        w[1] += s.exec.x.s[1] * ep.dt_h;
    }
    EXPECT_NEAR(ep.delivered_h[0], w[0], 1e-9);
    EXPECT_NEAR(ep.delivered_h[1], w[1], 1e-9);
}

TEST(Episode, CongestionTagAgreesWithStaticOracle) {
    const Loaded& l = bundled("congestion_spike.json");
    const auto ep = run("congestion_spike.json", "heuristic");
    ASSERT_FALSE(ep.aborted) << ep.abort_reason;
    int tagged = 0;
    for (const auto& s : ep.steps) {
        const double cap = static_capacity(*l.ctx, s.trace_row);
        if (s.mechanism == grid::Mechanism::Congestion) {
            ++tagged;
            EXPECT_LT(cap, s.p_req - 1e-6) << "step " << s.t;
            EXPECT_GE(s.kappa, s.p_req - cap - 1e-6) << "step " << s.t;
        }
        if (s.kappa == 0.0) {
            EXPECT_GE(cap, s.p_req - 1e-6) << "step " << s.t;
        }
    }
    EXPECT_GE(tagged, 1);
}

TEST(Episode, Deterministic) {
    const auto a = run("congestion_spike.json", "heuristic");
    const auto b = run("congestion_spike.json", "heuristic");
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        ASSERT_EQ(a.steps[i].p_req, b.steps[i].p_req);
        ASSERT_EQ(a.steps[i].kappa, b.steps[i].kappa);
        ASSERT_EQ(a.steps[i].reward, b.steps[i].reward);
        ASSERT_EQ(a.steps[i].exec.x.s, b.steps[i].exec.x.s);
        ASSERT_EQ(a.steps[i].state_after.e_bess_mwh, b.steps[i].state_after.e_bess_mwh);
    }
    std::ostringstream x, y;
    sim::write_execution_csv(x, a);
    sim::write_execution_csv(y, b);
    EXPECT_EQ(x.str(), y.str());
}

TEST(Episode, ActionOutsideUnitBoxRejected) {
    const Loaded& l = bundled("unconstrained_day.json");
    sim::Episode ep(l.scenario, l.ctx, 0, 4);
    plant::PlanningAction a;
    a.s = {1.2, 0, 0};
    EXPECT_THROW(ep.step(a), std::invalid_argument);
    EXPECT_THROW(sim::Episode(l.scenario, l.ctx, 90, 10), std::out_of_range);
}

TEST(Metrics, IdleBatteryAndZeroLag) {
    const Loaded& l = bundled("unconstrained_day.json");
    sim::Episode ep(l.scenario, l.ctx, 0, l.scenario.trace.steps());
    plant::PlanningAction full;
    full.s = {1, 1, 1};
    while (!ep.done()) {
        ep.step(full);
    }
    const auto m = sim::compute_metrics(ep.record(), l.scenario.aidc);
    EXPECT_DOUBLE_EQ(m.bess_idle_pct, 100.0);
    EXPECT_EQ(m.terminal_soc_dev_mwh, 0.0);
    for (int k = 0; k < 2; ++k) {
        for (double lag : m.completion_lag_pct[k]) {
            EXPECT_LE(lag, 1e-9);
        }
        EXPECT_LE(m.max_completion_lag_pct[k], 1e-9);
        EXPECT_GE(m.w_pct[k], 100.0);
    }
    EXPECT_EQ(m.curtail_freq_pct, 0.0);
}

TEST(Metrics, PeakOffPeakGroupsAndCurtailedEnergy) {
    const Loaded& l = bundled("congestion_spike.json");
    const auto ep = run("congestion_spike.json", "heuristic");
    const auto m = sim::compute_metrics(ep, l.scenario.aidc);
    double energy = 0.0, kappa = 0.0;
    int curtailed = 0;
    for (const auto& s : ep.steps) {
        energy += s.kappa * ep.dt_h;
        kappa += s.kappa;
        curtailed += s.kappa > 0.0;
    }
    EXPECT_NEAR(m.curtailed_energy_mwh, energy, 1e-9);
    EXPECT_NEAR(m.mean_kappa_mw, kappa / ep.steps.size(), 1e-9);
    EXPECT_EQ(m.curtailed_steps, curtailed);
    EXPECT_NEAR(m.curtail_freq_pct, 100.0 * curtailed / ep.steps.size(), 1e-12);
    EXPECT_DOUBLE_EQ(m.peak_threshold_mw, policy::percentile(ep.demand, 75.0));
    EXPECT_DOUBLE_EQ(m.offpeak_threshold_mw, policy::percentile(ep.demand, 25.0));
    double peak = 0.0;
    int n = 0;
    for (const auto& s : ep.steps) {
        if (ep.demand[s.t - 1] > m.peak_threshold_mw) {
            peak += s.p_req;
            ++n;
        }
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(m.p_req.peak, peak / n, 1e-9);
    for (double pct : {m.curtail_freq_pct, m.bess_idle_pct}) {
        EXPECT_GE(pct, 0.0);
        EXPECT_LE(pct, 100.0);
    }
}

TEST(Sweep, StructureOnStressDay) {
    const Loaded& l = bundled("stress_day.json");
    const std::vector<double> gammas{0, 2, 5, 8, 10}, eps{0.01, 0.04, 0.07, 0.10, 0.13};
    const auto cells = sim::run_sweep(l.scenario, *l.ctx, gammas, eps, "heuristic");
    ASSERT_EQ(cells.size(), 25u);
    auto at = [&](std::size_t g, std::size_t e) -> const sim::SweepCell& { return cells[g * eps.size() + e]; };
    // Zero budget: identical across eps and ramp-driven only.
    for (std::size_t e = 0; e < eps.size(); ++e) {
        ASSERT_TRUE(at(0, e).feasible);
        EXPECT_EQ(at(0, e).curtailed_steps, at(0, 0).curtailed_steps);
        for (const auto& [tag, count] : at(0, e).mechanisms) {
            EXPECT_EQ(tag, "ramp") << count;
        }
    }
    int infeasible = 0;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        for (std::size_t e = 0; e < eps.size(); ++e) {
            const auto& c = at(g, e);
            if (!c.feasible) {
                ++infeasible;
                EXPECT_FALSE(c.detail.empty());
                continue;
            }
            if (e > 0 && at(g, e - 1).feasible) {
                EXPECT_GE(c.curtailed_steps, at(g, e - 1).curtailed_steps - 1);
            }
            if (g > 0 && at(g - 1, e).feasible) {
                EXPECT_GE(c.curtailed_steps, at(g - 1, e).curtailed_steps - 1);
            }
        }
    }
    EXPECT_GT(infeasible, 0);
    std::ostringstream csv;
    sim::write_sweep_csv(csv, cells);
    EXPECT_NE(csv.str().find("infeasible"), std::string::npos);
    EXPECT_EQ(csv.str().rfind("gamma,eps,curtail_freq,status", 0), 0u);
}

TEST(Env, HelloResetAct) {
    env::Session s({env::register_scenario(bundled("unconstrained_day.json").scenario)});
    const json hello = ask(s, {{"type", "hello"}});
    EXPECT_EQ(hello["obs_dim"], 13);
    EXPECT_EQ(hello["act_dim"], 5);
    EXPECT_EQ(hello["feature_order"][6], "eta_1a");
    const json obs = ask(s, {{"type", "reset"}, {"scenario_id", "unconstrained-day"}, {"seed", 1}});
    ASSERT_EQ(obs["type"], "obs") << obs.dump();
    EXPECT_EQ(obs["t"], 1);
    EXPECT_EQ(obs["features"].size(), 13u);
    EXPECT_DOUBLE_EQ(obs["features"][policy::kEta1a].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(obs["features"][policy::kEta1b].get<double>(), 1.0);
    const json step = ask(s, {{"type", "act"}, {"action", {1, 1, 1, 0, 0}}});
    ASSERT_EQ(step["type"], "step") << step.dump();
    EXPECT_EQ(step["info"]["kappa"], 0.0);
    EXPECT_EQ(step["obs"]["t"], 2);
    EXPECT_FALSE(step["done"].get<bool>());
}

TEST(Env, ErrorsKeepSession) {
    env::Session s({env::register_scenario(bundled("unconstrained_day.json").scenario)});
    auto code = [&](const std::string& line) { return json::parse(s.handle(line))["code"].get<std::string>(); };
    EXPECT_EQ(code(R"({"type":"act","action":[1,1,1,0,0]})"), "no_episode");
    EXPECT_EQ(code("{oops"), "bad_json");
    EXPECT_EQ(code(R"({"type":"launch"})"), "unknown_type");
    EXPECT_EQ(code(R"({"type":"reset","seed":1})"), "missing_field");
    EXPECT_EQ(code(R"({"type":"reset","scenario_id":"nope","seed":1})"), "unknown_scenario");
    const json ok = json::parse(s.handle(R"({"type":"reset","scenario_id":"unconstrained-day","seed":1,"extra":7})"));
    ASSERT_EQ(ok["type"], "obs");
    EXPECT_EQ(code(R"({"type":"act","action":[1,1,1,0]})"), "bad_action_dim");
    EXPECT_EQ(code(R"({"type":"act","action":[1,1,1,0,1.5]})"), "bad_action_range");
    EXPECT_EQ(code(R"({"type":"act"})"), "missing_field");
    EXPECT_TRUE(s.has_episode());
    const json step = json::parse(s.handle(R"({"type":"act","action":[1,1,1,0,0]})"));
    EXPECT_EQ(step["type"], "step");
    EXPECT_EQ(step["obs"]["t"], 2);
}

TEST(Env, EpisodeEndsAtHorizon) {
    env::Session s({env::register_scenario(bundled("unconstrained_day.json").scenario)});
    ask(s, {{"type", "reset"}, {"scenario_id", "unconstrained-day"}, {"seed", 2}});
    json last;
    for (int t = 1; t <= 96; ++t) {
        last = ask(s, {{"type", "act"}, {"action", {0.9, 0.9, 0.9, 0, 0}}});
        ASSERT_EQ(last["type"], "step");
        ASSERT_EQ(last["done"].get<bool>(), t == 96);
    }
    EXPECT_EQ(ask(s, {{"type", "act"}, {"action", {1, 1, 1, 0, 0}}})["code"], "episode_done");
}

TEST(Env, MatchesDirectEpisode) {
    const Loaded& l = bundled("congestion_spike.json");
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 0.4);
    policy::PolicyWeights w;
    w.feature_order.assign(policy::kFeatureOrder.begin(), policy::kFeatureOrder.end());
    w.layers.push_back({Eigen::MatrixXd::NullaryExpr(16, 13, [&] { return n(rng); }),
                        Eigen::VectorXd::NullaryExpr(16, [&] { return n(rng); }), "tanh"});
    w.layers.push_back({Eigen::MatrixXd::NullaryExpr(5, 16, [&] { return n(rng); }),
                        Eigen::VectorXd::Constant(5, 0.8), "identity"});
    const int T = l.scenario.trace.steps();
    policy::MlpPolicy direct(w, policy::make_normalization(l.scenario.aidc, l.scenario.scaling, l.scenario.trace, T));
    const auto ep = sim::run_episode(l.scenario, l.ctx, direct);
    ASSERT_FALSE(ep.aborted) << ep.abort_reason;

    env::Session s({env::RegisteredScenario{l.scenario, l.ctx}});
    json msg = ask(s, {{"type", "reset"}, {"scenario_id", "congestion-spike"}, {"seed", 0}});
    for (const auto& rec : ep.steps) {
        std::array<double, policy::kObsDim> f{};
        for (int i = 0; i < policy::kObsDim; ++i) {
            f[i] = msg["type"] == "obs" ? msg["features"][i].get<double>() : msg["obs"]["features"][i].get<double>();
        }
        ASSERT_EQ(f, rec.features) << "step " << rec.t;
        const auto a = policy::mlp_forward(w, f);
        msg = ask(s, {{"type", "act"}, {"action", a}});
        ASSERT_EQ(msg["type"], "step") << msg.dump();
        ASSERT_EQ(msg["info"]["p_req"].get<double>(), rec.p_req);
        ASSERT_EQ(msg["info"]["kappa"].get<double>(), rec.kappa);
        ASSERT_EQ(msg["reward"].get<double>(), rec.reward);
        ASSERT_EQ(msg["info"]["mechanism"], grid::to_string(rec.mechanism));
    }
    EXPECT_TRUE(msg["done"].get<bool>());
}

TEST(Env, StreamTransport) {
    env::Session s({env::register_scenario(bundled("unconstrained_day.json").scenario)});
    std::istringstream in("{\"type\":\"hello\"}\r\n\n{\"type\":\"reset\",\"scenario_id\":\"unconstrained-day\",\"seed\":3}\n");
    std::ostringstream out;
    env::serve_stream(s, in, out);
    std::istringstream lines(out.str());
    std::string line;
    std::vector<json> replies;
    while (std::getline(lines, line)) {
        replies.push_back(json::parse(line));
    }
    ASSERT_EQ(replies.size(), 2u);
    EXPECT_EQ(replies[0]["type"], "hello");
    EXPECT_EQ(replies[1]["type"], "obs");
}

TEST(Env, TcpRoundTrip) {
    env::Session s({env::register_scenario(bundled("unconstrained_day.json").scenario)});
    std::atomic<bool> stop{false};
    std::atomic<int> port{0};
    std::ostringstream log;
    std::thread server([&] { env::serve_tcp(s, "127.0.0.1", 0, stop, &port, log); });
    for (int i = 0; i < 200 && port.load() == 0; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ASSERT_NE(port.load(), 0);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port.load()));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    const std::string req =
        "{\"type\":\"reset\",\"scenario_id\":\"unconstrained-day\",\"seed\":1}\n{\"type\":\"act\",\"action\":[1,1,1,0,0]}\n";
    ASSERT_EQ(::send(fd, req.data(), req.size(), 0), static_cast<ssize_t>(req.size()));
    std::string got;
    char buf[8192];
    while (std::count(got.begin(), got.end(), '\n') < 2) {
        const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        ASSERT_GT(n, 0);
        got.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fd);
    std::istringstream lines(got);
    std::string first, second;
    std::getline(lines, first);
    std::getline(lines, second);
    EXPECT_EQ(json::parse(first)["t"], 1);
    EXPECT_EQ(json::parse(second)["info"]["kappa"], 0.0);
    // Give the server time to notice the hangup, then stop it.
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    stop = true;
    server.join();
    // The dropped connection discarded the episode.
    EXPECT_FALSE(s.has_episode());
    EXPECT_NE(log.str().find("listening on 127.0.0.1:"), std::string::npos);
}
