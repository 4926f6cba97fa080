// Command-line entry point: simulate, baseline, sweep, serve-env, report.
#include "aidcsim/env.hpp"
#include "aidcsim/grid.hpp"
#include "aidcsim/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace aidcsim;

namespace {

enum Exit { kOk = 0, kUsage = 2, kInput = 3, kRuntime = 4 };

// One JSON object per line on stderr so wrappers can parse failures.
int fail(int code, const std::string& kind, const std::string& detail) {
    std::cerr << nlohmann::json{{"error", kind}, {"detail", detail}}.dump() << std::endl;
    return code;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p);
    if (!is) {
        throw ParseError("cannot open " + p.string());
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Loads a scenario, optionally replacing its seed before the trace is built.
Scenario load_with_seed(const fs::path& path, std::optional<std::uint64_t> seed) {
    if (!seed) {
        return load_scenario(path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    doc["seed"] = *seed;
    return parse_scenario(doc.dump(), path.parent_path(), path.string());
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "'" + item + "' is not a number");
        }
    }
    if (out.empty()) {
        throw CLI::ValidationError(flag, "empty list");
    }
    return out;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

int cmd_simulate(const fs::path& scenario, const std::string& policy, std::optional<std::uint64_t> seed,
                 const fs::path& out) {
    Scenario s = load_with_seed(scenario, seed);
    auto ctx = std::make_shared<const grid::GridContext>(grid::make_grid_context(s));
    auto pol = sim::make_policy(policy, s, 0, s.trace.steps());
    const sim::EpisodeRecord ep = sim::run_episode(s, ctx, *pol);
    sim::write_run(out, ep, s.aidc);
    const sim::MetricsReport m = sim::compute_metrics(ep, s.aidc);
    std::cout << "wrote " << out.string() << ": " << m.steps << " steps, curtailment "
              << std::setprecision(4) << m.curtail_freq_pct << "%, W_1a " << m.w_pct[0] << "%, W_1b "
              << m.w_pct[1] << "%\n";
    if (ep.aborted) {
        return fail(kRuntime, "episode_aborted",
                    "step " + std::to_string(ep.abort_step) + ": " + ep.abort_reason);
    }
    return kOk;
}

int cmd_baseline(const fs::path& scenario, const fs::path& out) {
    const Scenario s = load_scenario(scenario);
    ExogenousTrace trace = s.trace;
    attach_bus_forecast(trace, s.network);
    const auto opt = grid::default_baseline_options(trace.steps());
    const grid::BaselineDispatch b = grid::solve_baseline_dispatch(s.network, trace, s.line_rating_scale, opt);
    const grid::BaselineCheck chk = grid::verify_baseline(s.network, trace, s.line_rating_scale, b);
    fs::create_directories(out);
    std::ofstream os(out / "baseline.csv");
    if (!os) {
        throw std::runtime_error("cannot write " + (out / "baseline.csv").string());
    }
    os << std::setprecision(12) << "t,demand_mw,cost_aud";
    for (const Generator& g : s.network.generators) {
        os << ",g_" << g.bus;
    }
    for (const Line& l : s.network.lines) {
        os << ",f_" << l.from << '_' << l.to;
    }
    os << '\n';
    for (int t = 0; t < trace.steps(); ++t) {
        os << t + 1 << ',' << trace.demand[t] << ',' << b.step_cost[t];
        for (double g : b.g[t]) {
            os << ',' << g;
        }
        for (double f : b.flows[t]) {
            os << ',' << f;
        }
        os << '\n';
    }
    std::cout << "baseline cost " << std::setprecision(12) << b.total_cost << " over " << trace.steps()
              << " steps in " << b.windows << " window(s); worst check residual " << chk.worst() << " MW\n";
    return kOk;
}

int cmd_sweep(const fs::path& scenario, const std::string& gammas, const std::string& eps,
              const std::string& policy, const fs::path& out) {
    const auto g = parse_list(gammas, "--gamma");
    const auto e = parse_list(eps, "--eps");
    const Scenario s = load_scenario(scenario);
    const grid::GridContext base = grid::make_grid_context(s);
    const auto cells = sim::run_sweep(s, base, g, e, policy);
    fs::create_directories(out);
    {
        std::ofstream os(out / "sweep.csv");
        sim::write_sweep_csv(os, cells);
    }
    {
        std::ofstream os(out / "sweep_mechanisms.csv");
        sim::write_sweep_mechanisms_csv(os, cells);
    }
    int infeasible = 0;
    for (const auto& c : cells) {
        infeasible += c.feasible ? 0 : 1;
    }
    std::cout << "wrote " << cells.size() << " cells (" << infeasible << " infeasible) to "
              << (out / "sweep.csv").string() << '\n';
    return kOk;
}

int cmd_serve(const std::vector<std::string>& scenarios, std::optional<std::uint64_t> seed, bool use_stdio,
              const std::string& host, int port) {
    std::vector<env::RegisteredScenario> reg;
    for (const auto& p : scenarios) {
        reg.push_back(env::register_scenario(load_with_seed(p, seed)));
    }
    env::Session session(std::move(reg));
    if (use_stdio) {
        env::serve_stream(session, std::cin, std::cout);
        return kOk;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const int rc = env::serve_tcp(session, host, port, g_stop, nullptr, std::cerr);
    return rc == 0 ? kOk : fail(kRuntime, "transport", "could not listen on " + host + ":" + std::to_string(port));
}

int cmd_report(const fs::path& run) {
    AidcConfig cfg = default_aidc_config();
    const sim::EpisodeRecord ep = sim::load_run(run, cfg);
    const sim::MetricsReport m = sim::compute_metrics(ep, cfg);
    sim::print_summary(std::cout, ep, m);
    sim::write_report_csvs(run, ep, m);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AIDC / TSO closed-loop simulator"};
    app.require_subcommand(1);

    std::string scenario, policy = "heuristic", out, gammas = "0,2,5,8,10", eps = "0.01,0.04,0.07,0.10,0.13";
    std::string host = "127.0.0.1", run;
    std::vector<std::string> serve_scenarios;
    std::uint64_t seed = 0;
    int port = 5555;
    bool use_stdio = false;

    auto* sim_cmd = app.add_subcommand("simulate", "run one closed-loop episode over the whole trace");
    sim_cmd->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--policy", policy, "fixed-buffer | heuristic | mlp:PATH");
    auto* sim_seed = sim_cmd->add_option("--seed", seed, "override the scenario seed");
    sim_cmd->add_option("--out", out, "run directory")->required();

    auto* base_cmd = app.add_subcommand("baseline", "solve the AIDC-free baseline dispatch");
    base_cmd->add_option("--scenario", scenario)->required()->check(CLI::ExistingFile);
    base_cmd->add_option("--out", out)->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "curtailment frequency over uncertainty budgets");
    sweep_cmd->add_option("--scenario", scenario)->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--gamma", gammas, "comma-separated budgets");
    sweep_cmd->add_option("--eps", eps, "comma-separated deviation ratios");
    sweep_cmd->add_option("--policy", policy);
    sweep_cmd->add_option("--out", out)->required();

    auto* serve_cmd = app.add_subcommand("serve-env", "serve the training environment");
    serve_cmd->add_option("--scenario", serve_scenarios, "scenario JSON (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* port_opt = serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)");
    serve_cmd->add_flag("--stdio", use_stdio, "talk over stdin/stdout")->excludes(port_opt);
    serve_cmd->add_option("--host", host, "IPv4 address to bind");
    auto* serve_seed = serve_cmd->add_option("--seed", seed, "override the scenario seed");

    auto* report_cmd = app.add_subcommand("report", "summarize a run directory");
    report_cmd->add_option("--run", run)->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kUsage, "usage", e.what());
    }

    try {
        if (*sim_cmd) {
            return cmd_simulate(scenario, policy, sim_seed->count() ? std::optional(seed) : std::nullopt, out);
        }
        if (*base_cmd) {
            return cmd_baseline(scenario, out);
        }
        if (*sweep_cmd) {
            return cmd_sweep(scenario, gammas, eps, policy, out);
        }
        if (*serve_cmd) {
            return cmd_serve(serve_scenarios, serve_seed->count() ? std::optional(seed) : std::nullopt,
                             use_stdio, host, port);
        }
        if (*report_cmd) {
            return cmd_report(run);
        }
    } catch (const CLI::ValidationError& e) {
        return fail(kUsage, "usage", e.what());
    } catch (const ScenarioError& e) {
        std::string detail = e.what();
        for (const auto& i : e.issues()) {
            detail += "; " + i;
        }
        return fail(kInput, "invalid_scenario", detail);
    } catch (const ParseError& e) {
        return fail(kInput, "parse", e.what());
    } catch (const grid::TsoInfeasible& e) {
        return fail(kRuntime, "tso_infeasible", e.what());
    } catch (const std::exception& e) {
        return fail(kRuntime, "internal", e.what());
    }
    return kUsage;
}
