#include "aidcsim/sim.hpp"

#include "json_util.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace aidcsim::sim {

namespace {

const char* const kEpisodeHeader =
    "t,trace_row,demand_mw,price_aud_mwh,d_inf,"
    "a_s_1a,a_s_1b,a_s_2,a_phi_ch,a_phi_dis,q_s_1a,q_s_1b,q_s_2,q_phi_ch,q_phi_dis,"
    "p_req_mw,p_acc_mw,kappa_mw,mechanism,dispatch_cost,max_line_utilization,"
    "s_1a,s_1b,s_2,p_ch_mw,p_dis_mw,beta,soc_mwh,u_1a,u_1b,u_2,r_2,balance_residual_mw,"
    "w_1a_h,w_1b_h,r_urgency,r_rejection,r_curtailment,reward";

grid::Mechanism mechanism_from(const std::string& s, const std::string& where) {
    for (grid::Mechanism m : {grid::Mechanism::None, grid::Mechanism::Congestion, grid::Mechanism::Ramp,
                              grid::Mechanism::Robustness, grid::Mechanism::Mixed}) {
        if (s == grid::to_string(m)) {
            return m;
        }
    }
    throw ParseError(where + ": unknown mechanism '" + s + "'");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": '" + s + "' is not a number");
    }
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) {
        throw std::runtime_error("cannot write " + p.string());
    }
    os << std::setprecision(17);
    return os;
}

}  // namespace

void write_execution_csv(std::ostream& os, const EpisodeRecord& ep) {
    os << "t,s_1a,s_1b,s_2,p_ch_mw,p_dis_mw,soc_mwh,p_it_mw,p_cool_mw,balance_residual_mw\n";
    for (const StepRecord& r : ep.steps) {
        const plant::ExecutionResult& x = r.exec;
        os << r.t << ',' << x.x.s[0] << ',' << x.x.s[1] << ',' << x.x.s[2] << ',' << x.x.p_ch_mw << ','
           << x.x.p_dis_mw << ',' << x.soc_after_mwh << ',' << x.p_it_total_mw << ',' << x.p_cool_mw << ','
           << x.balance_residual_mw << '\n';
    }
}

void write_acceptance_csv(std::ostream& os, const EpisodeRecord& ep) {
    grid::write_acceptance_header(os);
    for (const StepRecord& r : ep.steps) {
        os << r.t << ',' << r.p_req << ',' << r.p_acc << ',' << r.kappa << ',' << grid::to_string(r.mechanism)
           << ',' << r.dispatch_cost << ',' << r.max_line_utilization << '\n';
    }
}

void write_run(const std::filesystem::path& dir, const EpisodeRecord& ep, const AidcConfig& cfg) {
    std::filesystem::create_directories(dir);
    {
        auto os = open_out(dir / "acceptance.csv");
        write_acceptance_csv(os, ep);
    }
    {
        auto os = open_out(dir / "execution.csv");
        write_execution_csv(os, ep);
    }
    {
        auto os = open_out(dir / "episode.csv");
        os << kEpisodeHeader << '\n';
        for (const StepRecord& r : ep.steps) {
            const plant::ExecutionResult& x = r.exec;
            os << r.t << ',' << r.trace_row << ',' << r.obs_raw[policy::kDemand] << ','
               << r.obs_raw[policy::kPrice] << ',' << r.obs_raw[policy::kDInf];
            for (double v : r.action.to_array()) {
                os << ',' << v;
            }
            for (double v : r.request.to_array()) {
                os << ',' << v;
            }
            os << ',' << r.p_req << ',' << r.p_acc << ',' << r.kappa << ',' << grid::to_string(r.mechanism) << ','
               << r.dispatch_cost << ',' << r.max_line_utilization << ',' << x.x.s[0] << ',' << x.x.s[1] << ','
               << x.x.s[2] << ',' << x.x.p_ch_mw << ',' << x.x.p_dis_mw << ',' << x.x.beta << ','
               << x.soc_after_mwh << ',' << x.u[0] << ',' << x.u[1] << ',' << x.u[2] << ',' << x.r_2 << ','
               << x.balance_residual_mw << ',' << r.state_after.delivered_h[0] << ','
               << r.state_after.delivered_h[1] << ',' << r.parts.urgency << ',' << r.parts.rejection << ','
               << r.parts.curtailment << ',' << r.reward << '\n';
        }
    }
    {
        auto os = open_out(dir / "metrics.json");
        os << metrics_json(compute_metrics(ep, cfg)) << '\n';
    }
    nlohmann::json meta;
    meta["scenario"] = ep.scenario;
    meta["policy"] = ep.policy;
    meta["seed"] = ep.seed;
    meta["first_row"] = ep.first_row;
    meta["horizon"] = ep.horizon;
    meta["dt_h"] = ep.dt_h;
    meta["aborted"] = ep.aborted;
    meta["abort_step"] = ep.abort_step;
    meta["abort_reason"] = ep.abort_reason;
    meta["w_req"] = {cfg.clusters[0].w_req, cfg.clusters[1].w_req};
    meta["delivered_h"] = ep.delivered_h;
    meta["shortfall_h"] = ep.shortfall_h;
    meta["terminal_soc_dev_mwh"] = ep.terminal_soc_dev_mwh;
    meta["demand_mw"] = ep.demand;
    auto os = open_out(dir / "run.json");
    os << meta.dump(2) << '\n';
}

EpisodeRecord load_run(const std::filesystem::path& dir, AidcConfig& cfg) {
    const std::filesystem::path meta_path = dir / "run.json";
    std::ifstream mi(meta_path);
    if (!mi) {
        throw ParseError("cannot open " + meta_path.string());
    }
    std::ostringstream buf;
    buf << mi.rdbuf();
    const std::string origin = meta_path.string();
    const detail::json meta = detail::parse_text(buf.str(), origin);
    EpisodeRecord ep;
    try {
        ep.scenario = detail::string(meta, "scenario", "");
        ep.policy = detail::string(meta, "policy", "");
        ep.first_row = detail::integer(meta, "first_row", "");
        ep.horizon = detail::integer(meta, "horizon", "");
        ep.dt_h = detail::number(meta, "dt_h", "");
        ep.aborted = detail::require(meta, "aborted", "").get<bool>();
        ep.abort_step = detail::integer(meta, "abort_step", "");
        ep.abort_reason = detail::string(meta, "abort_reason", "");
        ep.seed = detail::require(meta, "seed", "").get<std::uint64_t>();
        ep.demand = detail::require(meta, "demand_mw", "").get<std::vector<double>>();
        ep.delivered_h = detail::require(meta, "delivered_h", "").get<std::array<double, 2>>();
        ep.shortfall_h = detail::require(meta, "shortfall_h", "").get<std::array<double, 2>>();
        ep.terminal_soc_dev_mwh = detail::number(meta, "terminal_soc_dev_mwh", "");
        const auto w = detail::require(meta, "w_req", "").get<std::array<double, 2>>();
        cfg.clusters[0].w_req = w[0];
        cfg.clusters[1].w_req = w[1];
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + e.what());
    }

    const std::filesystem::path csv_path = dir / "episode.csv";
    std::ifstream ci(csv_path);
    if (!ci) {
        throw ParseError("cannot open " + csv_path.string());
    }
    std::string line;
    if (!std::getline(ci, line) || line != kEpisodeHeader) {
        throw ParseError(csv_path.string() + ": unexpected header");
    }
    int lineno = 1;
    while (std::getline(ci, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const std::string where = csv_path.string() + ": line " + std::to_string(lineno);
        const std::vector<std::string> f = split(line);
        if (f.size() != 39) {
            throw ParseError(where + ": expected 39 fields, found " + std::to_string(f.size()));
        }
        std::size_t i = 0;
        auto num = [&]() { return to_double(f[i++], where); };
        StepRecord r;
        r.t = static_cast<int>(num());
        r.trace_row = static_cast<int>(num());
        r.obs_raw[policy::kDemand] = num();
        r.obs_raw[policy::kPrice] = num();
        r.obs_raw[policy::kDInf] = num();
        std::array<double, 5> a{}, q{};
        for (double& v : a) {
            v = num();
        }
        for (double& v : q) {
            v = num();
        }
        r.action = plant::PlanningAction::from_array(a);
        r.request = plant::PlanningAction::from_array(q);
        r.p_req = num();
        r.p_acc = num();
        r.kappa = num();
        r.mechanism = mechanism_from(f[i++], where);
        r.dispatch_cost = num();
        r.max_line_utilization = num();
        for (double& v : r.exec.x.s) {
            v = num();
        }
        r.exec.x.p_ch_mw = num();
        r.exec.x.p_dis_mw = num();
        r.exec.x.beta = static_cast<int>(num());
        r.exec.soc_after_mwh = num();
        for (double& v : r.exec.u) {
            v = num();
        }
        r.exec.r_2 = num();
        r.exec.balance_residual_mw = num();
        r.state_after.delivered_h[0] = num();
        r.state_after.delivered_h[1] = num();
        r.state_after.e_bess_mwh = r.exec.soc_after_mwh;
        r.state_after.s_prev = r.exec.x.s;
        r.state_after.steps_done = r.t;
        r.parts.urgency = num();
        r.parts.rejection = num();
        r.parts.curtailment = num();
        r.reward = num();
        ep.steps.push_back(r);
    }
    return ep;
}

}  // namespace aidcsim::sim
