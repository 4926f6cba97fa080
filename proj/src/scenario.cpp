#include "aidcsim/scenario.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aidcsim {

using detail::json;

const char* group_label(Group g) {
    switch (g) {
        case Group::Frontier:
            return "1a";
        case Group::Batch:
            return "1b";
        case Group::Inference:
            return "2";
    }
    return "?";
}

double AidcConfig::nominal_capacity_mw() const {
    double peak = 0.0;
    for (const auto& c : clusters) {
        peak += c.p_peak_mw;
    }
    return (1.0 / eta_ipcs + gamma) * peak;
}

double AidcConfig::idle_floor_mw() const {
    double idle = 0.0;
    for (const auto& c : clusters) {
        idle += c.p_idle_mw();
    }
    return (1.0 / eta_ipcs + gamma) * idle;
}

AidcConfig default_aidc_config() {
    AidcConfig cfg;
    cfg.clusters[0] = ClusterSpec{"1a", "frontier", 320000, 550.0, 0.30, 0.94};
    cfg.clusters[1] = ClusterSpec{"1b", "batch", 128000, 220.0, 0.25, 0.94};
    cfg.clusters[2] = ClusterSpec{"2", "inference", 192000, 330.0, 0.20, 0.0};
    return cfg;
}

namespace {

void check_aidc(const AidcConfig& a, std::vector<std::string>& out) {
    for (int k = 0; k < kGroups; ++k) {
        const ClusterSpec& c = a.clusters[k];
        const std::string tag = "cluster " + std::string(group_label(static_cast<Group>(k)));
        if (!(c.p_peak_mw > 0.0)) {
            out.push_back(tag + ": peak power must be positive");
        }
        if (!(c.idle_ratio >= 0.0 && c.idle_ratio < 1.0)) {
            out.push_back(tag + ": idle ratio must lie in [0,1)");
        }
        if (k < 2 && !(c.w_req >= 0.0 && c.w_req <= 1.0)) {
            out.push_back(tag + ": workload target must lie in [0,1]");
        }
        if (k < 2 && !(c.w_req > 0.0)) {
            out.push_back(tag + ": workload target must be positive for training groups");
        }
    }
    if (!(a.gamma >= 0.0)) {
        out.push_back("cooling overhead gamma must be nonnegative");
    }
    if (!(a.eta_ipcs > 0.0 && a.eta_ipcs <= 1.0)) {
        out.push_back("IPCS efficiency must lie in (0,1]");
    }
    const BessSpec& b = a.bess;
    if (!(b.p_max_mw >= 0.0)) {
        out.push_back("battery power rating must be nonnegative");
    }
    if (!(b.e_min_mwh >= 0.0 && b.e_min_mwh < b.e_max_mwh)) {
        out.push_back("battery energy bounds need 0 <= E_min < E_max");
    }
    if (!(b.eta_ch > 0.0 && b.eta_ch <= 1.0) || !(b.eta_dis > 0.0 && b.eta_dis <= 1.0)) {
        out.push_back("battery efficiencies must lie in (0,1]");
    }
    const double e0 = b.e_init_mwh();
    if (!(e0 >= b.e_min_mwh && e0 <= b.e_max_mwh)) {
        out.push_back("initial state of charge lies outside [E_min, E_max]");
    }
    if (!(b.c_cyc >= 0.0)) {
        out.push_back("cycling cost must be nonnegative");
    }
    if (!(a.m_1a > a.m_1b && a.m_1b > 0.0)) {
        out.push_back("penalty weights must satisfy M_1a > M_1b > 0");
    }
    if (!(a.alpha_w >= 0.0 && a.alpha_rej >= 0.0 && a.alpha_kappa >= 0.0)) {
        out.push_back("reward weights must be nonnegative");
    }
    if (!(a.lambda > 0.0)) {
        out.push_back("tracking weight lambda must be positive");
    }
}

void check_tso(const TsoConfig& t, const NetworkCase& c, std::vector<std::string>& out) {
    const double cmax = c.max_cost();
    if (!(t.gamma_kappa > cmax && cmax > t.rho)) {
        std::ostringstream msg;
        msg << "objective weights must satisfy curtailment weight (" << t.gamma_kappa
            << ") > max generator cost (" << cmax << ") > deviation weight (" << t.rho << ")";
        out.push_back(msg.str());
    }
    if (!(t.rho > 0.0)) {
        out.push_back("deviation weight rho must be positive");
    }
    if (!(t.gamma_u >= 0.0)) {
        out.push_back("uncertainty budget must be nonnegative");
    }
    if (t.gamma_u > c.num_buses()) {
        out.push_back("uncertainty budget " + std::to_string(t.gamma_u) + " exceeds bus count " +
                      std::to_string(c.num_buses()));
    }
    if (!(t.eps > 0.0 && t.eps < 1.0)) {
        out.push_back("deviation ratio must lie in (0,1)");
    }
    if (!(t.r_grid_mw > 0.0)) {
        out.push_back("PCC ramp limit must be positive");
    }
}

}  // namespace

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport r;
    for (auto& i : check_network_case(s.network)) {
        r.errors.push_back("network: " + i);
    }
    for (auto& i : check_trace(s.trace)) {
        r.errors.push_back("trace: " + i);
    }
    if (!s.trace.bus_mw.empty() && !s.trace.bus_mw.front().empty() &&
        static_cast<int>(s.trace.bus_mw.front().size()) != s.network.num_buses()) {
        r.errors.push_back("trace: bus forecasts do not match the network bus count");
    }
    check_aidc(s.aidc, r.errors);
    check_tso(s.tso, s.network, r.errors);
    if (!(s.line_rating_scale > 0.0)) {
        r.errors.push_back("line rating scale must be positive");
    }
    if (!(s.scaling.price_aud_mwh > 0.0) || s.scaling.power_mw < 0.0 || s.scaling.demand_mw < 0.0) {
        r.errors.push_back("observation scaling constants must be positive (or zero for auto)");
    }
    const HeuristicConfig& h = s.heuristic;
    if (!(h.peak_percentile >= 0.0 && h.peak_percentile <= 100.0) || h.trailing_window < 0) {
        r.errors.push_back("heuristic percentile must lie in [0,100] with a nonnegative window");
    }
    for (double v : {h.peak_s1a, h.peak_s1b, h.discharge_fraction, h.charge_fraction,
                     h.discharge_soc, h.charge_soc}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            r.errors.push_back("heuristic fractions must lie in [0,1]");
            break;
        }
    }
    if (s.env_window_steps < 0 || s.env_window_steps > s.trace.steps()) {
        r.errors.push_back("environment window must lie in [0, trace steps]");
    }
    return r;
}

namespace {

void read_profile(const json& j, const std::string& path, DiurnalProfile& p) {
    detail::reject_unknown(j, {"mean", "amplitude", "peak_hour", "noise_sd"}, path);
    detail::maybe(j, "mean", path, p.mean);
    detail::maybe(j, "amplitude", path, p.amplitude);
    detail::maybe(j, "peak_hour", path, p.peak_hour);
    detail::maybe(j, "noise_sd", path, p.noise_sd);
}

SynthSpec read_synth(const json& j, const std::string& path) {
    detail::reject_unknown(j, {"start_hour", "price", "demand", "inference", "daily_demand_scale", "events"},
                           path);
    SynthSpec s;
    detail::maybe(j, "start_hour", path, s.start_hour);
    if (j.contains("price")) {
        read_profile(j.at("price"), path + ".price", s.price);
    }
    if (j.contains("demand")) {
        read_profile(j.at("demand"), path + ".demand", s.demand);
    }
    if (j.contains("inference")) {
        const json& inf = j.at("inference");
        const std::string p = path + ".inference";
        detail::reject_unknown(inf, {"peak", "trough", "peak_hour", "noise_sd"}, p);
        detail::maybe(inf, "peak", p, s.inference_peak);
        detail::maybe(inf, "trough", p, s.inference_trough);
        detail::maybe(inf, "peak_hour", p, s.inference_peak_hour);
        detail::maybe(inf, "noise_sd", p, s.inference_noise_sd);
    }
    if (j.contains("daily_demand_scale")) {
        const json& a = j.at("daily_demand_scale");
        if (!a.is_array()) {
            throw ParseError(path + ".daily_demand_scale: expected an array");
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.daily_demand_scale.push_back(
                detail::as_number(a[i], path + ".daily_demand_scale[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("events")) {
        const json& a = j.at("events");
        if (!a.is_array()) {
            throw ParseError(path + ".events: expected an array");
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = path + ".events[" + std::to_string(i) + "]";
            detail::reject_unknown(a[i], {"start_step", "duration_steps", "extra_mw"}, p);
            DemandEvent ev;
            ev.start_step = detail::integer(a[i], "start_step", p);
            ev.duration_steps = detail::integer(a[i], "duration_steps", p);
            ev.extra_mw = detail::number(a[i], "extra_mw", p);
            s.events.push_back(ev);
        }
    }
    return s;
}

void read_aidc(const json& j, AidcConfig& a) {
    const std::string path = "aidc";
    detail::reject_unknown(j,
                           {"clusters", "gamma", "eta_ipcs", "bess", "m_1a", "m_1b", "alpha_w",
                            "alpha_rej", "alpha_kappa", "lambda"},
                           path);
    if (j.contains("clusters")) {
        const json& cl = j.at("clusters");
        if (!cl.is_array() || cl.size() != kGroups) {
            throw ParseError("aidc.clusters: expected an array of three groups (1a, 1b, 2)");
        }
        for (int k = 0; k < kGroups; ++k) {
            const std::string p = "aidc.clusters[" + std::to_string(k) + "]";
            detail::reject_unknown(cl[k], {"id", "role", "accelerators", "p_peak_mw", "idle_ratio", "w_req"}, p);
            ClusterSpec& c = a.clusters[k];
            detail::maybe(cl[k], "id", p, c.id);
            detail::maybe(cl[k], "role", p, c.role);
            detail::maybe(cl[k], "accelerators", p, c.accelerators);
            detail::maybe(cl[k], "p_peak_mw", p, c.p_peak_mw);
            detail::maybe(cl[k], "idle_ratio", p, c.idle_ratio);
            detail::maybe(cl[k], "w_req", p, c.w_req);
        }
    }
    detail::maybe(j, "gamma", path, a.gamma);
    detail::maybe(j, "eta_ipcs", path, a.eta_ipcs);
    detail::maybe(j, "m_1a", path, a.m_1a);
    detail::maybe(j, "m_1b", path, a.m_1b);
    detail::maybe(j, "alpha_w", path, a.alpha_w);
    detail::maybe(j, "alpha_rej", path, a.alpha_rej);
    detail::maybe(j, "alpha_kappa", path, a.alpha_kappa);
    detail::maybe(j, "lambda", path, a.lambda);
    if (j.contains("bess")) {
        const json& b = j.at("bess");
        const std::string p = "aidc.bess";
        detail::reject_unknown(b,
                               {"p_max_mw", "e_min_mwh", "e_max_mwh", "eta_ch", "eta_dis",
                                "soc_init_fraction", "c_cyc"},
                               p);
        detail::maybe(b, "p_max_mw", p, a.bess.p_max_mw);
        detail::maybe(b, "e_min_mwh", p, a.bess.e_min_mwh);
        detail::maybe(b, "e_max_mwh", p, a.bess.e_max_mwh);
        detail::maybe(b, "eta_ch", p, a.bess.eta_ch);
        detail::maybe(b, "eta_dis", p, a.bess.eta_dis);
        detail::maybe(b, "soc_init_fraction", p, a.bess.soc_init_fraction);
        detail::maybe(b, "c_cyc", p, a.bess.c_cyc);
    }
}

void read_tso(const json& j, TsoConfig& t) {
    const std::string path = "tso";
    detail::reject_unknown(j, {"gamma_u", "eps", "gamma_kappa", "rho", "r_grid_mw", "participation"}, path);
    detail::maybe(j, "gamma_u", path, t.gamma_u);
    detail::maybe(j, "eps", path, t.eps);
    detail::maybe(j, "gamma_kappa", path, t.gamma_kappa);
    detail::maybe(j, "rho", path, t.rho);
    detail::maybe(j, "r_grid_mw", path, t.r_grid_mw);
    if (j.contains("participation")) {
        const std::string rule = detail::as_string(j.at("participation"), "tso.participation");
        if (rule == "capacity") {
            t.participation = ParticipationRule::Capacity;
        } else if (rule == "ramp") {
            t.participation = ParticipationRule::Ramp;
        } else {
            throw ParseError("tso.participation: expected \"capacity\" or \"ramp\"");
        }
    }
}

void read_heuristic(const json& j, HeuristicConfig& h) {
    const std::string path = "heuristic";
    detail::reject_unknown(j,
                           {"peak_percentile", "trailing_window", "peak_s1a", "peak_s1b",
                            "urgency_trigger", "urgency_bump", "discharge_soc", "discharge_fraction",
                            "charge_soc", "charge_fraction"},
                           path);
    detail::maybe(j, "peak_percentile", path, h.peak_percentile);
    detail::maybe(j, "trailing_window", path, h.trailing_window);
    detail::maybe(j, "peak_s1a", path, h.peak_s1a);
    detail::maybe(j, "peak_s1b", path, h.peak_s1b);
    detail::maybe(j, "urgency_trigger", path, h.urgency_trigger);
    detail::maybe(j, "urgency_bump", path, h.urgency_bump);
    detail::maybe(j, "discharge_soc", path, h.discharge_soc);
    detail::maybe(j, "discharge_fraction", path, h.discharge_fraction);
    detail::maybe(j, "charge_soc", path, h.charge_soc);
    detail::maybe(j, "charge_fraction", path, h.charge_fraction);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& origin) {
    const json doc = detail::parse_text(text, origin);
    if (!doc.is_object()) {
        throw ParseError(origin + ": top level must be an object");
    }
    try {
        detail::reject_unknown(doc,
                               {"name", "case", "line_rating_scale", "seed", "trace", "aidc", "tso",
                                "observation", "heuristic", "env_window_steps"},
                               "");
        Scenario s;
        detail::maybe(doc, "name", "", s.name);
        const std::filesystem::path case_path = base_dir / detail::string(doc, "case", "");
        s.network = load_network_case(case_path);
        detail::maybe(doc, "line_rating_scale", "", s.line_rating_scale);
        if (doc.contains("seed")) {
            const json& seed = doc.at("seed");
            if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
                throw ParseError("seed: expected a nonnegative integer");
            }
            s.seed = seed.get<std::uint64_t>();
        }
        s.aidc = default_aidc_config();
        if (doc.contains("aidc")) {
            read_aidc(doc.at("aidc"), s.aidc);
        }
        if (doc.contains("tso")) {
            read_tso(doc.at("tso"), s.tso);
        }
        if (doc.contains("observation")) {
            const json& o = doc.at("observation");
            detail::reject_unknown(o, {"price_aud_mwh", "power_mw", "demand_mw"}, "observation");
            detail::maybe(o, "price_aud_mwh", "observation", s.scaling.price_aud_mwh);
            detail::maybe(o, "power_mw", "observation", s.scaling.power_mw);
            detail::maybe(o, "demand_mw", "observation", s.scaling.demand_mw);
        }
        if (doc.contains("heuristic")) {
            read_heuristic(doc.at("heuristic"), s.heuristic);
        }
        detail::maybe(doc, "env_window_steps", "", s.env_window_steps);

        const json& tr = detail::require(doc, "trace", "");
        detail::reject_unknown(tr, {"dt_h", "steps", "first_step", "csv", "synthetic"}, "trace");
        const double dt = detail::number(tr, "dt_h", "trace");
        const int steps = detail::integer(tr, "steps", "trace");
        int first = 0;
        detail::maybe(tr, "first_step", "trace", first);
        if (first < 0) {
            throw ParseError("trace.first_step: must be nonnegative");
        }
        if (tr.contains("csv") == tr.contains("synthetic")) {
            throw ParseError("trace: exactly one of 'csv' or 'synthetic' is required");
        }
        if (tr.contains("csv")) {
            const auto path = base_dir / detail::as_string(tr.at("csv"), "trace.csv");
            s.trace = load_traces(path, dt, first + steps).window(first, steps);
        } else {
            SynthSpec spec = read_synth(tr.at("synthetic"), "trace.synthetic");
            spec.steps = first + steps;
            spec.dt_h = dt;
            try {
                s.trace = synth_traces(spec, s.seed).window(first, steps);
            } catch (const std::invalid_argument& e) {
                throw ParseError(std::string("trace.synthetic: ") + e.what());
            }
        }
        attach_bus_forecast(s.trace, s.network);

        ValidationReport report = validate_scenario(s);
        if (!report.ok()) {
            throw ScenarioError(origin + ": scenario is not runnable", std::move(report.errors));
        }
        return s;
    } catch (const ParseError& e) {
        const std::string what = e.what();
        if (what.rfind(origin, 0) == 0) {
            throw;
        }
        throw ParseError(origin + ": " + what);
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open scenario " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.parent_path(), path.string());
}

}  // namespace aidcsim
