#include "aidcsim/scenario.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace aidcsim {

using detail::json;

ScenarioError::ScenarioError(const std::string& what, std::vector<std::string> issues)
    : std::runtime_error([&] {
          std::string msg = what;
          for (const auto& i : issues) {
              msg += "\n  - " + i;
          }
          return msg;
      }()),
      issues_(std::move(issues)) {}

int NetworkCase::bus_index(int bus_id) const {
    auto it = std::find(buses.begin(), buses.end(), bus_id);
    return it == buses.end() ? -1 : static_cast<int>(it - buses.begin());
}

std::vector<double> NetworkCase::share_vector() const {
    std::vector<double> out(buses.size(), 0.0);
    for (const auto& [bus, share] : load_share) {
        const int n = bus_index(bus);
        if (n >= 0) {
            out[n] = share;
        }
    }
    return out;
}

double NetworkCase::max_cost() const {
    double m = 0.0;
    for (const auto& g : generators) {
        m = std::max(m, g.cost);
    }
    return m;
}

std::vector<std::string> check_network_case(const NetworkCase& c) {
    std::vector<std::string> issues;
    if (c.buses.empty()) {
        issues.push_back("case has no buses");
        return issues;
    }
    std::set<int> ids(c.buses.begin(), c.buses.end());
    if (ids.size() != c.buses.size()) {
        issues.push_back("bus ids are not unique");
    }
    if (!(c.mva_base > 0.0)) {
        issues.push_back("mva_base must be positive");
    }
    if (!ids.count(c.ref_bus)) {
        issues.push_back("reference bus " + std::to_string(c.ref_bus) + " does not exist");
    }
    if (!ids.count(c.aidc_bus)) {
        issues.push_back("aidc bus " + std::to_string(c.aidc_bus) + " does not exist");
    }
    for (std::size_t l = 0; l < c.lines.size(); ++l) {
        const Line& ln = c.lines[l];
        const std::string tag = "line " + std::to_string(l) + " (" + std::to_string(ln.from) +
                                "-" + std::to_string(ln.to) + ")";
        if (!ids.count(ln.from) || !ids.count(ln.to)) {
            issues.push_back(tag + " references a nonexistent bus");
        }
        if (ln.from == ln.to) {
            issues.push_back(tag + " connects a bus to itself");
        }
        if (!(ln.b_pu > 0.0) || !std::isfinite(ln.b_pu)) {
            issues.push_back(tag + " needs a positive finite susceptance");
        }
        if (!(ln.f_max_mw > 0.0)) {
            issues.push_back(tag + " needs a positive thermal rating");
        }
    }
    for (std::size_t i = 0; i < c.generators.size(); ++i) {
        const Generator& g = c.generators[i];
        const std::string tag = "generator " + std::to_string(i) + " at bus " + std::to_string(g.bus);
        if (!ids.count(g.bus)) {
            issues.push_back(tag + " references a nonexistent bus");
        }
        if (!(g.g_min_mw >= 0.0) || !(g.g_min_mw <= g.g_max_mw) || !std::isfinite(g.g_max_mw)) {
            issues.push_back(tag + " needs 0 <= g_min <= g_max < inf");
        }
        if (!(g.ramp_mw_per_h >= 0.0)) {
            issues.push_back(tag + " has a negative ramp rate");
        }
        if (!std::isfinite(g.cost)) {
            issues.push_back(tag + " has a non-finite cost");
        }
    }
    if (c.generators.empty()) {
        issues.push_back("case has no generators");
    }
    double total = 0.0;
    for (const auto& [bus, share] : c.load_share) {
        if (!ids.count(bus)) {
            issues.push_back("load share given for nonexistent bus " + std::to_string(bus));
        }
        if (!(share >= 0.0)) {
            issues.push_back("load share at bus " + std::to_string(bus) + " is negative");
        }
        total += share;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "load shares sum to " << total << ", expected 1";
        issues.push_back(msg.str());
    }

    // Connectivity by breadth-first search over valid lines.
    std::vector<std::vector<int>> adj(c.buses.size());
    for (const Line& ln : c.lines) {
        const int a = c.bus_index(ln.from);
        const int b = c.bus_index(ln.to);
        if (a >= 0 && b >= 0) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    }
    std::vector<char> seen(c.buses.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    if (reached != c.buses.size()) {
        issues.push_back("network is not connected (" + std::to_string(reached) + " of " +
                         std::to_string(c.buses.size()) + " buses reachable)");
    }
    return issues;
}

NetworkCase parse_network_case(const std::string& text, const std::string& origin) {
    const json doc = detail::parse_text(text, origin);
    if (!doc.is_object()) {
        throw ParseError(origin + ": top level must be an object");
    }
    detail::reject_unknown(doc,
                           {"name", "mva_base", "ref_bus", "aidc_bus", "buses",
                            "lines", "generators", "load_share"},
                           "");
    NetworkCase c;
    detail::maybe(doc, "name", "", c.name);
    c.mva_base = detail::number(doc, "mva_base", "");
    c.ref_bus = detail::integer(doc, "ref_bus", "");
    c.aidc_bus = detail::integer(doc, "aidc_bus", "");

    const json& buses = detail::require(doc, "buses", "");
    if (!buses.is_array()) {
        throw ParseError("buses: expected an array");
    }
    for (std::size_t i = 0; i < buses.size(); ++i) {
        c.buses.push_back(detail::as_int(buses[i], "buses[" + std::to_string(i) + "]"));
    }

    const json& lines = detail::require(doc, "lines", "");
    if (!lines.is_array()) {
        throw ParseError("lines: expected an array");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string p = "lines[" + std::to_string(i) + "]";
        detail::reject_unknown(lines[i], {"from", "to", "b_pu", "f_max_mw"}, p);
        Line ln;
        ln.from = detail::integer(lines[i], "from", p);
        ln.to = detail::integer(lines[i], "to", p);
        ln.b_pu = detail::number(lines[i], "b_pu", p);
        ln.f_max_mw = detail::number(lines[i], "f_max_mw", p);
        c.lines.push_back(ln);
    }

    const json& gens = detail::require(doc, "generators", "");
    if (!gens.is_array()) {
        throw ParseError("generators: expected an array");
    }
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const std::string p = "generators[" + std::to_string(i) + "]";
        detail::reject_unknown(gens[i],
                               {"bus", "g_min_mw", "g_max_mw", "cost", "ramp_mw_per_h", "tech"}, p);
        Generator g;
        g.bus = detail::integer(gens[i], "bus", p);
        g.g_min_mw = detail::number(gens[i], "g_min_mw", p);
        g.g_max_mw = detail::number(gens[i], "g_max_mw", p);
        g.cost = detail::number(gens[i], "cost", p);
        g.ramp_mw_per_h = detail::number(gens[i], "ramp_mw_per_h", p);
        detail::maybe(gens[i], "tech", p, g.tech);
        c.generators.push_back(g);
    }

    const json& shares = detail::require(doc, "load_share", "");
    if (!shares.is_object()) {
        throw ParseError("load_share: expected an object keyed by bus id");
    }
    for (auto it = shares.begin(); it != shares.end(); ++it) {
        const std::string p = "load_share." + it.key();
        int bus = 0;
        try {
            std::size_t used = 0;
            bus = std::stoi(it.key(), &used);
            if (used != it.key().size()) {
                throw std::invalid_argument("trailing");
            }
        } catch (const std::exception&) {
            throw ParseError(p + ": key must be an integer bus id");
        }
        c.load_share[bus] = detail::as_number(it.value(), p);
    }

    auto issues = check_network_case(c);
    if (!issues.empty()) {
        throw ScenarioError(origin + ": network case violates invariants", std::move(issues));
    }
    return c;
}

NetworkCase load_network_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open network case " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network_case(buf.str(), path.string());
}

namespace {

std::string num(double v) {
    return json(v).dump();
}

}  // namespace

std::string serialize_network_case(const NetworkCase& c) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"name\": " << json(c.name).dump() << ",\n";
    os << "  \"mva_base\": " << num(c.mva_base) << ",\n";
    os << "  \"ref_bus\": " << c.ref_bus << ",\n";
    os << "  \"aidc_bus\": " << c.aidc_bus << ",\n";
    os << "  \"buses\": [";
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        os << (i ? ", " : "") << c.buses[i];
    }
    os << "],\n";
    os << "  \"lines\": [\n";
    for (std::size_t i = 0; i < c.lines.size(); ++i) {
        const Line& l = c.lines[i];
        os << "    {\"from\": " << l.from << ", \"to\": " << l.to << ", \"b_pu\": " << num(l.b_pu)
           << ", \"f_max_mw\": " << num(l.f_max_mw) << "}" << (i + 1 < c.lines.size() ? "," : "")
           << "\n";
    }
    os << "  ],\n";
    os << "  \"generators\": [\n";
    for (std::size_t i = 0; i < c.generators.size(); ++i) {
        const Generator& g = c.generators[i];
        os << "    {\"bus\": " << g.bus << ", \"g_min_mw\": " << num(g.g_min_mw)
           << ", \"g_max_mw\": " << num(g.g_max_mw) << ", \"cost\": " << num(g.cost)
           << ", \"ramp_mw_per_h\": " << num(g.ramp_mw_per_h)
           << ", \"tech\": " << json(g.tech).dump() << "}"
           << (i + 1 < c.generators.size() ? "," : "") << "\n";
    }
    os << "  ],\n";
    os << "  \"load_share\": {";
    bool first = true;
    for (const auto& [bus, share] : c.load_share) {
        os << (first ? "\n" : ",\n") << "    \"" << bus << "\": " << num(share);
        first = false;
    }
    os << "\n  }\n";
    os << "}\n";
    return os.str();
}

}  // namespace aidcsim
