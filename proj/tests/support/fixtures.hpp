#pragma once

#include "aidcsim/grid.hpp"
#include "aidcsim/scenario.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fixtures {

inline std::filesystem::path data_path(const std::string& rel) {
    return std::filesystem::path(AIDCSIM_DATA_DIR) / rel;
}

inline aidcsim::NetworkCase make_case(std::vector<int> buses, std::vector<aidcsim::Line> lines,
                                      std::vector<aidcsim::Generator> gens, int ref, int aidc,
                                      std::map<int, double> shares) {
    aidcsim::NetworkCase c;
    c.name = "toy";
    c.buses = std::move(buses);
    c.lines = std::move(lines);
    c.generators = std::move(gens);
    c.ref_bus = ref;
    c.aidc_bus = aidc;
    c.load_share = std::move(shares);
    return c;
}

// Three buses in a triangle with equal susceptances: a cheap unit at bus 1,
// an expensive one at bus 3, the AIDC at bus 2.
inline aidcsim::NetworkCase toy3(double rating_12 = 5000.0, double rating_other = 5000.0,
                                 double ramp = 1e5) {
    return make_case({1, 2, 3},
                     {{1, 2, 10.0, rating_12}, {2, 3, 10.0, rating_other}, {1, 3, 10.0, rating_other}},
                     {{1, 0.0, 3000.0, 10.0, ramp, "coal"}, {3, 0.0, 3000.0, 100.0, ramp, "gas"}}, 1, 2,
                     {{1, 0.2}, {2, 0.4}, {3, 0.4}});
}

// Four buses in a ring with one chord, loads on every bus.
inline aidcsim::NetworkCase toy4() {
    return make_case({1, 2, 3, 4},
                     {{1, 2, 8.0, 900.0}, {2, 3, 12.0, 700.0}, {3, 4, 10.0, 800.0}, {4, 1, 6.0, 900.0},
                      {1, 3, 9.0, 600.0}},
                     {{1, 50.0, 1500.0, 20.0, 2000.0, "coal"}, {3, 0.0, 900.0, 60.0, 2000.0, "gas"},
                      {4, 0.0, 400.0, 110.0, 2000.0, "peaker"}},
                     1, 2, {{1, 0.1}, {2, 0.3}, {3, 0.35}, {4, 0.25}});
}

inline aidcsim::ExogenousTrace flat_trace(const aidcsim::NetworkCase& c, int steps, double demand_mw,
                                          double d_inf = 0.3, double price = 90.0) {
    aidcsim::ExogenousTrace tr;
    tr.dt_h = 0.25;
    for (int t = 0; t < steps; ++t) {
        tr.timestamps.push_back(std::to_string(t));
        tr.price.push_back(price);
        tr.demand.push_back(demand_mw);
        tr.d_inf.push_back(d_inf);
    }
    aidcsim::attach_bus_forecast(tr, c);
    return tr;
}

inline aidcsim::TsoConfig tso(double gamma_u, double eps, double r_grid = 150.0) {
    aidcsim::TsoConfig cfg;
    cfg.gamma_u = gamma_u;
    cfg.eps = eps;
    cfg.r_grid_mw = r_grid;
    return cfg;
}

}  // namespace fixtures
