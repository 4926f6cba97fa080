#include "aidcsim/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace aidcsim {

ExogenousTrace ExogenousTrace::window(int first, int count) const {
    if (first < 0 || count < 0 || first + count > steps()) {
        throw std::out_of_range("trace window [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside " +
                                std::to_string(steps()) + " steps");
    }
    auto cut = [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return v.empty() ? V{} : V(v.begin() + first, v.begin() + first + count);
    };
    ExogenousTrace w;
    w.dt_h = dt_h;
    w.timestamps = cut(timestamps);
    w.price = cut(price);
    w.demand = cut(demand);
    w.d_inf = cut(d_inf);
    w.bus_mw = cut(bus_mw);
    return w;
}

void attach_bus_forecast(ExogenousTrace& trace, const NetworkCase& c) {
    const std::vector<double> share = c.share_vector();
    trace.bus_mw.assign(trace.demand.size(), std::vector<double>(share.size(), 0.0));
    for (std::size_t t = 0; t < trace.demand.size(); ++t) {
        for (std::size_t n = 0; n < share.size(); ++n) {
            trace.bus_mw[t][n] = share[n] * trace.demand[t];
        }
    }
}

std::vector<std::string> check_trace(const ExogenousTrace& trace) {
    std::vector<std::string> issues;
    const std::size_t T = trace.demand.size();
    if (!(trace.dt_h > 0.0)) {
        issues.push_back("trace step length must be positive");
    }
    if (T == 0) {
        issues.push_back("trace is empty");
    }
    if (trace.price.size() != T || trace.d_inf.size() != T ||
        (!trace.timestamps.empty() && trace.timestamps.size() != T) ||
        (!trace.bus_mw.empty() && trace.bus_mw.size() != T)) {
        issues.push_back("trace series have different lengths");
        return issues;
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (!(trace.d_inf[t] >= 0.0 && trace.d_inf[t] <= 1.0)) {
            issues.push_back("inference demand outside [0,1] at step " + std::to_string(t + 1));
            break;
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (!(trace.demand[t] >= 0.0) || !std::isfinite(trace.price[t])) {
            issues.push_back("invalid demand or price at step " + std::to_string(t + 1));
            break;
        }
    }
    return issues;
}

namespace {

constexpr const char* kColumns[] = {"timestamp", "price_aud_mwh", "demand_mw", "inference_frac"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

ExogenousTrace parse_traces(const std::string& text, double dt_h, int steps,
                            const std::string& origin) {
    if (!(dt_h > 0.0) || steps <= 0) {
        throw ParseError(origin + ": step length and horizon must be positive");
    }
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) {
        throw ParseError(origin + ": empty file, header row required");
    }
    ++lineno;
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line.erase(0, 3);
    }
    const auto header = split_csv(line);
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= header.size() || trim(header[i]) != kColumns[i]) {
            throw ParseError(origin + ":1: missing column '" + kColumns[i] + "' at position " +
                             std::to_string(i + 1));
        }
    }

    ExogenousTrace tr;
    tr.dt_h = dt_h;
    while (static_cast<int>(tr.demand.size()) < steps && std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        const std::string where = origin + ":" + std::to_string(lineno);
        if (cells.size() < 4) {
            throw ParseError(where + ": expected 4 cells, found " + std::to_string(cells.size()));
        }
        double vals[3];
        for (int k = 0; k < 3; ++k) {
            const std::string cell = trim(cells[k + 1]);
            const char* b = cell.data();
            const char* e = b + cell.size();
            auto [ptr, ec] = std::from_chars(b, e, vals[k]);
            if (cell.empty() || ec != std::errc() || ptr != e || !std::isfinite(vals[k])) {
                throw ParseError(where + ": column " + kColumns[k + 1] + ": '" + cell +
                                 "' is not a number");
            }
        }
        if (vals[2] < 0.0 || vals[2] > 1.0) {
            throw ParseError(where + ": inference_frac " + trim(cells[3]) + " outside [0,1]");
        }
        if (vals[1] < 0.0) {
            throw ParseError(where + ": demand_mw must be nonnegative");
        }
        tr.timestamps.push_back(trim(cells[0]));
        tr.price.push_back(vals[0]);
        tr.demand.push_back(vals[1]);
        tr.d_inf.push_back(vals[2]);
    }
    if (static_cast<int>(tr.demand.size()) < steps) {
        throw ParseError(origin + ": " + std::to_string(tr.demand.size()) +
                         " data rows, horizon needs " + std::to_string(steps));
    }
    return tr;
}

ExogenousTrace load_traces(const std::filesystem::path& path, double dt_h, int steps) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open trace file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_traces(buf.str(), dt_h, steps, path.string());
}

void write_traces(const std::filesystem::path& path, const ExogenousTrace& trace) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "timestamp,price_aud_mwh,demand_mw,inference_frac\n";
    out << std::setprecision(17);
    for (int t = 0; t < trace.steps(); ++t) {
        const std::string ts =
            t < static_cast<int>(trace.timestamps.size()) ? trace.timestamps[t] : std::to_string(t + 1);
        out << ts << ',' << trace.price[t] << ',' << trace.demand[t] << ',' << trace.d_inf[t] << '\n';
    }
}

ExogenousTrace synth_traces(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.steps <= 0 || !(spec.dt_h > 0.0)) {
        throw std::invalid_argument("synthetic trace needs a positive horizon and step length");
    }
    for (const DiurnalProfile* p : {&spec.price, &spec.demand}) {
        if (p->amplitude < 0.0 || p->noise_sd < 0.0) {
            throw std::invalid_argument("diurnal amplitude and noise must be nonnegative");
        }
    }
    if (!(spec.inference_trough >= 0.0 && spec.inference_trough <= spec.inference_peak &&
          spec.inference_peak <= 1.0) ||
        spec.inference_noise_sd < 0.0) {
        throw std::invalid_argument("inference profile needs 0 <= trough <= peak <= 1");
    }
    for (double s : spec.daily_demand_scale) {
        if (s < 0.0) {
            throw std::invalid_argument("daily demand scale must be nonnegative");
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    ExogenousTrace tr;
    tr.dt_h = spec.dt_h;
    const double two_pi = 2.0 * std::numbers::pi;
    const double inf_mid = 0.5 * (spec.inference_peak + spec.inference_trough);
    const double inf_amp = 0.5 * (spec.inference_peak - spec.inference_trough);
    for (int t = 0; t < spec.steps; ++t) {
        const double hour = spec.start_hour + t * spec.dt_h;
        const int day = static_cast<int>(std::floor(hour / 24.0));
        const double day_scale =
            spec.daily_demand_scale.empty()
                ? 1.0
                : spec.daily_demand_scale[static_cast<std::size_t>(day) % spec.daily_demand_scale.size()];
        // Noise draws happen unconditionally so the stream does not depend on which sd is zero.
        const double zp = z(rng);
        const double zd = z(rng);
        const double zi = z(rng);

        const double price = spec.price.mean +
                             spec.price.amplitude * std::cos(two_pi * (hour - spec.price.peak_hour) / 24.0) +
                             spec.price.noise_sd * zp;
        double demand = spec.demand.mean +
                        day_scale * spec.demand.amplitude *
                            std::cos(two_pi * (hour - spec.demand.peak_hour) / 24.0) +
                        spec.demand.noise_sd * zd;
        for (const DemandEvent& ev : spec.events) {
            if (t >= ev.start_step && t < ev.start_step + ev.duration_steps) {
                demand += ev.extra_mw;
            }
        }
        double inf = inf_mid + inf_amp * std::cos(two_pi * (hour - spec.inference_peak_hour) / 24.0) +
                     spec.inference_noise_sd * zi;
        inf = std::clamp(inf, 0.0, 1.0);

        const int minutes = static_cast<int>(std::lround((hour - 24.0 * day) * 60.0));
        std::ostringstream ts;
        ts << "d" << (day + 1) << "-" << std::setw(2) << std::setfill('0') << minutes / 60 << ":"
           << std::setw(2) << std::setfill('0') << minutes % 60;
        tr.timestamps.push_back(ts.str());
        tr.price.push_back(price);
        tr.demand.push_back(std::max(0.0, demand));
        tr.d_inf.push_back(inf);
    }
    return tr;
}

}  // namespace aidcsim
