#include "aidcsim/policy.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aidcsim::policy {

const std::array<const char*, kObsDim> kFeatureOrder = {
    "e_bess",   "s_1a_prev", "s_1b_prev",  "s_2_prev", "r_1a",   "r_1b",  "eta_1a",
    "eta_1b",   "p_acc_prev", "kappa_prev", "price",    "demand", "d_inf",
};

Normalization make_normalization(const AidcConfig& cfg, const ObservationScaling& s,
                                 const ExogenousTrace& trace, int horizon) {
    Normalization n;
    n.scale.fill(1.0);
    n.scale[kEBess] = cfg.bess.e_max_mwh;
    const double power = s.power_mw > 0.0 ? s.power_mw : cfg.nominal_capacity_mw();
    n.scale[kPAccPrev] = power;
    n.scale[kKappaPrev] = power;
    for (int k = 0; k < 2; ++k) {
        const double target = plant::workload_target_h(cfg, static_cast<Group>(k), horizon, trace.dt_h);
        n.scale[kR1a + k] = target > 0.0 ? target : 1.0;
    }
    n.scale[kPrice] = s.price_aud_mwh;
    double demand = s.demand_mw;
    if (!(demand > 0.0)) {
        demand = trace.demand.empty() ? 1.0 : *std::max_element(trace.demand.begin(), trace.demand.end());
    }
    n.scale[kDemand] = demand > 0.0 ? demand : 1.0;
    return n;
}

std::array<double, kObsDim> normalize(const Observation& obs, const Normalization& n) {
    std::array<double, kObsDim> out{};
    for (int i = 0; i < kObsDim; ++i) {
        out[i] = obs.raw[i] / n.scale[i];
    }
    return out;
}

double urgency(double remaining_h, double target_h, int t, int horizon) {
    if (!(target_h > 0.0)) {
        return 0.0;
    }
    const int left = std::max(1, horizon - t + 1);
    return remaining_h * horizon / (target_h * left);
}

Observation build_observation(const plant::AidcState& st, double p_acc_prev, double kappa_prev,
                              const ExogenousTrace& trace, int first, int t, int horizon,
                              const AidcConfig& cfg) {
    Observation o;
    o.t = t;
    const int row = first + std::clamp(t, 1, horizon) - 1;
    o.raw[kEBess] = st.e_bess_mwh;
    o.raw[kS1aPrev] = st.s_prev[0];
    o.raw[kS1bPrev] = st.s_prev[1];
    o.raw[kS2Prev] = st.s_prev[2];
    for (int k = 0; k < 2; ++k) {
        const Group g = static_cast<Group>(k);
        const double target = plant::workload_target_h(cfg, g, horizon, trace.dt_h);
        const double rem = plant::remaining_h(st, cfg, g, horizon, trace.dt_h);
        o.raw[kR1a + k] = rem;
        o.raw[kEta1a + k] = urgency(rem, target, t, horizon);
    }
    o.raw[kPAccPrev] = p_acc_prev;
    o.raw[kKappaPrev] = kappa_prev;
    o.raw[kPrice] = trace.price[row];
    o.raw[kDemand] = trace.demand[row];
    o.raw[kDInf] = trace.d_inf[row];
    return o;
}

plant::PlanningAction FixedBufferPolicy::act(const Observation&) {
    plant::PlanningAction a;
    a.s = {level_, level_, level_};
    return a;
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) {
        throw std::invalid_argument("percentile of an empty series");
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

HeuristicPolicy::HeuristicPolicy(HeuristicConfig cfg, const AidcConfig& aidc, std::vector<double> demand)
    : cfg_(cfg), e_max_(aidc.bess.e_max_mwh), demand_(std::move(demand)) {
    if (demand_.empty()) {
        throw std::invalid_argument("heuristic policy needs a demand series");
    }
    full_threshold_ = percentile(demand_, cfg_.peak_percentile);
}

double HeuristicPolicy::peak_threshold(int t) const {
    if (cfg_.trailing_window <= 0) {
        return full_threshold_;
    }
    const int end = std::clamp(t, 1, static_cast<int>(demand_.size()));
    const int begin = std::max(0, end - cfg_.trailing_window);
    return percentile({demand_.begin() + begin, demand_.begin() + end}, cfg_.peak_percentile);
}

plant::PlanningAction HeuristicPolicy::act(const Observation& obs) {
    plant::PlanningAction a;
    const double soc = obs.raw[kEBess] / e_max_;
    a.s[2] = obs.raw[kDInf];
    if (obs.raw[kDemand] >= peak_threshold(obs.t)) {
        a.s[0] = cfg_.peak_s1a;
        a.s[1] = cfg_.peak_s1b;
        for (int k = 0; k < 2; ++k) {
            if (obs.raw[kEta1a + k] > cfg_.urgency_trigger) {
                a.s[k] = std::min(1.0, a.s[k] + cfg_.urgency_bump);
            }
        }
        if (soc > cfg_.discharge_soc) {
            a.phi_dis = cfg_.discharge_fraction;
        }
    } else {
        a.s[0] = 1.0;
        a.s[1] = 1.0;
        if (soc < cfg_.charge_soc) {
            a.phi_ch = cfg_.charge_fraction;
        }
    }
    return a;
}

namespace {

using detail::json;

std::vector<double> number_array(const json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ParseError(path + ": expected an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(detail::as_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

}  // namespace

void validate_weights(const PolicyWeights& w) {
    if (w.version != 1) {
        throw ParseError("weights: unsupported version " + std::to_string(w.version));
    }
    if (w.squash != "tanh01") {
        throw ParseError("weights: unsupported squash '" + w.squash + "'");
    }
    if (w.feature_order.size() != kFeatureOrder.size() ||
        !std::equal(w.feature_order.begin(), w.feature_order.end(), kFeatureOrder.begin())) {
        throw ParseError("weights: feature_order does not match the observation contract");
    }
    if (w.layers.empty()) {
        throw ParseError("weights: no layers");
    }
    Eigen::Index width = kObsDim;
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const DenseLayer& l = w.layers[i];
        const std::string where = "weights: layer " + std::to_string(i);
        if (l.w.cols() != width) {
            throw ParseError(where + ": expects " + std::to_string(l.w.cols()) + " inputs but receives " +
                             std::to_string(width));
        }
        if (l.b.size() != l.w.rows()) {
            throw ParseError(where + ": bias length does not match rows");
        }
        if (l.act != "relu" && l.act != "tanh" && l.act != "identity") {
            throw ParseError(where + ": unknown activation '" + l.act + "'");
        }
        if (!l.w.allFinite() || !l.b.allFinite()) {
            throw ParseError(where + ": non-finite parameter");
        }
        width = l.w.rows();
    }
    if (width != kActDim) {
        throw ParseError("weights: output width " + std::to_string(width) + ", expected " +
                         std::to_string(kActDim));
    }
}

PolicyWeights parse_weights(const std::string& text, const std::string& origin) {
    const json doc = detail::parse_text(text, origin);
    try {
        PolicyWeights w;
        w.version = detail::integer(doc, "version", "");
        w.squash = detail::string(doc, "squash", "");
        const json& order = detail::require(doc, "feature_order", "");
        if (!order.is_array()) {
            throw ParseError("feature_order: expected an array");
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            w.feature_order.push_back(detail::as_string(order[i], "feature_order[" + std::to_string(i) + "]"));
        }
        const json& layers = detail::require(doc, "layers", "");
        if (!layers.is_array()) {
            throw ParseError("layers: expected an array");
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const std::string path = "layers[" + std::to_string(i) + "]";
            const json& l = layers[i];
            const int rows = detail::integer(l, "rows", path);
            const int cols = detail::integer(l, "cols", path);
            if (rows <= 0 || cols <= 0) {
                throw ParseError(path + ": rows and cols must be positive");
            }
            const std::vector<double> wv = number_array(detail::require(l, "w", path), path + ".w");
            const std::vector<double> bv = number_array(detail::require(l, "b", path), path + ".b");
            if (wv.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
                throw ParseError(path + ".w: expected " + std::to_string(rows * cols) + " entries (row-major)");
            }
            if (bv.size() != static_cast<std::size_t>(rows)) {
                throw ParseError(path + ".b: expected " + std::to_string(rows) + " entries");
            }
            DenseLayer layer;
            layer.w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                wv.data(), rows, cols);
            layer.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), rows);
            layer.act = detail::string(l, "act", path);
            w.layers.push_back(std::move(layer));
        }
        validate_weights(w);
        return w;
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

PolicyWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open weights file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_weights(buf.str(), path.string());
}

std::string serialize_weights(const PolicyWeights& w) {
    json doc;
    doc["version"] = w.version;
    doc["squash"] = w.squash;
    doc["feature_order"] = w.feature_order;
    doc["layers"] = json::array();
    for (const DenseLayer& l : w.layers) {
        json j;
        j["rows"] = l.w.rows();
        j["cols"] = l.w.cols();
        std::vector<double> wv;
        for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.w.cols(); ++c) {
                wv.push_back(l.w(r, c));
            }
        }
        j["w"] = wv;
        j["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
        j["act"] = l.act;
        doc["layers"].push_back(std::move(j));
    }
    return doc.dump();
}

std::array<double, kActDim> mlp_forward(const PolicyWeights& w, const std::array<double, kObsDim>& features) {
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(features.data(), kObsDim);
    for (const DenseLayer& l : w.layers) {
        if (l.w.cols() != h.size()) {
            throw std::invalid_argument("weights shape does not match the activation width");
        }
        h = l.w * h + l.b;
        if (l.act == "relu") {
            h = h.cwiseMax(0.0);
        } else if (l.act == "tanh") {
            h = h.array().tanh();
        }
    }
    if (h.size() != kActDim) {
        throw std::invalid_argument("policy output width is not the action dimension");
    }
    if (!h.allFinite()) {
        throw std::runtime_error("policy produced a non-finite activation");
    }
    std::array<double, kActDim> a{};
    for (int i = 0; i < kActDim; ++i) {
        a[i] = 0.5 * (std::tanh(h[i]) + 1.0);
    }
    return a;
}

MlpPolicy::MlpPolicy(PolicyWeights w, Normalization n) : w_(std::move(w)), n_(n) { validate_weights(w_); }

plant::PlanningAction MlpPolicy::act(const Observation& obs) {
    return plant::PlanningAction::from_array(mlp_forward(w_, normalize(obs, n_)));
}

double action_to_request(const plant::PlanningAction& a, const AidcConfig& cfg, double d_inf) {
    std::array<double, kGroups> s = a.s;
    s[2] = std::min(s[2], d_inf);
    return plant::facility_power(cfg, s, a.phi_ch * cfg.bess.p_max_mw, a.phi_dis * cfg.bess.p_max_mw);
}

plant::PlanningAction admissible_action(const plant::PlanningAction& a, const AidcConfig& cfg, double d_inf,
                                        double e_bess_mwh, double dt_h) {
    plant::PlanningAction out = a;
    out.s[2] = std::min(out.s[2], d_inf);
    const double pmax = cfg.bess.p_max_mw;
    if (pmax > 0.0) {
        out.phi_ch = std::min(out.phi_ch, plant::max_charge_mw(e_bess_mwh, dt_h, cfg.bess) / pmax);
        out.phi_dis = std::min(out.phi_dis, plant::max_discharge_mw(e_bess_mwh, dt_h, cfg.bess) / pmax);
    }
    return out;
}

}  // namespace aidcsim::policy
