#pragma once

#include "aidcsim/plant.hpp"
#include "aidcsim/scenario.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace aidcsim::policy {

inline constexpr int kObsDim = 13;
inline constexpr int kActDim = 5;
inline constexpr int kFeatureVersion = 1;

// Wire order of the observation features.
extern const std::array<const char*, kObsDim> kFeatureOrder;

enum Feature {
    kEBess = 0,
    kS1aPrev,
    kS1bPrev,
    kS2Prev,
    kR1a,
    kR1b,
    kEta1a,
    kEta1b,
    kPAccPrev,
    kKappaPrev,
    kPrice,
    kDemand,
    kDInf,
};

struct Observation {
    int t = 1;                          // 1-based step the observation is for
    std::array<double, kObsDim> raw{};  // physical units (MWh, MW, AUD/MWh, throughput-hours)
};

// Divisors applied feature by feature to produce the wire vector.
struct Normalization {
    std::array<double, kObsDim> scale{};
};

Normalization make_normalization(const AidcConfig& cfg, const ObservationScaling& s,
                                 const ExogenousTrace& trace, int horizon);
std::array<double, kObsDim> normalize(const Observation& obs, const Normalization& n);

// Urgency of a training group: remaining work relative to the uniform pace.
// `t` is 1-based; zero target yields zero.
double urgency(double remaining_h, double target_h, int t, int horizon);

// Builds the observation for 1-based step t of a horizon of `horizon` steps
// whose exogenous signals are trace rows [first, first + horizon). Before the
// first step the previous throughputs, accepted power and curtailment are zero.
Observation build_observation(const plant::AidcState& st, double p_acc_prev, double kappa_prev,
                              const ExogenousTrace& trace, int first, int t, int horizon,
                              const AidcConfig& cfg);

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual plant::PlanningAction act(const Observation& obs) = 0;
};

class FixedBufferPolicy : public Policy {
public:
    explicit FixedBufferPolicy(double level = 0.85) : level_(level) {}
    std::string name() const override { return "fixed-buffer"; }
    plant::PlanningAction act(const Observation& obs) override;

private:
    double level_;
};

// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double pct);

class HeuristicPolicy : public Policy {
public:
    // `demand` is the evaluation demand series the percentile is taken over.
    HeuristicPolicy(HeuristicConfig cfg, const AidcConfig& aidc, std::vector<double> demand);
    std::string name() const override { return "heuristic"; }
    plant::PlanningAction act(const Observation& obs) override;
    // Threshold used at 1-based step t.
    double peak_threshold(int t) const;

private:
    HeuristicConfig cfg_;
    double e_max_;
    std::vector<double> demand_;
    double full_threshold_ = 0.0;
};

struct DenseLayer {
    Eigen::MatrixXd w;  // rows x cols
    Eigen::VectorXd b;
    std::string act;    // relu | tanh | identity
};

struct PolicyWeights {
    int version = 1;
    std::vector<DenseLayer> layers;
    std::string squash = "tanh01";
    std::vector<std::string> feature_order;
};

// Throws ParseError on malformed JSON or a contract violation.
PolicyWeights parse_weights(const std::string& text, const std::string& origin = "<string>");
PolicyWeights load_weights(const std::filesystem::path& path);
std::string serialize_weights(const PolicyWeights& w);
void validate_weights(const PolicyWeights& w);

// Deterministic forward pass on a normalized feature vector.
std::array<double, kActDim> mlp_forward(const PolicyWeights& w, const std::array<double, kObsDim>& features);

class MlpPolicy : public Policy {
public:
    MlpPolicy(PolicyWeights w, Normalization n);
    std::string name() const override { return "mlp"; }
    plant::PlanningAction act(const Observation& obs) override;

private:
    PolicyWeights w_;
    Normalization n_;
};

// Requested PCC exchange for a planning action; the inference target is
// clipped to d_inf first.
double action_to_request(const plant::PlanningAction& a, const AidcConfig& cfg, double d_inf);

// Clips a raw action so the request it implies is executable: inference target
// at most d_inf, battery fractions within what the battery energy allows.
plant::PlanningAction admissible_action(const plant::PlanningAction& a, const AidcConfig& cfg, double d_inf,
                                        double e_bess_mwh, double dt_h);

}  // namespace aidcsim::policy
