#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aidcsim {

// Malformed input file: bad syntax, missing field, wrong type, bad cell.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input that breaks one or more model invariants.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& what, std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

struct Line {
    int from = 0;
    int to = 0;
    double b_pu = 0.0;
    double f_max_mw = 0.0;
};

struct Generator {
    int bus = 0;
    double g_min_mw = 0.0;
    double g_max_mw = 0.0;
    double cost = 0.0;           // AUD/MWh
    double ramp_mw_per_h = 0.0;
    std::string tech;
};

struct NetworkCase {
    std::string name;
    std::vector<int> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    int ref_bus = 0;
    int aidc_bus = 0;
    std::map<int, double> load_share;
    double mva_base = 100.0;

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }
    int num_generators() const { return static_cast<int>(generators.size()); }
    // Position of a bus id in `buses`; -1 when absent.
    int bus_index(int bus_id) const;
    // Load share per bus position (zero where the map has no entry).
    std::vector<double> share_vector() const;
    double max_cost() const;
};

std::vector<std::string> check_network_case(const NetworkCase& c);
NetworkCase parse_network_case(const std::string& text, const std::string& origin = "<string>");
NetworkCase load_network_case(const std::filesystem::path& path);
// Canonical JSON text; bundled case files are stored in exactly this form.
std::string serialize_network_case(const NetworkCase& c);

enum class Group { Frontier = 0, Batch = 1, Inference = 2 };
inline constexpr int kGroups = 3;
const char* group_label(Group g);  // "1a", "1b", "2"

struct ClusterSpec {
    std::string id;
    std::string role;
    int accelerators = 0;
    double p_peak_mw = 0.0;
    double idle_ratio = 0.0;
    double w_req = 0.0;

    double p_idle_mw() const { return idle_ratio * p_peak_mw; }
};

struct BessSpec {
    double p_max_mw = 200.0;
    double e_min_mwh = 30.0;
    double e_max_mwh = 300.0;
    double eta_ch = 0.95;
    double eta_dis = 0.95;
    double soc_init_fraction = 0.9;
    double c_cyc = 0.5;

    double e_init_mwh() const { return soc_init_fraction * e_max_mwh; }
};

struct AidcConfig {
    std::array<ClusterSpec, kGroups> clusters;
    double gamma = 0.10;
    double eta_ipcs = 0.95;
    BessSpec bess;
    double m_1a = 100.0;
    double m_1b = 50.0;
    double alpha_w = 0.01;
    double alpha_rej = 3.0;
    double alpha_kappa = 0.005;
    double lambda = 100.0;

    const ClusterSpec& cluster(Group g) const { return clusters[static_cast<int>(g)]; }
    // Grid-side draw with every group at full throughput and the battery idle.
    double nominal_capacity_mw() const;
    // Grid-side draw with every group in deep idle and the battery idle.
    double idle_floor_mw() const;
};

// Defaults of the reference parameter table (1.1 GW IT, 200 MW / 300 MWh battery).
AidcConfig default_aidc_config();

enum class ParticipationRule { Capacity, Ramp };

struct TsoConfig {
    double gamma_u = 5.0;
    double eps = 0.07;
    double gamma_kappa = 1e5;
    double rho = 1.0;
    double r_grid_mw = 150.0;  // per step
    ParticipationRule participation = ParticipationRule::Capacity;
};

struct ObservationScaling {
    double price_aud_mwh = 300.0;
    // Zero selects the AIDC nominal capacity for MW-valued features.
    double power_mw = 0.0;
    // Zero selects the largest system demand in the trace.
    double demand_mw = 0.0;
};

struct HeuristicConfig {
    double peak_percentile = 75.0;
    int trailing_window = 0;  // 0: percentile over the full trace
    double peak_s1a = 0.8;
    double peak_s1b = 0.2;
    double urgency_trigger = 1.05;
    double urgency_bump = 0.1;
    double discharge_soc = 0.6;
    double discharge_fraction = 0.5;
    double charge_soc = 0.9;
    double charge_fraction = 0.5;
};

struct ExogenousTrace {
    double dt_h = 0.25;
    std::vector<std::string> timestamps;
    std::vector<double> price;    // AUD/MWh
    std::vector<double> demand;   // system demand, MW
    std::vector<double> d_inf;    // inference arrivals as a fraction of cluster 2 capacity
    // bus_mw[t][n]: per-bus forecast by bus position; filled by attach_bus_forecast.
    std::vector<std::vector<double>> bus_mw;

    int steps() const { return static_cast<int>(demand.size()); }
    // Contiguous sub-trace [first, first + count).
    ExogenousTrace window(int first, int count) const;
};

void attach_bus_forecast(ExogenousTrace& trace, const NetworkCase& c);
std::vector<std::string> check_trace(const ExogenousTrace& trace);

// Reads `timestamp,price_aud_mwh,demand_mw,inference_frac` (header required)
// and keeps the first `steps` rows.
ExogenousTrace load_traces(const std::filesystem::path& path, double dt_h, int steps);
ExogenousTrace parse_traces(const std::string& text, double dt_h, int steps,
                            const std::string& origin = "<string>");
void write_traces(const std::filesystem::path& path, const ExogenousTrace& trace);

struct DiurnalProfile {
    double mean = 0.0;
    double amplitude = 0.0;  // half peak-to-trough swing
    double peak_hour = 18.0;
    double noise_sd = 0.0;
};

// Additive system-demand bump used to construct stress days.
struct DemandEvent {
    int start_step = 0;
    int duration_steps = 0;
    double extra_mw = 0.0;
};

struct SynthSpec {
    int steps = 96;
    double dt_h = 0.25;
    double start_hour = 0.0;
    DiurnalProfile price{90.0, 40.0, 18.0, 6.0};
    DiurnalProfile demand{4600.0, 700.0, 17.0, 40.0};
    double inference_peak = 0.55;
    double inference_trough = 0.15;
    double inference_peak_hour = 11.0;
    double inference_noise_sd = 0.0;
    // Day-to-day scaling of the demand swing, cycled over days.
    std::vector<double> daily_demand_scale;
    std::vector<DemandEvent> events;
};

ExogenousTrace synth_traces(const SynthSpec& spec, std::uint64_t seed);

struct Scenario {
    std::string name;
    NetworkCase network;
    AidcConfig aidc;
    TsoConfig tso;
    ExogenousTrace trace;
    std::uint64_t seed = 0;
    double line_rating_scale = 0.78;
    ObservationScaling scaling;
    HeuristicConfig heuristic;
    // Episode length served by the environment server (0: whole trace).
    int env_window_steps = 0;
};

struct ValidationReport {
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

ValidationReport validate_scenario(const Scenario& s);

// Relative paths inside the file (case, csv) resolve against its directory.
// Throws ScenarioError when validation fails.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& origin = "<string>");

}  // namespace aidcsim
