#include "aidcsim/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace aidcsim::sim {

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) {
        throw std::runtime_error("cannot write " + p.string());
    }
    os << std::setprecision(10);
    return os;
}

std::string fmt(double v, int digits = 2) {
    if (std::isnan(v)) {
        return "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

struct BehaviorRow {
    const char* name;
    const GroupMeans* g;
};

std::vector<BehaviorRow> behavior_rows(const MetricsReport& m) {
    return {{"p_req_mw", &m.p_req}, {"kappa_mw", &m.kappa}, {"s_1a", &m.s_1a}, {"s_1b", &m.s_1b}, {"s_2", &m.s_2}};
}

}  // namespace

void print_summary(std::ostream& os, const EpisodeRecord& ep, const MetricsReport& m) {
    os << "scenario " << ep.scenario << "  policy " << ep.policy << "  steps " << m.steps;
    if (ep.aborted) {
        os << "  ABORTED at step " << ep.abort_step << ": " << ep.abort_reason;
    }
    os << "\n\n";
    os << "strategy      reward    mean kappa MW  curtail %  W_1a %  W_1b %  curtailed MWh\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %9s %14s %10s %7s %7s %14s\n", ep.policy.c_str(),
                  fmt(m.cumulative_reward).c_str(), fmt(m.mean_kappa_mw).c_str(), fmt(m.curtail_freq_pct).c_str(),
                  fmt(m.w_pct[0]).c_str(), fmt(m.w_pct[1]).c_str(), fmt(m.curtailed_energy_mwh).c_str());
    os << line << '\n';
    os << "quantity        peak    off-peak   delta   (peak > " << fmt(m.peak_threshold_mw, 0)
       << " MW, off-peak < " << fmt(m.offpeak_threshold_mw, 0) << " MW)\n";
    for (const BehaviorRow& r : behavior_rows(m)) {
        std::snprintf(line, sizeof(line), "%-12s %8s %10s %8s\n", r.name, fmt(r.g->peak, 3).c_str(),
                      fmt(r.g->offpeak, 3).c_str(), fmt(r.g->delta(), 3).c_str());
        os << line;
    }
    os << "\nmax completion lag %  1a " << fmt(m.max_completion_lag_pct[0]) << "  1b "
       << fmt(m.max_completion_lag_pct[1]) << "\n";
    os << "BESS idle %  " << fmt(m.bess_idle_pct) << "   terminal SoC deviation MWh  "
       << fmt(m.terminal_soc_dev_mwh) << "\n";
    os << "curtailed steps by mechanism:";
    if (m.mechanisms.empty()) {
        os << " none";
    }
    for (const auto& [tag, n] : m.mechanisms) {
        os << ' ' << tag << '=' << n;
    }
    os << '\n';
}

void write_report_csvs(const std::filesystem::path& dir, const EpisodeRecord& ep, const MetricsReport& m) {
    std::filesystem::create_directories(dir);
    {
        auto os = open_csv(dir / "summary.csv");
        os << "policy,steps,aborted,cumulative_reward,mean_kappa_mw,curtail_freq_pct,w_1a_pct,w_1b_pct,"
              "curtailed_energy_mwh,bess_idle_pct,terminal_soc_dev_mwh\n";
        os << ep.policy << ',' << m.steps << ',' << (ep.aborted ? 1 : 0) << ',' << m.cumulative_reward << ','
           << m.mean_kappa_mw << ',' << m.curtail_freq_pct << ',' << m.w_pct[0] << ',' << m.w_pct[1] << ','
           << m.curtailed_energy_mwh << ',' << m.bess_idle_pct << ',' << m.terminal_soc_dev_mwh << '\n';
    }
    {
        auto os = open_csv(dir / "cluster_behavior.csv");
        os << "quantity,peak,offpeak,delta\n";
        for (const BehaviorRow& r : behavior_rows(m)) {
            os << r.name << ',' << r.g->peak << ',' << r.g->offpeak << ',' << r.g->delta() << '\n';
        }
    }
    {
        auto os = open_csv(dir / "completion_lag.csv");
        os << "t,lag_1a_pct,lag_1b_pct\n";
        for (std::size_t i = 0; i < m.completion_lag_pct[0].size(); ++i) {
            os << i + 1 << ',' << m.completion_lag_pct[0][i] << ',' << m.completion_lag_pct[1][i] << '\n';
        }
    }
    {
        auto os = open_csv(dir / "timeseries.csv");
        os << "t,demand_mw,p_req_mw,p_acc_mw,kappa_mw,mechanism,soc_mwh,s_1a,s_1b,s_2,p_ch_mw,p_dis_mw\n";
        for (const StepRecord& r : ep.steps) {
            os << r.t << ',' << ep.demand[r.t - 1] << ',' << r.p_req << ',' << r.p_acc << ',' << r.kappa << ','
               << grid::to_string(r.mechanism) << ',' << r.exec.soc_after_mwh << ',' << r.exec.x.s[0] << ','
               << r.exec.x.s[1] << ',' << r.exec.x.s[2] << ',' << r.exec.x.p_ch_mw << ',' << r.exec.x.p_dis_mw
               << '\n';
        }
    }
}

}  // namespace aidcsim::sim
