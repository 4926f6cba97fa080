#pragma once

#include "aidcsim/sim.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace aidcsim::env {

inline constexpr int kProtocolVersion = 1;

struct RegisteredScenario {
    Scenario scenario;
    std::shared_ptr<const grid::GridContext> ctx;
};

// Newline-delimited JSON session: one request line in, one reply line out.
//
//   {"type":"hello"}                               -> {"type":"hello", obs_dim, act_dim, feature_order, scenarios}
//   {"type":"reset","scenario_id":S,"seed":N}      -> {"type":"obs","t":1,"features":[13]}
//   {"type":"act","action":[5]}                    -> {"type":"step","obs":{...},"reward":r,"done":b,"info":{...}}
//   anything malformed                             -> {"type":"error","code":C,"detail":D}
//
// A reset picks an episode window: the whole trace, or, when the scenario sets
// env_window_steps, a window drawn uniformly from the trace with the given seed.
class Session {
public:
    explicit Session(std::vector<RegisteredScenario> scenarios);

    std::string handle(const std::string& line);
    // Drops the running episode (used when the transport goes away).
    void discard_episode();
    bool has_episode() const { return episode_ != nullptr; }

private:
    std::string on_hello();
    std::string on_reset(const nlohmann::json& msg);
    std::string on_act(const nlohmann::json& msg);

    std::vector<RegisteredScenario> scenarios_;
    std::unique_ptr<sim::Episode> episode_;
};

RegisteredScenario register_scenario(Scenario s);

// Serves lines from `in` until end of input.
void serve_stream(Session& session, std::istream& in, std::ostream& out);

// Listens on host:port and serves one client at a time until `stop` becomes
// true. The bound port (useful with port 0) is stored in `bound_port` once
// listening. Returns 0 on clean shutdown.
int serve_tcp(Session& session, const std::string& host, int port, const std::atomic<bool>& stop,
              std::atomic<int>* bound_port, std::ostream& log);

}  // namespace aidcsim::env
