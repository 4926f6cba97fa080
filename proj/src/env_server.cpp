#include "aidcsim/env.hpp"

#include <nlohmann/json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

namespace aidcsim::env {

using nlohmann::json;

namespace {

std::string error_reply(const std::string& code, const std::string& detail) {
    return json{{"type", "error"}, {"code", code}, {"detail", detail}}.dump();
}

json features_json(const sim::Episode& ep) {
    const auto f = ep.features();
    return json(std::vector<double>(f.begin(), f.end()));
}

}  // namespace

RegisteredScenario register_scenario(Scenario s) {
    RegisteredScenario r;
    r.ctx = std::make_shared<const grid::GridContext>(grid::make_grid_context(s));
    r.scenario = std::move(s);
    return r;
}

Session::Session(std::vector<RegisteredScenario> scenarios) : scenarios_(std::move(scenarios)) {
    if (scenarios_.empty()) {
        throw std::invalid_argument("environment server needs at least one scenario");
    }
}

void Session::discard_episode() { episode_.reset(); }

std::string Session::handle(const std::string& line) {
    json msg;
    try {
        msg = json::parse(line);
    } catch (const json::parse_error& e) {
        return error_reply("bad_json", e.what());
    }
    if (!msg.is_object()) {
        return error_reply("bad_message", "message must be a JSON object");
    }
    const auto type = msg.find("type");
    if (type == msg.end()) {
        return error_reply("missing_field", "type");
    }
    if (!type->is_string()) {
        return error_reply("bad_message", "type must be a string");
    }
    const std::string t = type->get<std::string>();
    if (t == "hello") {
        return on_hello();
    }
    if (t == "reset") {
        return on_reset(msg);
    }
    if (t == "act") {
        return on_act(msg);
    }
    return error_reply("unknown_type", t);
}

std::string Session::on_hello() {
    json names = json::array();
    for (const RegisteredScenario& r : scenarios_) {
        names.push_back(r.scenario.name);
    }
    return json{{"type", "hello"},
                {"version", kProtocolVersion},
                {"obs_dim", policy::kObsDim},
                {"act_dim", policy::kActDim},
                {"feature_order", policy::kFeatureOrder},
                {"scenarios", names}}
        .dump();
}

std::string Session::on_reset(const json& msg) {
    if (!msg.contains("scenario_id")) {
        return error_reply("missing_field", "scenario_id");
    }
    if (!msg.contains("seed")) {
        return error_reply("missing_field", "seed");
    }
    const json& id = msg.at("scenario_id");
    const json& seed = msg.at("seed");
    if (!id.is_string()) {
        return error_reply("bad_field", "scenario_id must be a string");
    }
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        return error_reply("bad_field", "seed must be a nonnegative integer");
    }
    const RegisteredScenario* found = nullptr;
    for (const RegisteredScenario& r : scenarios_) {
        if (r.scenario.name == id.get<std::string>()) {
            found = &r;
        }
    }
    if (!found) {
        return error_reply("unknown_scenario", id.get<std::string>());
    }
    const Scenario& s = found->scenario;
    const int steps = s.trace.steps();
    int horizon = steps;
    int first = 0;
    if (s.env_window_steps > 0 && s.env_window_steps < steps) {
        horizon = s.env_window_steps;
        std::mt19937_64 rng(seed.get<std::uint64_t>());
        first = std::uniform_int_distribution<int>(0, steps - horizon)(rng);
    }
    episode_ = std::make_unique<sim::Episode>(s, found->ctx, first, horizon, "env");
    return json{{"type", "obs"},
                {"t", episode_->next_t()},
                {"features", features_json(*episode_)},
                {"first_step", first + 1},
                {"horizon", horizon}}
        .dump();
}

std::string Session::on_act(const json& msg) {
    if (!episode_) {
        return error_reply("no_episode", "send reset first");
    }
    if (episode_->done()) {
        return error_reply("episode_done", "send reset to start a new episode");
    }
    if (!msg.contains("action")) {
        return error_reply("missing_field", "action");
    }
    const json& a = msg.at("action");
    if (!a.is_array()) {
        return error_reply("bad_action", "action must be an array");
    }
    if (a.size() != static_cast<std::size_t>(policy::kActDim)) {
        return error_reply("bad_action_dim",
                           "expected " + std::to_string(policy::kActDim) + " entries, got " + std::to_string(a.size()));
    }
    std::array<double, policy::kActDim> v{};
    for (int i = 0; i < policy::kActDim; ++i) {
        if (!a[i].is_number() || !std::isfinite(a[i].get<double>())) {
            return error_reply("bad_action", "entry " + std::to_string(i) + " is not a finite number");
        }
        v[i] = a[i].get<double>();
        if (v[i] < 0.0 || v[i] > 1.0) {
            return error_reply("bad_action_range", "entry " + std::to_string(i) + " outside [0, 1]");
        }
    }
    try {
        const sim::StepRecord& r = episode_->step(plant::PlanningAction::from_array(v));
        json info = {{"p_req", r.p_req},
                     {"p_acc", r.p_acc},
                     {"kappa", r.kappa},
                     {"mechanism", grid::to_string(r.mechanism)},
                     {"reward_parts",
                      {{"urgency", r.parts.urgency}, {"rejection", r.parts.rejection}, {"curtailment", r.parts.curtailment}}}};
        return json{{"type", "step"},
                    {"obs", {{"t", episode_->next_t()}, {"features", features_json(*episode_)}}},
                    {"reward", r.reward},
                    {"done", episode_->done()},
                    {"info", info}}
            .dump();
    } catch (const grid::TsoInfeasible& e) {
        return error_reply("episode_aborted", std::string("grid: ") + e.what());
    } catch (const plant::InfeasibleBudget& e) {
        return error_reply("episode_aborted", std::string("plant: ") + e.what());
    }
}

void serve_stream(Session& session, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        out << session.handle(line) << '\n';
        out.flush();
    }
    session.discard_episode();
}

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

// Reads lines from one client until it disconnects or `stop` is set.
void serve_client(Session& session, int fd, const std::atomic<bool>& stop) {
    std::string buffer;
    char chunk[4096];
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready < 0 && errno != EINTR) {
            break;
        }
        if (ready <= 0) {
            continue;
        }
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) {
            break;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            if (!send_all(fd, session.handle(line) + "\n")) {
                return;
            }
        }
    }
}

}  // namespace

int serve_tcp(Session& session, const std::string& host, int port, const std::atomic<bool>& stop,
              std::atomic<int>* bound_port, std::ostream& log) {
    const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
    if (srv < 0) {
        log << "socket: " << std::strerror(errno) << '\n';
        return 1;
    }
    const int one = 1;
    ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        log << "invalid IPv4 address '" << host << "'\n";
        ::close(srv);
        return 1;
    }
    if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(srv, 1) < 0) {
        log << "bind/listen on " << host << ':' << port << ": " << std::strerror(errno) << '\n';
        ::close(srv);
        return 1;
    }
    socklen_t len = sizeof(addr);
    ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
    const int actual = ntohs(addr.sin_port);
    if (bound_port) {
        bound_port->store(actual);
    }
    log << "listening on " << host << ':' << actual << '\n';
    while (!stop.load()) {
        pollfd p{srv, POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready <= 0) {
            continue;
        }
        const int client = ::accept(srv, nullptr, nullptr);
        if (client < 0) {
            continue;
        }
        serve_client(session, client, stop);
        ::close(client);
        session.discard_episode();
    }
    ::close(srv);
    return 0;
}

}  // namespace aidcsim::env
