#pragma once

#include "selfprior/categorical.hpp"
#include "selfprior/continuous_world.hpp"
#include "selfprior/discrete_world.hpp"
#include "selfprior/trace.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

namespace selfprior::gateway {

enum class WorldKind { Discrete, Continuous };

std::string kind_name(WorldKind kind);
WorldKind parse_kind(const std::string& name);

/// Newline-delimited request/response session over one world.
///
/// Requests are objects {"id": int, "cmd": str, "args": {...}}. Every response
/// echoes the id and carries "ok"; failures carry "error". Commands:
///
///   hello                       protocol_version, kind
///   reset    {seed?, sticker?}  observation, info
///   step     {action}           observation, info
///   place_sticker {u, v} | {position}
///   remove_sticker
///   close
///
/// Continuous observations are {"tactile": [2400], "proprio": [3]}, discrete
/// ones {"index", "touch", "hand"}. Floats are rounded to 6 decimals.
class Session {
public:
    Session(WorldKind kind, std::uint64_t seed);

    nlohmann::json handle_message(const nlohmann::json& request);
    /// Parses one line and returns the serialized response (no newline).
    std::string handle_line(const std::string& line);

    bool closed() const { return closed_; }
    WorldKind kind() const { return kind_; }

private:
    nlohmann::json dispatch(const std::string& cmd, const nlohmann::json& args);
    nlohmann::json reset(const nlohmann::json& args);
    nlohmann::json step(const nlohmann::json& args);
    nlohmann::json place_sticker(const nlohmann::json& args);
    nlohmann::json remove_sticker();
    nlohmann::json observation_payload() const;
    nlohmann::json info_payload(bool accepted, bool removed) const;

    WorldKind kind_;
    RandomStream rng_;
    std::optional<std::int64_t> last_id_;
    bool closed_ = false;
    std::optional<std::variant<discrete::DiscreteWorldState, continuous::ContinuousWorldState>> world_;
};

/// Builds the session for each new connection.
using SessionFactory = std::function<Session()>;

/// Serves one session over line streams until "close" or end of input.
void serve_stream(std::istream& in, std::ostream& out, Session session);

/// TCP listener. Each connection gets its own Session from the factory and its
/// own thread; sessions share no state.
class Server {
public:
    /// Binds host:port (port 0 picks a free port). Throws std::runtime_error on failure.
    Server(const std::string& host, std::uint16_t port, SessionFactory factory);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const { return port_; }
    /// Blocks accepting connections until stop() is called.
    void run();
    void stop();

private:
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    SessionFactory factory_;
    std::atomic<bool> stopping_{false};
};

/// Minimal blocking line client, used by tests and the collection harness.
class LineClient {
public:
    LineClient(const std::string& host, std::uint16_t port);
    ~LineClient();
    LineClient(const LineClient&) = delete;
    LineClient& operator=(const LineClient&) = delete;

    std::string request(const std::string& line);
    nlohmann::json request(const nlohmann::json& message);

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace selfprior::gateway
