#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "liftguard/lstm.hpp"
#include "liftguard/session.hpp"

namespace liftguard {

struct ServiceOptions {
    std::string address = "0.0.0.0";
    unsigned short port = 8765;  // 0 picks a free port
    std::size_t threads = 4;
    std::chrono::milliseconds session_timeout{60'000};
    std::size_t max_message_bytes = 64 * 1024;
    SessionOptions session;
};

struct Reply {
    std::vector<std::string> messages;
    bool close = false;
};

/// Transport-free state machine of one connection: hello first, then frames.
class ProtocolHandler {
public:
    ProtocolHandler(std::shared_ptr<const ModelParams> model, SessionOptions options,
                    std::string session_id);

    Reply on_message(std::string_view text);

    bool greeted() const { return session_.has_value(); }
    const Session* session() const { return session_ ? &*session_ : nullptr; }

private:
    std::shared_ptr<const ModelParams> model_;
    SessionOptions options_;
    std::string session_id_;
    std::optional<Session> session_;
};

/// WebSocket endpoint for live frame streams plus `GET /health` on the same
/// port. Each connection owns one Session; the model is shared read-only.
class RiskService {
public:
    RiskService(std::shared_ptr<const ModelParams> model, ServiceOptions options);
    ~RiskService();

    RiskService(const RiskService&) = delete;
    RiskService& operator=(const RiskService&) = delete;

    /// Binds and starts the worker threads. Throws ServiceError when the
    /// address cannot be bound.
    void start();
    /// Closes the listener and joins the workers.
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    unsigned short port() const;
    std::size_t active_sessions() const;
    nlohmann::json health() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Loads the model file and starts a service on it.
std::unique_ptr<RiskService> serve(const std::filesystem::path& model_path,
                                   ServiceOptions options);

}  // namespace liftguard
