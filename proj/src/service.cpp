#include "liftguard/service.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "liftguard/errors.hpp"
#include "liftguard/model_io.hpp"
#include "liftguard/wire.hpp"

namespace liftguard {

ProtocolHandler::ProtocolHandler(std::shared_ptr<const ModelParams> model, SessionOptions options,
                                 std::string session_id)
    : model_(std::move(model)), options_(options), session_id_(std::move(session_id)) {}

Reply ProtocolHandler::on_message(std::string_view text) {
    Reply reply;
    auto fail = [&reply](wire::ErrorCode code, std::string_view detail, bool close) {
        reply.messages.push_back(wire::error_message(code, detail));
        reply.close = close;
    };
    try {
        const auto msg = wire::parse_client_message(text);
        if (const auto* hello = std::get_if<wire::Hello>(&msg)) {
            if (session_) {
                fail(wire::ErrorCode::Proto, "duplicate hello", true);
            } else if (hello->proto != wire::kProtocolVersion) {
                fail(wire::ErrorCode::Proto,
                     fmt::format("unsupported protocol version {}", hello->proto), true);
            } else {
                session_.emplace(session_id_, model_, options_);
                reply.messages.push_back(wire::ready_message(session_id_));
            }
            return reply;
        }
        if (!session_) {
            fail(wire::ErrorCode::Proto, "frame received before hello", true);
            return reply;
        }
        if (auto update = session_->push_frame(std::get<wire::Frame>(msg).frame)) {
            reply.messages.push_back(wire::prediction_message(*update));
        }
    } catch (const wire::ProtocolError& e) {
        fail(e.code(), e.what(), e.code() != wire::ErrorCode::BadFrame);
    } catch (const ValidationError& e) {
        fail(wire::ErrorCode::BadFrame, e.what(), false);
    } catch (const std::exception& e) {
        fail(wire::ErrorCode::Internal, e.what(), true);
    }
    return reply;
}

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Shared {
    std::shared_ptr<const ModelParams> model;
    ServiceOptions options;
    std::atomic<std::size_t> active{0};
    std::atomic<std::uint64_t> next_id{0};
    std::function<nlohmann::json()> health;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : ws_(std::move(socket)),
          shared_(std::move(shared)),
          handler_(shared_->model, shared_->options.session,
                   fmt::format("s{:06d}", ++shared_->next_id)) {}

    ~WsConnection() {
        if (accepted_) --shared_->active;
    }

    void run(http::request<http::string_body> req) {
        beast::get_lowest_layer(ws_).expires_never();
        websocket::stream_base::timeout timeouts{};
        timeouts.handshake_timeout = std::chrono::seconds(30);
        timeouts.idle_timeout = shared_->options.session_timeout;
        timeouts.keep_alive_pings = false;
        ws_.set_option(timeouts);
        ws_.read_message_max(shared_->options.max_message_bytes);
        ws_.text(true);
        ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        accepted_ = true;
        ++shared_->active;
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            if (ec != websocket::error::closed) {
                spdlog::debug("session read ended: {}", ec.message());
            }
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        Reply reply = handler_.on_message(text);
        for (auto& m : reply.messages) outbox_.push_back(std::move(m));
        close_after_ = reply.close;
        write_next();
    }

    void write_next() {
        if (outbox_.empty()) {
            if (close_after_) {
                ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "protocol violation"),
                                [self = shared_from_this()](beast::error_code) {});
            } else {
                do_read();
            }
            return;
        }
        ws_.async_write(net::buffer(outbox_.front()),
                        beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) return;
        outbox_.pop_front();
        write_next();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::shared_ptr<Shared> shared_;
    ProtocolHandler handler_;
    std::deque<std::string> outbox_;
    bool close_after_ = false;
    bool accepted_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : stream_(std::move(socket)), shared_(std::move(shared)) {}

    void run() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_,
                         beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

private:
    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            std::make_shared<WsConnection>(stream_.release_socket(), shared_)->run(std::move(req_));
            return;
        }
        res_.version(req_.version());
        res_.keep_alive(false);
        res_.set(http::field::server, "liftguard");
        if (req_.method() == http::verb::get && req_.target() == "/health") {
            res_.result(http::status::ok);
            res_.set(http::field::content_type, "application/json");
            res_.body() = shared_->health().dump();
        } else {
            res_.result(http::status::not_found);
            res_.set(http::field::content_type, "text/plain");
            res_.body() = "not found\n";
        }
        res_.prepare_payload();
        http::async_write(stream_, res_,
                          [self = shared_from_this()](beast::error_code, std::size_t) {
                              beast::error_code ignored;
                              self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    http::response<http::string_body> res_;
    std::shared_ptr<Shared> shared_;
};

class Listener : public std::enable_shared_from_this<Listener> {
public:
    Listener(net::io_context& ioc, tcp::acceptor acceptor, std::shared_ptr<Shared> shared)
        : ioc_(ioc), acceptor_(std::move(acceptor)), shared_(std::move(shared)) {}

    void run() { do_accept(); }
    void close() {
        net::post(acceptor_.get_executor(), [self = shared_from_this()] {
            beast::error_code ignored;
            self->acceptor_.close(ignored);
        });
    }

private:
    void do_accept() {
        acceptor_.async_accept(net::make_strand(ioc_),
                               beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
    }

    void on_accept(beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted || !acceptor_.is_open()) return;
        if (!ec) std::make_shared<HttpConnection>(std::move(socket), shared_)->run();
        do_accept();
    }

    net::io_context& ioc_;
    tcp::acceptor acceptor_;
    std::shared_ptr<Shared> shared_;
};

}  // namespace

struct RiskService::Impl {
    std::shared_ptr<Shared> shared = std::make_shared<Shared>();
    net::io_context ioc;
    std::shared_ptr<Listener> listener;
    std::vector<std::thread> workers;
    unsigned short port = 0;
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool running = false;
};

RiskService::RiskService(std::shared_ptr<const ModelParams> model, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
    if (!model) throw ConfigError("service needs a model");
    model->validate();
    options.session.validate();
    if (options.threads < 1) throw ConfigError("service needs at least one worker thread");
    impl_->shared->model = std::move(model);
    impl_->shared->options = std::move(options);
    impl_->shared->health = [this] { return health(); };
}

RiskService::~RiskService() { stop(); }

void RiskService::start() {
    std::lock_guard lock(impl_->mutex);
    if (impl_->running) return;
    const auto& opts = impl_->shared->options;
    beast::error_code ec;
    const auto address = net::ip::make_address(opts.address, ec);
    if (ec) throw ConfigError(fmt::format("invalid bind address '{}'", opts.address));
    tcp::acceptor acceptor(net::make_strand(impl_->ioc));
    const tcp::endpoint endpoint(address, opts.port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        throw ServiceError(fmt::format("cannot listen on {}:{}: {}", opts.address, opts.port,
                                      ec.message()));
    }
    impl_->port = acceptor.local_endpoint().port();
    impl_->ioc.restart();
    impl_->listener = std::make_shared<Listener>(impl_->ioc, std::move(acceptor), impl_->shared);
    impl_->listener->run();
    for (std::size_t i = 0; i < opts.threads; ++i) {
        impl_->workers.emplace_back([this] { impl_->ioc.run(); });
    }
    impl_->running = true;
    spdlog::info("serving on {}:{} ({} workers)", opts.address, impl_->port, opts.threads);
}

void RiskService::stop() {
    {
        std::lock_guard lock(impl_->mutex);
        if (!impl_->running) return;
        impl_->listener->close();
        impl_->ioc.stop();
    }
    for (auto& w : impl_->workers) {
        if (w.joinable()) w.join();
    }
    {
        std::lock_guard lock(impl_->mutex);
        impl_->workers.clear();
        impl_->listener.reset();
        impl_->running = false;
    }
    impl_->stopped_cv.notify_all();
}

void RiskService::wait() {
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return !impl_->running; });
}

unsigned short RiskService::port() const { return impl_->port; }

std::size_t RiskService::active_sessions() const { return impl_->shared->active.load(); }

nlohmann::json RiskService::health() const {
    const auto& m = *impl_->shared->model;
    const auto& opts = impl_->shared->options;
    return {{"status", "ok"},
            {"service", "liftguard"},
            {"protocol", wire::kProtocolVersion},
            {"active_sessions", active_sessions()},
            {"window", kWindowLength},
            {"stride", opts.session.stride},
            {"model",
             {{"input_width", m.arch.input_width},
              {"lstm_units", m.arch.lstm_units},
              {"dense_units", m.arch.dense_units},
              {"filter_head", m.arch.filter_head},
              {"canonicalize", m.arch.canonicalize},
              {"seed", m.seed},
              {"parameters", m.parameter_count()}}}};
}

std::unique_ptr<RiskService> serve(const std::filesystem::path& model_path, ServiceOptions options) {
    auto model = std::make_shared<const ModelParams>(load_model(model_path));
    auto service = std::make_unique<RiskService>(std::move(model), std::move(options));
    service->start();
    return service;
}

}  // namespace liftguard
