#include "subterra/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

std::string_view to_string(RunState state) {
    switch (state) {
        case RunState::Loaded:
            return "Loaded";
        case RunState::Running:
            return "Running";
        case RunState::Paused:
            return "Paused";
        case RunState::Finished:
            return "Finished";
    }
    return "?";
}

namespace {

MissionRunner::Frame make_frame(const json& j) { return std::make_shared<const std::string>(j.dump()); }

}  // namespace

MissionRunner::MissionRunner(mission::Scenario scenario, RunnerOptions options)
    : mission_(std::make_unique<mission::Mission>(std::move(scenario))), options_(options) {
    grid_json_ = dump_grid(*mission_->scenario().grid);
    mission_->on_event = [this](const mission::Event& e) {
        pending_frames_.push_back(make_frame({{"type", "event"}, {"event", mission::to_json(e)}}));
    };
    if (mission_->finished()) {
        state_ = RunState::Finished;
    }
    snapshot_ = snapshot_frame();
    thread_ = std::thread([this] { loop(); });
}

MissionRunner::~MissionRunner() {
    {
        std::lock_guard lk(queue_mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
}

MissionRunner::Frame MissionRunner::snapshot_frame() const {
    json snap = mission_->snapshot();
    snap["run_state"] = to_string(state_.load());
    return make_frame(snap);
}

MissionRunner::Frame MissionRunner::snapshot() const {
    std::lock_guard lk(publish_mutex_);
    return snapshot_;
}

std::pair<MissionRunner::Frame, std::uint64_t> MissionRunner::subscribe(Sink sink) {
    std::lock_guard lk(publish_mutex_);
    const std::uint64_t id = next_sink_++;
    sinks_.emplace(id, std::move(sink));
    return {make_frame({{"type", "snapshot"}, {"state", json::parse(*snapshot_)}}), id};
}

void MissionRunner::unsubscribe(std::uint64_t id) {
    std::lock_guard lk(publish_mutex_);
    sinks_.erase(id);
}

bool MissionRunner::wait_finished(std::chrono::milliseconds timeout) {
    std::unique_lock lk(publish_mutex_);
    return finished_cv_.wait_for(lk, timeout, [this] { return state_.load() == RunState::Finished; });
}

CommandResult MissionRunner::submit(Command cmd) {
    auto result = cmd.done.get_future();
    {
        std::lock_guard lk(queue_mutex_);
        if (stop_) {
            return {Outcome::Conflict, "service stopping"};
        }
        commands_.push_back(std::move(cmd));
    }
    wake_.notify_all();
    return result.get();
}

CommandResult MissionRunner::control(const std::string& action) {
    Command cmd{Command::Kind::Control, action, {}, {}};
    return submit(std::move(cmd));
}

CommandResult MissionRunner::inject(const std::string& kind, const Vec3& location) {
    Command cmd{Command::Kind::Inject, kind, location, {}};
    return submit(std::move(cmd));
}

std::string MissionRunner::report_json() {
    Command cmd{Command::Kind::Report, {}, {}, {}};
    return submit(std::move(cmd)).message;
}

CommandResult MissionRunner::apply(Command& cmd) {
    CommandResult result;
    const RunState before = state_.load();
    switch (cmd.kind) {
        case Command::Kind::Control: {
            const std::string& a = cmd.text;
            if (a != "start" && a != "pause" && a != "resume") {
                result = {Outcome::Invalid, "unknown action '" + a + "'"};
            } else if (a == "start" && before == RunState::Loaded) {
                state_ = mission_->finished() ? RunState::Finished : RunState::Running;
            } else if (a == "pause" && before == RunState::Running) {
                state_ = RunState::Paused;
            } else if (a == "resume" && before == RunState::Paused) {
                state_ = RunState::Running;
            } else {
                result = {Outcome::Conflict, "cannot " + a + " while " + std::string(to_string(before))};
            }
            if (result.outcome == Outcome::Ok) {
                result.message = to_string(state_.load());
            }
            break;
        }
        case Command::Kind::Inject:
            if (before != RunState::Running) {
                result = {Outcome::Conflict, "mission is " + std::string(to_string(before))};
                break;
            }
            try {
                result.message = mission_->inject_task(cmd.text, cmd.location);
            } catch (const mission::RejectedCommand& ex) {
                result = {Outcome::Rejected, ex.what()};
            }
            break;
        case Command::Kind::Report:
            result.message = mission::to_json(mission_->report()).dump();
            break;
    }
    if (state_.load() != before) {
        pending_frames_.push_back(make_frame({{"type", "status"}, {"run_state", to_string(state_.load())}}));
    }
    return result;
}

void MissionRunner::publish() {
    std::lock_guard lk(publish_mutex_);
    snapshot_ = snapshot_frame();
    for (const Frame& f : pending_frames_) {
        for (auto& [id, sink] : sinks_) {
            sink(f);
        }
    }
    pending_frames_.clear();
    if (state_.load() == RunState::Finished) {
        finished_cv_.notify_all();
    }
}

void MissionRunner::loop() {
    using Clock = std::chrono::steady_clock;
    const auto step_period = options_.speed > 0.0
                                 ? std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
                                       mission_->scenario().timing.dt / options_.speed))
                                 : Clock::duration::zero();
    auto next_step = Clock::now();
    for (;;) {
        std::deque<Command> batch;
        {
            std::unique_lock lk(queue_mutex_);
            auto ready = [&] {
                return stop_ || !commands_.empty() ||
                       (state_.load() == RunState::Running && Clock::now() >= next_step);
            };
            if (state_.load() == RunState::Running) {
                wake_.wait_until(lk, next_step, ready);
            } else {
                wake_.wait(lk, ready);
            }
            if (stop_) {
                batch.swap(commands_);
                lk.unlock();
                for (Command& cmd : batch) {
                    cmd.done.set_value({Outcome::Conflict, "service stopping"});
                }
                return;
            }
            batch.swap(commands_);
        }
        const RunState before = state_.load();
        if (!batch.empty()) {
            std::vector<CommandResult> results;
            for (Command& cmd : batch) {
                results.push_back(apply(cmd));
            }
            // Readers see the effect of a command as soon as it is acknowledged.
            publish();
            for (std::size_t n = 0; n < batch.size(); ++n) {
                batch[n].done.set_value(std::move(results[n]));
            }
        }
        if (before != RunState::Running && state_.load() == RunState::Running) {
            next_step = Clock::now();
        }

        const auto now = Clock::now();
        if (state_.load() == RunState::Running && now >= next_step) {
            mission_->step();
            next_step += step_period;
            if (next_step + std::chrono::seconds(1) < now) {
                next_step = now;
            }
            if (mission_->finished()) {
                state_ = RunState::Finished;
                pending_frames_.push_back(make_frame({{"type", "status"}, {"run_state", "Finished"}}));
            }
            publish();
        }
    }
}

std::pair<int, std::string> handle_request(MissionRunner& runner, const std::string& method, const std::string& target,
                                           const std::string& body) {
    const std::string path = target.substr(0, target.find('?'));
    auto error = [](int status, const std::string& message) {
        return std::pair<int, std::string>{status, json{{"error", message}}.dump()};
    };
    auto outcome_status = [](Outcome o) {
        switch (o) {
            case Outcome::Ok:
                return 200;
            case Outcome::Conflict:
                return 409;
            case Outcome::Rejected:
                return 422;
            case Outcome::Invalid:
                return 400;
        }
        return 500;
    };

    if (method == "GET" && path == "/state") {
        return {200, *runner.snapshot()};
    }
    if (method == "GET" && path == "/grid") {
        return {200, runner.grid_json()};
    }
    if (method == "GET" && path == "/report") {
        return {200, runner.report_json()};
    }
    if (method == "POST" && (path == "/tasks" || path == "/control")) {
        json doc;
        try {
            doc = parse_json_document(body, "request body");
        } catch (const ParseError& ex) {
            return error(400, ex.what());
        }
        if (!doc.is_object()) {
            return error(400, "request body must be a JSON object");
        }
        if (path == "/control") {
            if (!doc.contains("action") || !doc.at("action").is_string()) {
                return error(400, "field 'action': expected string");
            }
            const CommandResult r = runner.control(doc.at("action").get<std::string>());
            if (r.outcome != Outcome::Ok) {
                return error(outcome_status(r.outcome), r.message);
            }
            return {200, json{{"run_state", r.message}}.dump()};
        }
        Vec3 location;
        std::string kind = "inspect";
        try {
            location = require_vec3(doc, "location");
            if (doc.contains("kind")) {
                kind = require_string(doc, "kind");
            }
        } catch (const ParseError& ex) {
            return error(400, ex.what());
        }
        const CommandResult r = runner.inject(kind, location);
        if (r.outcome != Outcome::Ok) {
            return error(outcome_status(r.outcome), r.message);
        }
        return {200, json{{"id", r.message}}.dump()};
    }
    if (path == "/state" || path == "/grid" || path == "/report" || path == "/tasks" || path == "/control") {
        return error(405, "method not allowed");
    }
    return error(404, "no route for " + path);
}

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, MissionRunner& runner) : ws_(std::move(socket)), runner_(runner) {}

    ~WsSession() {
        if (subscription_) {
            runner_.unsubscribe(*subscription_);
        }
    }

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) {
            return;
        }
        std::weak_ptr<WsSession> weak = weak_from_this();
        auto executor = ws_.get_executor();
        auto [snapshot, id] = runner_.subscribe([weak, executor](MissionRunner::Frame frame) {
            net::post(executor, [weak, frame = std::move(frame)] {
                if (auto self = weak.lock()) {
                    self->send(frame);
                }
            });
        });
        subscription_ = id;
        send(snapshot);
        do_read();
    }

    void do_read() {
        ws_.async_read(inbound_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            closed_ = true;
            return;
        }
        inbound_.consume(inbound_.size());
        do_read();
    }

    void send(MissionRunner::Frame frame) {
        if (closed_) {
            return;
        }
        outbound_.push_back(std::move(frame));
        if (outbound_.size() == 1) {
            do_write();
        }
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(*outbound_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            closed_ = true;
            outbound_.clear();
            return;
        }
        outbound_.pop_front();
        if (!outbound_.empty()) {
            do_write();
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    MissionRunner& runner_;
    beast::flat_buffer inbound_;
    std::deque<MissionRunner::Frame> outbound_;
    std::optional<std::uint64_t> subscription_;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, MissionRunner& runner) : stream_(std::move(socket)), runner_(runner) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), runner_)->run(std::move(req_));
                return;
            }
        }

        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req_.version());
        res->keep_alive(req_.keep_alive());
        res->set(http::field::server, "subterra");
        res->set(http::field::access_control_allow_origin, "*");
        if (req_.method() == http::verb::options) {
            res->result(http::status::no_content);
            res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
            res->set(http::field::access_control_allow_headers, "Content-Type");
        } else {
            const auto [status, body] = handle_request(runner_, std::string(req_.method_string()),
                                                       std::string(req_.target()), req_.body());
            res->result(static_cast<http::status>(status));
            res->set(http::field::content_type, "application/json");
            res->body() = body;
        }
        res->prepare_payload();
        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
                              if (wec || !res->keep_alive()) {
                                  beast::error_code ignored;
                                  self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                                  return;
                              }
                              self->do_read();
                          });
    }

    beast::tcp_stream stream_;
    MissionRunner& runner_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

struct HttpServer::Impl {
    Impl(MissionRunner& r, const std::string& address, unsigned short port)
        : runner(r), acceptor(ioc) {
        const tcp::endpoint endpoint{net::ip::make_address(address), port};
        acceptor.open(endpoint.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen(net::socket_base::max_listen_connections);
        bound_port = acceptor.local_endpoint().port();
        do_accept();
        thread = std::thread([this] { ioc.run(); });
    }

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                return;
            }
            std::make_shared<HttpSession>(std::move(socket), runner)->run();
            do_accept();
        });
    }

    void stop() {
        net::post(ioc, [this] {
            beast::error_code ignored;
            acceptor.close(ignored);
        });
        ioc.stop();
        if (thread.joinable()) {
            thread.join();
        }
    }

    MissionRunner& runner;
    net::io_context ioc{1};
    tcp::acceptor acceptor;
    std::thread thread;
    unsigned short bound_port = 0;
};

HttpServer::HttpServer(MissionRunner& runner, std::string address, unsigned short port)
    : impl_(std::make_unique<Impl>(runner, address, port)) {}

HttpServer::~HttpServer() { stop(); }

unsigned short HttpServer::port() const { return impl_->bound_port; }

void HttpServer::stop() {
    if (impl_) {
        impl_->stop();
    }
}

}  // namespace subterra::service
