#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "subterra/mission.hpp"

namespace subterra::service {

enum class RunState { Loaded, Running, Paused, Finished };

std::string_view to_string(RunState state);

struct RunnerOptions {
    /// Simulated seconds per wall-clock second; 0 runs unthrottled.
    double speed = 1.0;
};

enum class Outcome { Ok, Conflict, Rejected, Invalid };

struct CommandResult {
    Outcome outcome = Outcome::Ok;
    std::string message;  // task id on success, reason otherwise
};

/// Owns a Mission on a dedicated thread. Mutating requests are queued and
/// applied between steps in arrival order; readers get the latest published
/// snapshot. Subscribers receive serialized frames after every step.
class MissionRunner {
public:
    using Frame = std::shared_ptr<const std::string>;
    using Sink = std::function<void(Frame)>;

    MissionRunner(mission::Scenario scenario, RunnerOptions options = {});
    ~MissionRunner();
    MissionRunner(const MissionRunner&) = delete;
    MissionRunner& operator=(const MissionRunner&) = delete;

    /// "start" (Loaded only), "pause" (Running only), "resume" (Paused only).
    CommandResult control(const std::string& action);
    /// Queues an inspection task; Conflict unless Running.
    CommandResult inject(const std::string& kind, const Vec3& location);
    /// Report of the mission so far, as JSON text.
    std::string report_json();

    RunState state() const { return state_.load(); }
    Frame snapshot() const;
    const std::string& grid_json() const { return grid_json_; }

    /// Registers a sink and returns the snapshot it should send first; every
    /// frame passed to the sink afterwards is a delta on top of it.
    std::pair<Frame, std::uint64_t> subscribe(Sink sink);
    void unsubscribe(std::uint64_t id);

    /// Blocks until the mission has finished or the timeout expires.
    bool wait_finished(std::chrono::milliseconds timeout);

private:
    struct Command {
        enum class Kind { Control, Inject, Report } kind;
        std::string text;  // action or task kind
        Vec3 location;
        std::promise<CommandResult> done;
    };

    CommandResult submit(Command cmd);
    void loop();
    CommandResult apply(Command& cmd);
    void publish();
    Frame snapshot_frame() const;

    std::unique_ptr<mission::Mission> mission_;
    RunnerOptions options_;
    std::string grid_json_;
    std::atomic<RunState> state_{RunState::Loaded};

    std::mutex queue_mutex_;
    std::condition_variable wake_;
    std::deque<Command> commands_;
    bool stop_ = false;

    mutable std::mutex publish_mutex_;
    std::condition_variable finished_cv_;
    Frame snapshot_;
    std::vector<Frame> pending_frames_;
    std::map<std::uint64_t, Sink> sinks_;
    std::uint64_t next_sink_ = 1;

    std::thread thread_;
};

/// HTTP + WebSocket front end for a MissionRunner.
///
///   GET  /state    latest snapshot
///   GET  /grid     voxel grid document
///   GET  /report   report so far
///   POST /tasks    {"kind": ..., "location": [x, y, z]}
///   POST /control  {"action": "start" | "pause" | "resume"}
///   GET  /ws       WebSocket: snapshot frame, then one frame per event
class HttpServer {
public:
    HttpServer(MissionRunner& runner, std::string address, unsigned short port);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Bound port (useful when constructed with port 0).
    unsigned short port() const;
    void stop();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

/// Request handling shared by the server and tests: returns (status, body).
std::pair<int, std::string> handle_request(MissionRunner& runner, const std::string& method,
                                           const std::string& target, const std::string& body);

}  // namespace subterra::service
