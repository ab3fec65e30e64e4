#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "subterra/bt_synthesis.hpp"
#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"
#include "subterra/mission.hpp"
#include "subterra/service.hpp"

namespace subterra::cli {

namespace fs = std::filesystem;

void configure_logging() {
    auto logger = spdlog::get("subterra");
    if (!logger) {
        logger = spdlog::stderr_color_mt("subterra");
    }
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("SUBTERRA_LOG_LEVEL");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "warn") {
        spdlog::set_level(spdlog::level::warn);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") {
            spdlog::warn("SUBTERRA_LOG_LEVEL='{}' not one of error, warn, info, debug; using info", level);
        }
    }
}

namespace {

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    bool force = false;
    unsigned short port = 8080;
    std::string host = "127.0.0.1";
    double speed = 1.0;
    bool autostart = false;
    bool exit_on_finish = false;
    std::string library;
    std::string goal = "At goal point";
};

mission::Scenario load(const Options& opt) {
    mission::Scenario s = mission::load_scenario(opt.scenario);
    if (opt.seed) {
        s.seed = *opt.seed;
    }
    return s;
}

int cmd_validate(const Options& opt, std::ostream& out) {
    mission::Scenario s = load(opt);
    const std::size_t agents = s.agents.size();
    const std::size_t tasks = s.tasks.size() + s.injections.size();
    const std::string name = s.name;
    mission::Mission probe(std::move(s));
    out << "valid: " << name << " (" << agents << " agents, " << tasks << " tasks)\n";
    return kExitOk;
}

int cmd_run(const Options& opt, std::ostream& out, std::ostream& err) {
    mission::Scenario scenario = load(opt);
    const fs::path dir = opt.out;
    const fs::path files[] = {dir / "report.json", dir / "events.ndjson", dir / "report.txt"};
    if (!opt.force) {
        for (const fs::path& f : files) {
            if (fs::exists(f)) {
                err << "error: " << f.string() << " already exists (use --force to overwrite)\n";
                return kExitError;
            }
        }
    }
    spdlog::info("running '{}' with seed {}", scenario.name, scenario.seed);
    const mission::MissionResult result = mission::run_mission(std::move(scenario));
    fs::create_directories(dir);
    const std::string text = mission::render_report_text(result.report);
    write_text_file_atomic(files[0], mission::to_json(result.report).dump(2) + "\n");
    write_text_file_atomic(files[1], mission::to_ndjson(result.report.events));
    write_text_file_atomic(files[2], text);
    out << text;
    spdlog::info("wrote {}, {}, {}", files[0].string(), files[1].string(), files[2].string());
    if (!result.all_tasks_completed) {
        spdlog::warn("mission ended ({}) with tasks not completed", result.report.end_reason);
        return kExitIncomplete;
    }
    return kExitOk;
}

int cmd_serve(const Options& opt, std::ostream& out) {
    service::RunnerOptions ropts;
    ropts.speed = opt.speed;
    service::MissionRunner runner(load(opt), ropts);
    service::HttpServer server(runner, opt.host, opt.port);
    out << "listening on http://" << opt.host << ":" << server.port() << "\n" << std::flush;
    if (opt.autostart) {
        runner.control("start");
    }

    boost::asio::io_context signals_ctx;
    boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
    std::atomic<bool> interrupted{false};
    signals.async_wait([&](const boost::system::error_code& ec, int) {
        if (!ec) {
            interrupted = true;
        }
    });
    while (!interrupted) {
        signals_ctx.run_for(std::chrono::milliseconds(200));
        if (opt.exit_on_finish && runner.state() == service::RunState::Finished) {
            break;
        }
    }
    server.stop();
    spdlog::info("service stopped");
    return kExitOk;
}

int cmd_synth(const Options& opt, std::ostream& out) {
    const bt::ActionLibrary lib = bt::load_action_library_file(opt.library);
    out << bt::render(bt::generate_behavior_tree(lib, opt.goal));
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();
    CLI::App app{"Multi-agent inspection mission simulator", "subterra"};
    app.require_subcommand(1);
    Options opt;

    auto add_scenario = [&](CLI::App* sub) {
        sub->add_option("--scenario", opt.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "Override the scenario seed");
    };

    CLI::App* run = app.add_subcommand("run", "Run a mission headless and write reports");
    add_scenario(run);
    run->add_option("--out", opt.out, "Output directory")->capture_default_str();
    run->add_flag("--force", opt.force, "Overwrite existing report files");

    CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
    add_scenario(validate);

    CLI::App* serve = app.add_subcommand("serve", "Serve a mission over HTTP and WebSocket");
    add_scenario(serve);
    serve->add_option("--port", opt.port, "TCP port")->capture_default_str();
    serve->add_option("--host", opt.host, "Bind address")->capture_default_str();
    serve->add_option("--speed", opt.speed, "Simulated seconds per wall second (0 = unthrottled)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    serve->add_flag("--autostart", opt.autostart, "Start the mission immediately");
    serve->add_flag("--exit-on-finish", opt.exit_on_finish, "Exit once the mission has finished");

    CLI::App* synth = app.add_subcommand("synth-bt", "Print the behavior tree synthesized for a goal");
    synth->add_option("--library", opt.library, "Action library JSON file")->required()->check(CLI::ExistingFile);
    synth->add_option("--goal", opt.goal, "Goal condition")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (run->parsed()) {
            return cmd_run(opt, out, err);
        }
        if (validate->parsed()) {
            return cmd_validate(opt, out);
        }
        if (serve->parsed()) {
            return cmd_serve(opt, out);
        }
        return cmd_synth(opt, out);
    } catch (const LibraryError& ex) {
        err << "error: " << ex.what() << "\n";
    } catch (const ExpansionError& ex) {
        err << "error: " << ex.what() << "\n";
    } catch (const ParseError& ex) {
        err << "error: invalid input: " << ex.what() << "\n";
    } catch (const ValidationError& ex) {
        err << "error: invalid scenario: " << ex.what() << "\n";
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
    }
    return kExitError;
}

}  // namespace subterra::cli
