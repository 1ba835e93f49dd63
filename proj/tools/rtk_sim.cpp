// rtk-sim: run a scenario and write its trace, reports and DS dump.

#include "rtk/debug/ds.hpp"
#include "rtk/report/report.hpp"
#include "rtk/scenario/runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using rtk::scenario::Scenario;
using rtk::scenario::Simulation;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDeadlock = 3;

struct RunArgs {
    std::string scenario;
    std::optional<rtk::sim::Tick> until;
    std::string mode = "run";
    std::optional<rtk::sim::Tick> steps;
    std::optional<std::uint32_t> tick_us;
    std::string trace;
    std::string events;
    std::string report;
    std::string report_out;
    std::string ds_dump;
    std::string gantt;
    std::string gantt_out;
    rtk::sim::Tick gantt_columns = 1;
    std::string device_log;
    double battery_wh = 0;
};

Scenario load(const std::string& what) {
    if (what == "@demo") return rtk::scenario::demo_scenario();
    return rtk::scenario::load_scenario(what);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) rtk::fail(rtk::ErrorCode::Usage, "cannot write " + path);
    return out;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    auto out = open_out(path);
    out << text;
}

// Reads step commands between ticks. Returns false when the user quits.
bool interactive_steps(Simulation& sim) {
    std::string line;
    while (!sim.done() && std::getline(std::cin, line)) {
        std::istringstream in(line);
        std::string cmd;
        in >> cmd;
        if (cmd.empty() || cmd == "s" || cmd == "step") {
            rtk::sim::Tick n = 1;
            in >> n;
            for (rtk::sim::Tick i = 0; i < n && sim.step(); ++i) {
            }
        } else if (cmd == "ds") {
            std::cout << rtk::debug::dump_listing(rtk::debug::take_snapshot(sim.kernel())) << std::flush;
        } else if (cmd == "now") {
            std::cout << "tick " << sim.now() << std::endl;
        } else if (cmd == "run") {
            while (sim.step()) {
            }
        } else if (cmd == "q" || cmd == "quit") {
            return false;
        } else {
            std::cerr << "unknown command \"" << cmd << "\" (s [n], ds, now, run, q)" << std::endl;
        }
    }
    return true;
}

int run(const RunArgs& a) {
    Scenario s = load(a.scenario);
    if (a.until) s.run_ticks = *a.until;
    if (a.tick_us) s.tick_us = *a.tick_us;
    if (a.battery_wh > 0) s.battery_wh = a.battery_wh;

    Simulation sim(s);
    std::ofstream trace_file;
    std::ofstream event_file;
    std::optional<rtk::sim::CsvTraceWriter> trace_writer;
    std::optional<rtk::sim::CsvEventWriter> event_writer;
    if (!a.trace.empty()) {
        trace_file = open_out(a.trace);
        trace_writer.emplace(trace_file);
        sim.add_trace_sink(*trace_writer);
    }
    if (!a.events.empty()) {
        event_file = open_out(a.events);
        event_writer.emplace(event_file);
        sim.add_event_sink(*event_writer);
    }
    sim.boot();

    const rtk::sim::Tick start = sim.now();
    const auto t0 = std::chrono::steady_clock::now();
    if (a.mode == "step") {
        if (a.steps) {
            for (rtk::sim::Tick i = 0; i < *a.steps && sim.step(); ++i) {
            }
        } else {
            interactive_steps(sim);
        }
    } else {
        while (sim.step()) {
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sim.finish();
    trace_file.close();
    event_file.close();

    const rtk::sim::Tick ran = sim.now() - start;
    if (!a.device_log.empty()) {
        auto out = open_out(a.device_log);
        sim.bfm().write_log_csv(out);
    }
    if (!a.ds_dump.empty()) emit(a.ds_dump, rtk::debug::dump_listing(rtk::debug::take_snapshot(sim.kernel())));
    if (!a.report.empty() && sim.now() > 0) {
        const auto rep = rtk::report::distribution_report(sim.records(), sim.now(), s.tick_us,
                                                          rtk::report::Battery::from_watt_hours(s.battery_wh));
        emit(a.report_out, a.report == "json" ? rtk::report::render_json_report(rep) : rtk::report::render_text_report(rep));
    }
    if (!a.gantt.empty()) {
        const auto g = rtk::report::build_gantt(sim.records(), 0, sim.now());
        emit(a.gantt_out, a.gantt == "svg" ? rtk::report::render_gantt_svg(g) : rtk::report::render_gantt_text(g, a.gantt_columns));
    }

    std::ostringstream tp;
    tp << std::fixed << std::setprecision(6) << "throughput: " << ran << " ticks in " << wall << " s ("
       << std::setprecision(0) << (wall > 0 ? static_cast<double>(ran) / wall : 0.0) << " simulated ticks/s)";
    std::cerr << tp.str() << std::endl;

    if (sim.deadlocked()) {
        std::cerr << rtk::scenario::describe_deadlock(sim.now(), sim.blocked()) << std::endl;
        return kExitDeadlock;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic RTOS kernel simulator"};
    app.require_subcommand(1);

    RunArgs args;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario (a YAML file, or @demo for the bundled case study)");
    run_cmd->add_option("scenario", args.scenario, "Scenario file")->required();
    run_cmd->add_option("--until", args.until, "Stop after this many ticks (overrides run_ticks)")->check(CLI::PositiveNumber);
    run_cmd->add_option("--mode", args.mode, "run: free-run; step: one tick per command on stdin")
        ->check(CLI::IsMember({"run", "step"}));
    run_cmd->add_option("--steps", args.steps, "In step mode, take this many steps instead of reading stdin");
    run_cmd->add_option("--tick-us", args.tick_us, "Tick length in microseconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--trace", args.trace, "Write the trace CSV here");
    run_cmd->add_option("--events", args.events, "Write the kernel event CSV here");
    run_cmd->add_option("--report", args.report, "Print the time/energy distribution")->check(CLI::IsMember({"text", "json"}));
    run_cmd->add_option("--report-out", args.report_out, "Write the report here instead of stdout");
    run_cmd->add_option("--ds-dump", args.ds_dump, "Write the final DS listing here (- for stdout)");
    run_cmd->add_option("--gantt", args.gantt, "Render a Gantt chart")->check(CLI::IsMember({"text", "svg"}));
    run_cmd->add_option("--gantt-out", args.gantt_out, "Write the Gantt chart here instead of stdout");
    run_cmd->add_option("--gantt-columns", args.gantt_columns, "Ticks per text column")->check(CLI::PositiveNumber);
    run_cmd->add_option("--device-log", args.device_log, "Write the BFM device log CSV here");
    run_cmd->add_option("--battery-wh", args.battery_wh, "Battery capacity in Wh (overrides battery_wh)")
        ->check(CLI::PositiveNumber);

    std::string check_path;
    auto* check_cmd = app.add_subcommand("check", "Validate a scenario and print it normalized");
    check_cmd->add_option("scenario", check_path, "Scenario file")->required();

    app.add_subcommand("demo", "Print the bundled demo scenario");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run_cmd->parsed()) return run(args);
        if (check_cmd->parsed()) {
            std::cout << rtk::scenario::serialize(load(check_path));
            return kExitOk;
        }
        std::cout << rtk::scenario::demo_scenario_text();
        return kExitOk;
    } catch (const rtk::SimError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        switch (e.code()) {
            case rtk::ErrorCode::Validation:
            case rtk::ErrorCode::Configuration:
            case rtk::ErrorCode::Conflict:
            case rtk::ErrorCode::Usage: return kExitValidation;
            default: return kExitRuntime;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitRuntime;
    }
}
