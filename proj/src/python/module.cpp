#include "rtk/debug/ds.hpp"
#include "rtk/report/report.hpp"
#include "rtk/scenario/runner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using rtk::scenario::Simulation;

namespace {

py::dict record_dict(const rtk::sim::TraceRecord& r) {
    py::dict d;
    d["tick_start"] = r.tick_start;
    d["tick_end"] = r.tick_end;
    d["thread_id"] = r.thread_id;
    d["thread_name"] = r.thread_name;
    d["context"] = std::string(rtk::sim::to_string(r.context));
    d["label"] = r.label;
    d["etm_ticks"] = r.etm_ticks;
    d["eem_uj"] = r.eem.microjoules();
    d["event"] = std::string(rtk::sim::to_string(r.event));
    return d;
}

std::string trace_csv(const Simulation& sim) {
    std::ostringstream out;
    out << rtk::sim::kTraceCsvHeader << '\n';
    for (const auto& r : sim.records()) out << rtk::sim::to_csv_line(r) << '\n';
    return out.str();
}

std::string events_csv(const Simulation& sim) {
    std::ostringstream out;
    out << rtk::sim::kEventCsvHeader << '\n';
    for (const auto& e : sim.events()) out << rtk::sim::to_csv_line(e) << '\n';
    return out.str();
}

std::string report(const Simulation& sim, const std::string& format, std::optional<double> battery_wh) {
    if (format != "text" && format != "json") throw rtk::SimError(rtk::ErrorCode::Usage, "format must be text or json");
    const auto& s = sim.scenario();
    const auto rep = rtk::report::distribution_report(sim.records(), sim.now(), s.tick_us,
                                                      rtk::report::Battery::from_watt_hours(battery_wh.value_or(s.battery_wh)));
    return format == "json" ? rtk::report::render_json_report(rep) : rtk::report::render_text_report(rep);
}

std::unique_ptr<Simulation> make(rtk::scenario::Scenario s) {
    auto sim = std::make_unique<Simulation>(std::move(s));
    sim->boot();
    return sim;
}

}  // namespace

PYBIND11_MODULE(_rtksim, m) {
    m.doc() = "Tick-level RTOS simulator with time and energy annotated threads";

    static py::exception<rtk::SimError> sim_error(m, "SimError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const rtk::SimError& e) {
            const std::string msg = std::string(rtk::to_string(e.code())) + ": " + e.what();
            PyErr_SetString(sim_error.ptr(), msg.c_str());
        }
    });

    m.def("demo_scenario_text", [] { return std::string(rtk::scenario::demo_scenario_text()); });
    m.def("normalize_scenario", [](const std::string& text) {
        return rtk::scenario::serialize(rtk::scenario::parse_scenario(text));
    }, py::arg("text"), "Parses YAML and writes it back in canonical form.");

    py::class_<Simulation>(m, "Simulation")
        .def(py::init([](const std::string& text) { return make(rtk::scenario::parse_scenario(text)); }),
             py::arg("yaml"))
        .def_static("from_file", [](const std::string& path) { return make(rtk::scenario::load_scenario(path)); },
                    py::arg("path"))
        .def_static("demo", [] { return make(rtk::scenario::demo_scenario()); })
        .def("step", &Simulation::step, "Advances one tick; False once finished or deadlocked.")
        .def("run", [](Simulation& sim) {
            const auto r = sim.run();
            py::dict d;
            d["ticks"] = r.ticks;
            d["deadlock"] = r.deadlock;
            py::list blocked;
            for (const auto& b : r.blocked) blocked.append(py::make_tuple(b.id, b.name, b.waiting_on));
            d["blocked"] = blocked;
            return d;
        })
        .def("finish", &Simulation::finish)
        .def_property_readonly("now", &Simulation::now)
        .def_property_readonly("until", &Simulation::until)
        .def_property_readonly("done", &Simulation::done)
        .def_property_readonly("deadlocked", &Simulation::deadlocked)
        .def("records", [](const Simulation& sim) {
            py::list out;
            for (const auto& r : sim.records()) out.append(record_dict(r));
            return out;
        })
        .def("calls", [](const Simulation& sim) {
            py::list out;
            for (const auto& c : sim.calls()) out.append(py::make_tuple(c.tick, c.thread, c.service, c.er));
            return out;
        })
        .def("cet", [](const Simulation& sim) {
            std::map<rtk::sim::ThreadId, rtk::sim::Tick> out;
            for (const auto& r : sim.records()) out[r.thread_id] += r.tick_end - r.tick_start;
            return out;
        }, "Ticks executed per thread id.")
        .def("trace_csv", &trace_csv)
        .def("events_csv", &events_csv)
        .def("report", &report, py::arg("format") = "text", py::arg("battery_wh") = py::none())
        .def("gantt", [](const Simulation& sim, const std::string& format, rtk::sim::Tick columns) {
            const auto g = rtk::report::build_gantt(sim.records(), 0, sim.now());
            return format == "svg" ? rtk::report::render_gantt_svg(g) : rtk::report::render_gantt_text(g, columns);
        }, py::arg("format") = "text", py::arg("ticks_per_column") = 1)
        .def("ds_dump", [](const Simulation& sim) {
            return rtk::debug::dump_listing(rtk::debug::take_snapshot(sim.kernel()));
        });
}
