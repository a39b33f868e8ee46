#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "icsbed/attack/config.hpp"
#include "icsbed/modbus/codec.hpp"
#include "icsbed/observer/dissect.hpp"
#include "icsbed/scenario/simulation.hpp"

namespace py = pybind11;
using namespace icsbed;
using nlohmann::json;

namespace {

py::object to_py(const json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& o)
{
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

json pdu_json(const modbus::Pdu& pdu)
{
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, modbus::ReadHoldingRequest>) {
                return {{"type", "read_request"}, {"start", p.start}, {"quantity", p.quantity}};
            } else if constexpr (std::is_same_v<T, modbus::ReadHoldingResponse>) {
                return {{"type", "read_response"}, {"values", p.values}};
            } else if constexpr (std::is_same_v<T, modbus::WriteMultipleRequest>) {
                return {{"type", "write_request"}, {"start", p.start}, {"values", p.values}};
            } else if constexpr (std::is_same_v<T, modbus::WriteMultipleResponse>) {
                return {{"type", "write_response"}, {"start", p.start}, {"quantity", p.quantity}};
            } else {
                return {{"type", "exception"}, {"function", p.function}, {"code", static_cast<int>(p.code)}};
            }
        },
        pdu);
}

json adu_json(const modbus::Adu& a)
{
    json j = pdu_json(a.pdu);
    j["transaction_id"] = a.transaction_id;
    j["unit_id"] = a.unit_id;
    j["function_code"] = modbus::function_code(a.pdu);
    return j;
}

json dissected_json(const observer::Dissected& d)
{
    json j{{"time_s", to_seconds(d.ts)},
           {"wire_size", d.wire_size},
           {"eth_src", d.eth_src.to_string()},
           {"eth_dst", d.eth_dst.to_string()},
           {"ethertype", d.ethertype},
           {"malformed", d.malformed}};
    if (d.arp) {
        j["arp"] = {{"op", d.arp->oper == net::ArpOp::Request ? "request" : "reply"},
                    {"sender_mac", d.arp->sha.to_string()},
                    {"sender_ip", d.arp->spa.to_string()},
                    {"target_ip", d.arp->tpa.to_string()}};
    }
    if (d.ip) j["ip"] = {{"src", d.ip->src.to_string()}, {"dst", d.ip->dst.to_string()}};
    if (d.tcp) {
        j["tcp"] = {{"sport", d.tcp->src_port},
                    {"dport", d.tcp->dst_port},
                    {"seq", d.tcp->seq},
                    {"ack", d.tcp->ack},
                    {"flags", d.tcp->flags},
                    {"payload_len", d.tcp->payload.size()},
                    {"checksum_ok", d.tcp_checksum_ok}};
    }
    j["modbus"] = json::array();
    for (const auto& a : d.adus) j["modbus"].push_back(adu_json(a));
    return j;
}

scenario::ScenarioConfig config_from(const py::object& o)
{
    if (py::isinstance<scenario::ScenarioConfig>(o)) return o.cast<scenario::ScenarioConfig>();
    if (py::isinstance<py::str>(o)) return scenario::parse_config_text(o.cast<std::string>());
    return scenario::parse_config(from_py(o));
}

} // namespace

PYBIND11_MODULE(_icsbed, m)
{
    m.doc() = "Bottle filling plant testbed: scenarios, simulation runs and capture dissection";

    py::register_exception<scenario::CommandConflict>(m, "CommandConflict", PyExc_RuntimeError);

    py::class_<scenario::ScenarioConfig>(m, "ScenarioConfig")
        .def_readwrite("name", &scenario::ScenarioConfig::name)
        .def_readwrite("seed", &scenario::ScenarioConfig::seed)
        .def_property(
            "duration_s", [](const scenario::ScenarioConfig& c) { return to_seconds(c.duration); },
            [](scenario::ScenarioConfig& c, double s) { c.duration = from_seconds(s); })
        .def_property_readonly("attack_count", [](const scenario::ScenarioConfig& c) { return c.attacks.size(); })
        .def("to_dict", [](const scenario::ScenarioConfig& c) { return to_py(scenario::render(c)); })
        .def("validate", [](const scenario::ScenarioConfig& c) { scenario::validate(c); })
        .def("__eq__", [](const scenario::ScenarioConfig& a, const scenario::ScenarioConfig& b) { return a == b; })
        .def("__repr__", [](const scenario::ScenarioConfig& c) {
            return "<ScenarioConfig " + c.name + " " + std::to_string(to_seconds(c.duration)) + " s>";
        });

    m.def("default_scenario", &scenario::default_scenario, "Normal operation, 120 s, no attacks");
    m.def("bottle_plant_scenario", &scenario::bottle_plant_scenario, "Normal operation plus the DDoS from 60 s");
    m.def("load_config", &scenario::load_config, py::arg("path"));
    m.def("parse_config", &config_from, py::arg("config"), "Dict, JSON text or ScenarioConfig");

    py::class_<scenario::Simulation>(m, "Simulation")
        .def(py::init([](const py::object& cfg, std::optional<std::filesystem::path> out) {
                 return std::make_unique<scenario::Simulation>(config_from(cfg), std::move(out));
             }),
             py::arg("config"), py::arg("out_dir") = py::none())
        .def_property_readonly("now_s", [](const scenario::Simulation& s) { return to_seconds(s.now()); })
        .def_property_readonly("end_s", [](const scenario::Simulation& s) { return to_seconds(s.end_time()); })
        .def_property_readonly("finished", &scenario::Simulation::finished)
        .def_property_readonly("frames", &scenario::Simulation::frames)
        .def(
            "run_until",
            [](scenario::Simulation& s, double t) {
                py::gil_scoped_release nogil;
                s.run_until(from_seconds(t));
            },
            py::arg("time_s"))
        .def("run",
             [](scenario::Simulation& s) {
                 scenario::RunSummary r;
                 {
                     py::gil_scoped_release nogil;
                     r = s.run();
                 }
                 return to_py(r.to_json());
             })
        .def("finish", [](scenario::Simulation& s) { return to_py(s.finish().to_json()); })
        .def("summary", [](const scenario::Simulation& s) { return to_py(s.summary().to_json()); })
        .def("snapshot", [](const scenario::Simulation& s) { return to_py(s.snapshot()); })
        .def("signals", [](const scenario::Simulation& s) { return to_py(s.signals_json()); })
        .def(
            "metrics", [](const scenario::Simulation& s, double since) { return to_py(s.metrics_json(from_seconds(since))); },
            py::arg("since_s") = 0.0)
        .def("attacks", [](const scenario::Simulation& s) { return to_py(s.attacks_json()); })
        .def(
            "command", [](scenario::Simulation& s, const std::string& sig, double v) { s.command(sig, v); },
            py::arg("signal"), py::arg("value"))
        .def(
            "launch_attack",
            [](scenario::Simulation& s, const py::object& cfg) { return s.launch_attack(attack::attack_from_json(from_py(cfg))); },
            py::arg("config"));

    m.def(
        "read_pcap",
        [](const std::filesystem::path& p) {
            py::list out;
            for (const auto& r : observer::read_pcap(p)) {
                out.append(py::make_tuple(to_seconds(r.ts), py::bytes(reinterpret_cast<const char*>(r.data.data()), r.data.size())));
            }
            return out;
        },
        py::arg("path"), "List of (time_s, frame bytes)");
    m.def(
        "dissect_capture",
        [](const std::filesystem::path& p) {
            json out = json::array();
            for (const auto& d : observer::dissect_capture(p)) out.push_back(dissected_json(d));
            return to_py(out);
        },
        py::arg("path"));
    m.def(
        "decode_adu",
        [](const py::bytes& b, bool request) -> py::object {
            const std::string s = b;
            const Bytes bytes(s.begin(), s.end());
            const auto r = modbus::decode_adu(bytes, request ? modbus::Direction::Request : modbus::Direction::Response);
            if (!r.ok()) return py::none();
            json j = adu_json(r.adu);
            j["consumed"] = r.consumed;
            return to_py(j);
        },
        py::arg("data"), py::arg("request") = true, "Decoded ADU as a dict, or None when incomplete or invalid");
}
