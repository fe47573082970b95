#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "gradcap/parser.hpp"
#include "gradcap/printer.hpp"
#include "gradcap/runtime.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

gradcap::RunConfig make_run_config(const std::string& schedule, std::uint64_t seed,
                                   std::uint64_t max_steps, bool literal_lifo, bool fail_fast,
                                   bool trace) {
    gradcap::RunConfig rc;
    rc.policy = schedule == "random" ? gradcap::SchedulerPolicy::seeded(seed)
                                     : gradcap::SchedulerPolicy::round_robin();
    rc.max_steps = max_steps;
    rc.literal_lifo = literal_lifo;
    rc.fail_fast = fail_fast;
    rc.collect_trace = trace;
    return rc;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Interpreter and deterministic actor runtime for a small object calculus "
              "with gradual reference capabilities";
    m.attr("__version__") = "0.1.0";

    py::class_<gradcap::Program>(m, "Program");

    py::register_exception<gradcap::ParseError>(m, "GcapParseError");

    m.def("parse_text",
          [](const std::string& text, const std::string& file) {
              return gradcap::parse_program(text, file);
          },
          "text"_a, "file"_a = "<input>", "Parse .gcap source text into a Program.");

    m.def("parse_file", &gradcap::parse_file, "path"_a, "Parse a .gcap file.");

    m.def("validate",
          [](const gradcap::Program& p) {
              std::vector<std::pair<std::string, std::string>> out;
              for (const auto& d : gradcap::validate_program(p))
                  out.emplace_back(d.span.to_string(), d.message);
              return out;
          },
          "program"_a, "Structural diagnostics as (where, message) pairs; empty when valid.");

    m.def("pretty", [](const gradcap::Program& p) { return gradcap::print_program(p); },
          "program"_a, "Pretty-print a program in .gcap syntax.");

    m.def("erase",
          [](const gradcap::Program& p) { return gradcap::erase_capabilities(p); },
          "program"_a, "Replace every capability annotation with the dynamic capability.");

    m.def("run_json",
          [](const gradcap::Program& p, const std::string& schedule, std::uint64_t seed,
             std::uint64_t max_steps, bool literal_lifo, bool fail_fast, bool trace) {
              gradcap::RunResult res = gradcap::run_program(
                  p, make_run_config(schedule, seed, max_steps, literal_lifo, fail_fast, trace));
              nlohmann::json j = gradcap::outcome_to_json(res.outcome);
              if (trace) {
                  nlohmann::json arr = nlohmann::json::array();
                  for (const auto& ev : res.trace) arr.push_back(ev.to_json());
                  j["trace"] = arr;
              }
              return j.dump();
          },
          "program"_a, "schedule"_a = "round-robin", "seed"_a = 0, "max_steps"_a = 100000,
          "literal_lifo"_a = false, "fail_fast"_a = false, "trace"_a = false,
          "Run a program; returns the outcome document as a JSON string.");

    m.def("explore_json",
          [](const gradcap::Program& p, std::uint64_t max_steps, std::uint64_t max_nodes,
             bool literal_lifo) {
              return gradcap::explore_to_json(
                         gradcap::explore_exhaustive(p, max_steps, max_nodes, literal_lifo))
                  .dump();
          },
          "program"_a, "max_steps"_a = 1000, "max_nodes"_a = std::uint64_t{1} << 20,
          "literal_lifo"_a = false,
          "Enumerate every schedule; returns the summary document as a JSON string.");
}
