#include "gradcap/cli.hpp"

#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gradcap/parser.hpp"
#include "gradcap/printer.hpp"
#include "gradcap/runtime.hpp"

namespace gradcap::cli {

namespace {

std::string actor_summary(const Store& s) {
    std::string out;
    for (const auto& [id, a] : s.actors) {
        if (!out.empty()) out += ' ';
        out += std::to_string(id) + "=" + status_name(a.status);
        if (const auto* f = std::get_if<StatusFaulted>(&a.status))
            out += "(" + to_string(f->kind) + ")";
    }
    return out;
}

int do_check(const Program& p, const std::vector<Diagnostic>& diags, const CliConfig& cfg,
             std::ostream& out) {
    (void)p;
    if (cfg.json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& d : diags)
            arr.push_back({{"where", d.span.to_string()}, {"message", d.message}});
        out << nlohmann::json{{"diagnostics", arr}}.dump() << "\n";
    } else {
        for (const auto& d : diags) out << d.span.to_string() << ": " << d.message << "\n";
    }
    return diags.empty() ? 0 : 1;
}

int do_run(const Program& p, const CliConfig& cfg, std::ostream& out) {
    RunConfig rc;
    rc.policy = cfg.schedule == "random" ? SchedulerPolicy::seeded(cfg.seed)
                                         : SchedulerPolicy::round_robin();
    rc.max_steps = cfg.max_steps;
    rc.literal_lifo = cfg.literal_lifo;
    rc.fail_fast = cfg.fail_fast;
    rc.collect_trace = cfg.trace;

    RunResult res = run_program(p, rc);
    if (cfg.trace)
        for (const auto& ev : res.trace) out << ev.to_json().dump() << "\n";
    if (cfg.json) {
        out << outcome_to_json(res.outcome).dump() << "\n";
    } else {
        out << "termination=" << to_string(res.outcome.termination)
            << " exit=" << res.outcome.exit_code() << " steps=" << res.outcome.steps
            << " actors: " << actor_summary(res.outcome.final_store) << "\n";
    }
    return res.outcome.exit_code();
}

int do_explore(const Program& p, const CliConfig& cfg, std::ostream& out) {
    ExploreResult r = explore_exhaustive(p, cfg.max_steps, cfg.max_nodes, cfg.literal_lifo);
    if (cfg.json) {
        out << explore_to_json(r).dump() << "\n";
    } else {
        out << "outcomes=" << r.summaries.size() << " paths=" << r.paths << " nodes=" << r.nodes
            << " truncated=" << (r.truncated ? "true" : "false") << "\n";
        for (const auto& s : r.summaries) {
            out << "- termination=" << to_string(s.termination) << " actors:";
            for (const auto& [id, st] : s.actor_status) out << ' ' << id << '=' << st;
            out << " hash=" << s.store_hash << "\n";
        }
        if (r.truncated)
            out << "exploration budget exceeded; raise --max-nodes for full coverage\n";
    }
    return explore_exit_code(r);
}

} // namespace

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"gradcap - interpreter and deterministic actor runtime for a small "
                 "object calculus with gradual reference capabilities"};
    app.set_version_flag("--version", "gradcap 0.1.0");
    app.require_subcommand(1);

    CliConfig cfg;

    auto add_common = [&](CLI::App* cmd, bool scheduling) {
        cmd->add_option("input", cfg.input, "path to a .gcap program")->required();
        cmd->add_option("--max-steps", cfg.max_steps, "step budget (default 100000)")
            ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 62));
        cmd->add_flag("--json", cfg.json, "machine-readable output");
        cmd->add_flag("--literal-lifo", cfg.literal_lifo,
                      "stack-order message queues (paper-notation mode)");
        if (scheduling) {
            cmd->add_option("--schedule", cfg.schedule, "round-robin | random | exhaustive")
                ->check(CLI::IsMember({"round-robin", "random", "exhaustive"}));
            cmd->add_option("--seed", cfg.seed, "scheduler seed (random only, default 0)");
            cmd->add_flag("--fail-fast", cfg.fail_fast, "stop the whole run at the first fault");
        }
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run a program to quiescence");
    add_common(run_cmd, true);
    run_cmd->add_flag("--trace", cfg.trace, "print one JSON trace event per step");

    CLI::App* trace_cmd = app.add_subcommand("trace", "run with the step trace enabled");
    add_common(trace_cmd, true);

    CLI::App* explore_cmd = app.add_subcommand("explore", "enumerate every scheduling choice");
    add_common(explore_cmd, false);
    explore_cmd->add_option("--max-nodes", cfg.max_nodes,
                            "exploration step budget (default 1048576)");

    CLI::App* check_cmd = app.add_subcommand("check", "parse and validate only");
    check_cmd->add_option("input", cfg.input, "path to a .gcap program")->required();
    check_cmd->add_flag("--json", cfg.json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    Program program;
    try {
        program = parse_file(cfg.input);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        if (check_cmd->parsed() && cfg.json)
            out << nlohmann::json{{"diagnostics",
                                   {{{"where", e.span().to_string()}, {"message", e.message()}}}}}
                       .dump()
                << "\n";
        return 1;
    }

    std::vector<Diagnostic> diags = validate_program(program);
    if (check_cmd->parsed()) return do_check(program, diags, cfg, out);
    if (!diags.empty()) {
        for (const auto& d : diags) err << d.span.to_string() << ": " << d.message << "\n";
        return 1;
    }

    if (trace_cmd->parsed()) cfg.trace = true;
    if (explore_cmd->parsed() || cfg.schedule == "exhaustive")
        return do_explore(program, cfg, out);
    return do_run(program, cfg, out);
}

} // namespace gradcap::cli
