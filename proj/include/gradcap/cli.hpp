#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace gradcap::cli {

/// Parsed command line. One subcommand (run, trace, explore, check), one
/// input file, and the shared scheduling/output flags.
struct CliConfig {
    std::string subcommand;
    std::string input;
    std::string schedule = "round-robin"; // round-robin | random | exhaustive
    std::uint64_t seed = 0;               // used by random only
    std::uint64_t max_steps = 100000;
    std::uint64_t max_nodes = 1u << 20; // exploration budget
    bool json = false;
    bool trace = false;
    bool literal_lifo = false;
    bool fail_fast = false;
};

/// Full CLI entry point; out/err replace stdout/stderr so tests can capture
/// byte-exact output. Returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gradcap::cli
