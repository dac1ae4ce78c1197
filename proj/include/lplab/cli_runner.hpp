#pragma once

#include "lplab/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lplab {

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int jobs = 0;                       // 0: config value (default 1)
    bool strict = false;                // solver warnings become errors
    bool echo = true;                   // print the summary to stdout
};

struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunResult {
    int exit_code = 0;  // 0, or 1 when an assertion failed
    std::vector<Assertion> assertions;
    std::vector<std::string> artifacts;
    std::string summary;
};

/// Runs one subcommand and writes <stem>.csv and <stem>.txt (plus
/// <stem>_field.dat for `solve` with dump = true) into out_dir; stem is the
/// `output` key or the subcommand name. Every CSV row starts with the config
/// hash. Throws ConfigError for schema violations and lplab::Error for
/// failures that prevent the run from completing.
RunResult run(Config config, const RunOptions& options = {});

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace lplab
