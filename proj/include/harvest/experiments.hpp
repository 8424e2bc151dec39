#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "harvest/config.hpp"
#include "harvest/errors.hpp"

namespace harvest {

inline constexpr const char* kVersion = "1.0.0";

struct RunContext {
    std::filesystem::path out_dir = ".";
    int threads = 1;  // 0: hardware concurrency
    bool quiet = false;
};

// Runs one experiment, writes its CSV/raster outputs plus
// `<experiment>.manifest.json` into ctx.out_dir and prints a one-line summary.
// Returns 0 on success, 1 on configuration errors, 2 on solver failure.
int run(const RunConfig& config, const std::string& experiment, const RunContext& ctx, std::ostream& out,
        std::ostream& err);

// Maps a library error to the CLI exit status.
int exit_status(ErrorKind kind);

}  // namespace harvest
