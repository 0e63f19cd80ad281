#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace alignet {

// Every run writes one manifest (JSON) into its output directory before
// the process exits, on success or failure. Wall time is metadata and is
// the only field allowed to differ between otherwise identical runs.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex
    std::uint64_t seed = 0;
    bool seeded = false;
    double wall_time_ms = 0.0;
    std::vector<std::string> outputs;
    std::string status = "ok";  // "ok" | "error"
    std::string error;

    void add_input(const std::string& path);
    void write(const std::string& out_dir) const;  // <out_dir>/manifest.json
};

} // namespace alignet
