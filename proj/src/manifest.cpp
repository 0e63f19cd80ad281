#include "alignet/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "alignet/errors.hpp"
#include "alignet/hash.hpp"

namespace alignet {

void RunManifest::add_input(const std::string& path) {
    input_hashes[path] = hex64(hash_file(path));
}

void RunManifest::write(const std::string& out_dir) const {
    std::filesystem::create_directories(out_dir);
    nlohmann::json doc;
    doc["command"] = command;
    doc["config"] = config;
    doc["input_hashes"] = input_hashes;
    if (seeded) doc["seed"] = seed;
    doc["wall_time_ms"] = wall_time_ms;
    doc["outputs"] = outputs;
    doc["status"] = status;
    if (!error.empty()) doc["error"] = error;
    const std::string path = (std::filesystem::path(out_dir) / "manifest.json").string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("IoFailure", "cannot write '" + path + "'");
    out << doc.dump(2) << "\n";
}

} // namespace alignet
