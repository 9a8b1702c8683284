#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace pcrnn {

// 64-bit FNV-1a over a file's bytes, hex-encoded. Cheap integrity tag for
// tying manifests to the exact weights file consumed or produced.
std::string file_hash(const std::string& path);

// Provenance sidecar written next to every file-producing command's output.
struct RunManifest {
    std::string command;
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    std::string weights_path;   // empty when the command touches no weights
    std::string weights_hash;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;
    int format_version = 1;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
void save_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace pcrnn
