#include "pcrnn/manifest.hpp"

#include <cstdio>
#include <fstream>

namespace pcrnn {

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path + " for hashing");
    std::uint64_t hash = 0xCBF29CE484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001B3ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return std::string("fnv1a64:") + hex;
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
    nlohmann::json j;
    j["format_version"] = manifest.format_version;
    j["command"] = manifest.command;
    j["config"] = manifest.config_echo;
    j["seed"] = manifest.seed;
    if (!manifest.weights_path.empty()) {
        j["weights_path"] = manifest.weights_path;
        j["weights_hash"] = manifest.weights_hash;
    }
    j["outputs"] = manifest.outputs;
    j["duration_seconds"] = manifest.duration_seconds;
    return j;
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << manifest_to_json(manifest).dump(1) << "\n";
}

}  // namespace pcrnn
