#pragma once

#include "pcrnn/model.hpp"

#include <json.hpp>

#include <string>

namespace pcrnn {

// Weights travel as a single JSON document:
//   {"format_version": 1,
//    "dims": {"n":.., "p":.., "d":.., "m":..},
//    "w_f": [[..],..], "w_p": [[..],..], "w_c": [[..],..], "w_out": [[..],..],
//    "h_init": [..]}
// Matrices are row-major nested arrays; reals round-trip exactly.

inline constexpr int weights_format_version = 1;

nlohmann::json weights_to_json(const ModelWeights& w);
ModelWeights weights_from_json(const nlohmann::json& j);

void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace pcrnn
