#include "pcrnn/weights_io.hpp"

#include <fstream>

namespace pcrnn {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& mat) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < mat.cols(); ++j)
            row.push_back(mat(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                     const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw std::invalid_argument(std::string(name) + ": expected " +
                                    std::to_string(rows) + " rows");
    Mat mat(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument(std::string(name) + ": expected " +
                                        std::to_string(cols) + " columns");
        for (Eigen::Index k = 0; k < cols; ++k)
            mat(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return mat;
}

}  // namespace

json weights_to_json(const ModelWeights& w) {
    json j;
    j["format_version"] = weights_format_version;
    j["dims"] = {{"n", w.dims.n}, {"p", w.dims.p}, {"d", w.dims.d}, {"m", w.dims.m}};
    j["w_f"] = matrix_to_json(w.w_f);
    j["w_p"] = matrix_to_json(w.w_p);
    j["w_c"] = matrix_to_json(w.w_c);
    j["w_out"] = matrix_to_json(w.w_out);
    json h = json::array();
    for (Eigen::Index i = 0; i < w.h_init.size(); ++i)
        h.push_back(w.h_init[i]);
    j["h_init"] = std::move(h);
    return j;
}

ModelWeights weights_from_json(const json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != weights_format_version)
        throw std::invalid_argument("unsupported weights format_version " +
                                    std::to_string(version));
    ModelWeights w;
    const json& dims = j.at("dims");
    w.dims.n = dims.at("n").get<int>();
    w.dims.p = dims.at("p").get<int>();
    w.dims.d = dims.at("d").get<int>();
    w.dims.m = dims.at("m").get<int>();
    w.dims.validate();

    w.w_f = matrix_from_json(j.at("w_f"), w.dims.n, w.dims.d, "w_f");
    w.w_p = matrix_from_json(j.at("w_p"), w.dims.n, w.dims.d, "w_p");
    w.w_c = matrix_from_json(j.at("w_c"), w.dims.p, w.dims.d, "w_c");
    w.w_out = matrix_from_json(j.at("w_out"), w.dims.m, w.dims.n, "w_out");

    const json& h = j.at("h_init");
    if (!h.is_array() || static_cast<int>(h.size()) != w.dims.n)
        throw std::invalid_argument("h_init: expected " + std::to_string(w.dims.n) +
                                    " entries");
    w.h_init.resize(w.dims.n);
    for (int i = 0; i < w.dims.n; ++i)
        w.h_init[i] = h.at(static_cast<std::size_t>(i)).get<double>();

    w.validate();
    return w;
}

void save_weights(const ModelWeights& w, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << weights_to_json(w).dump(1) << "\n";
    if (!out)
        throw std::runtime_error("failed writing " + path);
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    json j = json::parse(in);  // throws with line/column on malformed input
    return weights_from_json(j);
}

}  // namespace pcrnn
