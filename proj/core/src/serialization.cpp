#include "relu_forge/serialization.hpp"

#include <fstream>

namespace relu_forge {

using nlohmann::json;

nlohmann::json network_to_json(const Network& net) {
    json layers = json::array();
    for (const Layer& l : net.layers()) {
        json weights = json::array();
        for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) row.push_back(l.W(r, c));
            weights.push_back(std::move(row));
        }
        json bias = json::array();
        for (Eigen::Index r = 0; r < l.b.size(); ++r) bias.push_back(l.b[r]);
        layers.push_back(json{{"weights", std::move(weights)}, {"bias", std::move(bias)}});
    }
    return json{{"layers", std::move(layers)}};
}

namespace {

double number_at(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ValidationError(where + ": expected a finite number, got " + std::string(v.type_name()));
    }
    return v.get<double>();
}

} // namespace

Network network_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("layers")) {
        throw ValidationError("network JSON must be an object with a \"layers\" array");
    }
    const json& jl = j.at("layers");
    if (!jl.is_array() || jl.empty()) {
        throw ValidationError("\"layers\" must be a non-empty array");
    }
    std::vector<Layer> layers;
    layers.reserve(jl.size());
    for (std::size_t i = 0; i < jl.size(); ++i) {
        const std::string where = "layer " + std::to_string(i);
        const json& e = jl[i];
        if (!e.is_object() || !e.contains("weights") || !e.contains("bias")) {
            throw ValidationError(where + ": expected an object with \"weights\" and \"bias\"");
        }
        const json& jw = e.at("weights");
        const json& jb = e.at("bias");
        if (!jw.is_array() || jw.empty()) {
            throw ValidationError(where + ": \"weights\" must be a non-empty array of rows");
        }
        if (!jb.is_array()) {
            throw ValidationError(where + ": \"bias\" must be an array");
        }
        const std::size_t rows = jw.size();
        if (!jw[0].is_array() || jw[0].empty()) {
            throw ValidationError(where + ": weight rows must be non-empty arrays");
        }
        const std::size_t cols = jw[0].size();
        Layer l;
        l.W.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            if (!jw[r].is_array() || jw[r].size() != cols) {
                throw DimensionError(where + ": weight row " + std::to_string(r) +
                                     " has length " + std::to_string(jw[r].size()) +
                                     ", expected " + std::to_string(cols));
            }
            for (std::size_t c = 0; c < cols; ++c) {
                l.W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    number_at(jw[r][c], where + " weights[" + std::to_string(r) + "][" +
                                            std::to_string(c) + "]");
            }
        }
        if (jb.size() != rows) {
            throw DimensionError(where + ": bias length " + std::to_string(jb.size()) +
                                 " does not match weight rows " + std::to_string(rows));
        }
        l.b.resize(static_cast<Eigen::Index>(rows));
        for (std::size_t r = 0; r < rows; ++r) {
            l.b[static_cast<Eigen::Index>(r)] =
                number_at(jb[r], where + " bias[" + std::to_string(r) + "]");
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << network_to_json(net).dump() << '\n';
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return network_from_json(j);
}

} // namespace relu_forge
