#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"

#include "neuncut/data.hpp"
#include "neuncut/error.hpp"
#include "neuncut/model.hpp"

// Versioned JSON model files. Weights are stored as per-layer row-major
// arrays; nlohmann::json emits shortest round-trip decimals, so save followed
// by load reproduces every parameter bit for bit.

namespace neuncut {

enum class Objective { ncut, rcut };

inline std::string to_string(Objective o) { return o == Objective::ncut ? "ncut" : "rcut"; }

inline Objective objective_from_string(const std::string& s) {
    if (s == "ncut") return Objective::ncut;
    if (s == "rcut") return Objective::rcut;
    throw InvalidConfig("unknown objective: " + s);
}

/// Training-time settings stored alongside the parameters so a model file is
/// self-describing.
struct ModelMeta {
    Objective objective = Objective::ncut;
    std::size_t clusters = 0;
    double sigma = 0.0;
    std::optional<std::size_t> knn_s;
};

inline constexpr int kModelFormatVersion = 1;

inline std::string model_to_json(const MlpModel& model, const ModelMeta& meta) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["layer_dims"] = model.layer_dims;
    nlohmann::json weights = nlohmann::json::array();
    for (const Matrix& w : model.weights) weights.push_back(w.data());
    j["weights"] = std::move(weights);
    j["biases"] = model.biases;
    j["objective"] = to_string(meta.objective);
    j["k"] = meta.clusters;
    j["sigma"] = meta.sigma;
    if (meta.knn_s)
        j["s"] = *meta.knn_s;
    else
        j["s"] = nullptr;
    return j.dump(2) + "\n";
}

inline void save_model(const MlpModel& model, const ModelMeta& meta, const std::string& path) {
    detail::atomic_write_text(path, model_to_json(model, meta));
}

inline std::pair<MlpModel, ModelMeta> model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw InvalidData("unsupported model format version");

        MlpModel model;
        model.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        if (model.layer_dims.size() < 2) throw InvalidData("model has fewer than two layer dims");
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (weights.size() + 1 != model.layer_dims.size() || biases.size() != weights.size())
            throw InvalidData("layer count mismatch in model file");
        for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
            Matrix w(model.layer_dims[l], model.layer_dims[l + 1]);
            auto values = weights[l].get<std::vector<double>>();
            if (values.size() != w.data().size())
                throw InvalidData("weight array size mismatch in model file");
            w.data() = std::move(values);
            model.weights.push_back(std::move(w));
            auto b = biases[l].get<std::vector<double>>();
            if (b.size() != model.layer_dims[l + 1])
                throw InvalidData("bias array size mismatch in model file");
            model.biases.push_back(std::move(b));
        }

        ModelMeta meta;
        meta.objective = objective_from_string(j.at("objective").get<std::string>());
        meta.clusters = j.at("k").get<std::size_t>();
        meta.sigma = j.at("sigma").get<double>();
        if (!j.at("s").is_null()) meta.knn_s = j.at("s").get<std::size_t>();
        return {std::move(model), meta};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("malformed model file: ") + e.what());
    }
}

inline std::pair<MlpModel, ModelMeta> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

} // namespace neuncut
