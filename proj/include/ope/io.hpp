#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/data.hpp"
#include "ope/errors.hpp"
#include "ope/eval.hpp"
#include "ope/net.hpp"
#include "ope/samplers.hpp"

namespace ope {

using json = nlohmann::json;

/// FNV-1a over a string; hex digest. Used for config fingerprints and file
/// checksums in manifests.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace detail {

inline const json& require_field(const json& j, const char* name, const char* context) {
    auto it = j.find(name);
    if (it == j.end())
        throw SchemaError(std::string(context) + ": missing field '" + name + "'");
    return *it;
}

template <typename T>
T field_as(const json& j, const char* name, const char* context) {
    try {
        return require_field(j, name, context).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string(context) + ": field '" + name + "': " + e.what());
    }
}

}  // namespace detail

/// Everything needed to resume scoring: the network, the box it was trained
/// against, and the input scaler. Doubles are serialized as JSON numbers in
/// shortest round-trip decimal form (the JSON library's dtoa), which restores
/// them bit-exactly at double precision.
struct Checkpoint {
    DenseNet net;
    std::optional<BoxDomain> domain;
    std::optional<Standardizer> standardizer;
    std::uint64_t rng_seed = 0;
    std::uint64_t step = 0;
    std::string config_fingerprint;

    static constexpr int kSchemaVersion = 1;

    json to_json() const {
        json j;
        j["schema_version"] = kSchemaVersion;
        std::vector<std::size_t> dims;
        dims.push_back(net.in_dim());
        for (const auto& layer : net.layers()) dims.push_back(layer.out_dim());
        j["layer_dims"] = dims;
        std::vector<std::string> acts;
        std::vector<std::vector<double>> weights, biases;
        for (const auto& layer : net.layers()) {
            acts.push_back(to_string(layer.act));
            weights.push_back(layer.W.data);  // row-major flat
            biases.push_back(layer.b);
        }
        j["activations"] = acts;
        j["weights"] = weights;
        j["biases"] = biases;
        j["rng_seed"] = rng_seed;
        j["step"] = step;
        j["config_fingerprint"] = config_fingerprint;
        if (domain) {
            j["domain"] = {{"lo", domain->lo}, {"hi", domain->hi}};
        } else {
            j["domain"] = nullptr;
        }
        if (standardizer) {
            j["standardizer"] = {{"mean", standardizer->mean}, {"stddev", standardizer->stddev}};
        } else {
            j["standardizer"] = nullptr;
        }
        return j;
    }

    static Checkpoint from_json(const json& j) {
        constexpr const char* ctx = "checkpoint";
        int version = detail::field_as<int>(j, "schema_version", ctx);
        if (version != kSchemaVersion)
            throw SchemaError("checkpoint: unsupported schema_version " + std::to_string(version));
        auto dims = detail::field_as<std::vector<std::size_t>>(j, "layer_dims", ctx);
        auto acts = detail::field_as<std::vector<std::string>>(j, "activations", ctx);
        auto weights = detail::field_as<std::vector<std::vector<double>>>(j, "weights", ctx);
        auto biases = detail::field_as<std::vector<std::vector<double>>>(j, "biases", ctx);
        if (dims.size() < 2) throw SchemaError("checkpoint: field 'layer_dims' needs >= 2 entries");
        std::size_t n_layers = dims.size() - 1;
        if (acts.size() != n_layers || weights.size() != n_layers || biases.size() != n_layers)
            throw SchemaError("checkpoint: layer count mismatch across "
                              "'activations'/'weights'/'biases'");
        Checkpoint ckpt;
        ckpt.net = DenseNet::zeros(dims);
        auto& layers = ckpt.net.layers();
        for (std::size_t l = 0; l < n_layers; ++l) {
            if (weights[l].size() != dims[l] * dims[l + 1])
                throw SchemaError("checkpoint: field 'weights' layer " + std::to_string(l) +
                                  " has wrong length");
            if (biases[l].size() != dims[l + 1])
                throw SchemaError("checkpoint: field 'biases' layer " + std::to_string(l) +
                                  " has wrong length");
            layers[l].W.data = weights[l];
            layers[l].b = biases[l];
            layers[l].act = activation_from_string(acts[l]);
        }
        ckpt.rng_seed = detail::field_as<std::uint64_t>(j, "rng_seed", ctx);
        ckpt.step = detail::field_as<std::uint64_t>(j, "step", ctx);
        ckpt.config_fingerprint = detail::field_as<std::string>(j, "config_fingerprint", ctx);
        const json& dom = detail::require_field(j, "domain", ctx);
        if (!dom.is_null()) {
            BoxDomain d(detail::field_as<std::vector<double>>(dom, "lo", "checkpoint.domain"),
                        detail::field_as<std::vector<double>>(dom, "hi", "checkpoint.domain"));
            ckpt.domain = d;
        }
        const json& st = detail::require_field(j, "standardizer", ctx);
        if (!st.is_null()) {
            Standardizer s;
            s.mean = detail::field_as<std::vector<double>>(st, "mean", "checkpoint.standardizer");
            s.stddev =
                detail::field_as<std::vector<double>>(st, "stddev", "checkpoint.standardizer");
            s.fitted = true;
            ckpt.standardizer = s;
        }
        return ckpt;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
        out << to_json().dump(2) << "\n";
        if (!out) throw DataError("checkpoint: failed writing '" + path + "'");
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw SchemaError("checkpoint: invalid JSON in '" + path + "': " + e.what());
        }
        return from_json(j);
    }
};

/// JSON-lines writer; the first record is a meta line carrying provenance.
class JsonlLog {
public:
    JsonlLog() = default;

    explicit JsonlLog(const std::string& path, const json& meta) : out_(path) {
        if (!out_) throw DataError("log: cannot open '" + path + "' for writing");
        json first = meta;
        first["type"] = "meta";
        out_ << first.dump() << "\n";
    }

    void write(const json& record) {
        out_ << record.dump() << "\n";
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline json metrics_to_json(const MetricsReport& report) {
    json j;
    j["aucs"] = report.aucs;
    j["mean"] = report.mean;
    j["std"] = report.stddev;
    j["trial_seeds"] = report.trial_seeds;
    j["config_fingerprint"] = report.config_fingerprint;
    return j;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw DataError("failed writing '" + path + "'");
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ope
