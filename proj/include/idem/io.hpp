// JSON file formats and report emitters.
//
// Channel schema (shared by the CLI and the test fixtures):
//
//     {"dim_in": d, "dim_out": d2, "kraus": [ [[ [re,im], ... ] per row ] per op ]}
//
// Complex entries are two-element arrays [re, im] of IEEE-754 doubles; the
// serializer emits shortest round-trip representations, so write-then-read
// reproduces every double bit-exactly. A channel file wraps the schema with a
// version string and optional metadata.

#pragma once

#include "idem/approx_algebra.hpp"
#include "idem/capacity.hpp"
#include "idem/discrimination.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace idem {

// Raised for unreadable files and schema violations (the CLI maps these to
// its I/O exit code, distinct from numeric failures).
struct IoError : Error {
    using Error::Error;
};

inline constexpr const char* kChannelSchemaVersion = "1";

// Shared configuration for the CLI subcommands; every run is deterministic
// given its inputs and this config.
struct RunConfig {
    ToleranceConfig tolerances;
    std::uint64_t seed = kDefaultSeed;
    Index budget_dim = 64;     // cap on tensor-power dimensions
    double delta_max = 0.05;   // inclusion budget for audit thresholds
    Index grid_points = 4096;  // rate-curve samples

    void validate() const {
        tolerances.validate();
        if (budget_dim < 2 || budget_dim > 256) {
            throw Error("RunConfig: budget_dim must lie in [2, 256]");
        }
        if (delta_max <= 0) throw Error("RunConfig: delta_max must be positive");
        if (grid_points < 3) throw Error("RunConfig: grid_points must be >= 3");
    }
};

// ---------------------------------------------------------------------------
// Channel JSON schema
// ---------------------------------------------------------------------------

inline nlohmann::json channel_to_json(const Channel& c) {
    nlohmann::json ops = nlohmann::json::array();
    for (const Matrix& k : c.kraus()) {
        nlohmann::json rows = nlohmann::json::array();
        for (Index r = 0; r < k.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Index s = 0; s < k.cols(); ++s) {
                row.push_back(nlohmann::json::array({k(r, s).real(), k(r, s).imag()}));
            }
            rows.push_back(std::move(row));
        }
        ops.push_back(std::move(rows));
    }
    return nlohmann::json{
        {"dim_in", c.dim_in()}, {"dim_out", c.dim_out()}, {"kraus", std::move(ops)}};
}

inline Channel channel_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dim_in") || !j.contains("dim_out") ||
        !j.contains("kraus")) {
        throw IoError("channel: expected an object with dim_in, dim_out, kraus");
    }
    if (!j["dim_in"].is_number_integer() || !j["dim_out"].is_number_integer()) {
        throw IoError("channel: dim_in and dim_out must be integers");
    }
    const Index din = j["dim_in"].get<Index>();
    const Index dout = j["dim_out"].get<Index>();
    if (din < 1 || dout < 1) throw IoError("channel: dimensions must be >= 1");
    if (!j["kraus"].is_array() || j["kraus"].empty()) {
        throw IoError("channel: kraus must be a non-empty array of operators");
    }
    std::vector<Matrix> kraus;
    kraus.reserve(j["kraus"].size());
    for (const nlohmann::json& op : j["kraus"]) {
        if (!op.is_array() || static_cast<Index>(op.size()) != dout) {
            throw IoError("channel: each Kraus operator needs dim_out rows");
        }
        Matrix k(dout, din);
        for (Index r = 0; r < dout; ++r) {
            const nlohmann::json& row = op[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Index>(row.size()) != din) {
                throw IoError("channel: each Kraus row needs dim_in entries");
            }
            for (Index s = 0; s < din; ++s) {
                const nlohmann::json& z = row[static_cast<std::size_t>(s)];
                if (!z.is_array() || z.size() != 2 || !z[0].is_number() ||
                    !z[1].is_number()) {
                    throw IoError("channel: entries must be [re, im] number pairs");
                }
                k(r, s) = Complex(z[0].get<double>(), z[1].get<double>());
            }
        }
        kraus.push_back(std::move(k));
    }
    return Channel(din, dout, std::move(kraus));
}

// ---------------------------------------------------------------------------
// Channel files
// ---------------------------------------------------------------------------

struct ChannelFile {
    std::string schema_version = kChannelSchemaVersion;
    Channel channel;
    std::optional<std::string> name;
    std::optional<ShapeVector> expected_shape;
};

inline nlohmann::json channel_file_to_json(const ChannelFile& f) {
    nlohmann::json j{{"schema_version", f.schema_version},
                     {"channel", channel_to_json(f.channel)}};
    if (f.name || f.expected_shape) {
        nlohmann::json meta = nlohmann::json::object();
        if (f.name) meta["name"] = *f.name;
        if (f.expected_shape) {
            meta["expected_shape"] = f.expected_shape->entries;
        }
        j["metadata"] = std::move(meta);
    }
    return j;
}

inline ChannelFile channel_file_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("schema_version") || !j.contains("channel")) {
        throw IoError("channel file: expected schema_version and channel fields");
    }
    if (!j["schema_version"].is_string()) {
        throw IoError("channel file: schema_version must be a string");
    }
    ChannelFile f{j["schema_version"].get<std::string>(),
                  channel_from_json(j["channel"]),
                  std::nullopt,
                  std::nullopt};
    if (j.contains("metadata")) {
        const nlohmann::json& meta = j["metadata"];
        if (!meta.is_object()) throw IoError("channel file: metadata must be an object");
        if (meta.contains("name")) {
            if (!meta["name"].is_string()) {
                throw IoError("channel file: metadata.name must be a string");
            }
            f.name = meta["name"].get<std::string>();
        }
        if (meta.contains("expected_shape")) {
            if (!meta["expected_shape"].is_array()) {
                throw IoError("channel file: metadata.expected_shape must be an array");
            }
            ShapeVector shape;
            for (const nlohmann::json& e : meta["expected_shape"]) {
                if (!e.is_number_integer() || e.get<Index>() < 1) {
                    throw IoError("channel file: expected_shape entries must be "
                                  "positive integers");
                }
                shape.entries.push_back(e.get<Index>());
            }
            f.expected_shape = std::move(shape);
        }
    }
    return f;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw IoError("invalid JSON in file: " + path);
    return j;
}

inline ChannelFile read_channel_file(const std::string& path) {
    return channel_file_from_json(read_json_file(path));
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline void write_channel_file(const std::string& path, const ChannelFile& f) {
    write_text_file(path, channel_file_to_json(f).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Report emitters
// ---------------------------------------------------------------------------

// JSON cannot hold IEEE infinities; report values that may be infinite are
// emitted as the string "infinity" (and NaN argmins as null).
inline nlohmann::json json_extended_real(double x) {
    if (std::isnan(x)) return nullptr;
    if (std::isinf(x)) return x > 0 ? "infinity" : "-infinity";
    return x;
}

inline nlohmann::json capacity_report_to_json(const CapacityReport& r) {
    return nlohmann::json{
        {"value", json_extended_real(r.value)},
        {"argmin_p", json_extended_real(r.argmin_p)},
        {"endpoint_p1", json_extended_real(r.endpoint_values.p1)},
        {"endpoint_pinf", json_extended_real(r.endpoint_values.pinf)},
        {"special_case", to_string(r.special_case)},
        {"interior_minimizer",
         std::isfinite(r.argmin_p) && r.argmin_p > 1.0 &&
             r.special_case == SpecialCase::none},
    };
}

// CSV dump of the sampled rate curve; columns s, p, ratio with s = 1/p.
inline std::string capacity_curve_to_csv(const CapacityReport& r) {
    std::ostringstream out;
    out << "s,p,ratio\n";
    for (const RateCurvePoint& pt : r.curve_samples) {
        out << pt.s << ',' << (std::isinf(pt.p) ? std::string("inf")
                                                : std::to_string(pt.p))
            << ',' << pt.ratio << '\n';
    }
    return out.str();
}

inline nlohmann::json decomposition_report_to_json(const IdempotentDecomposition& dec) {
    return nlohmann::json{{"shape", dec.shape.entries},
                          {"multiplicities", dec.multiplicities},
                          {"residual", dec.residual}};
}

inline nlohmann::json certificate_to_json(const ConverseCertificate& c) {
    return nlohmann::json{{"gap_p1", c.gap_p1},
                          {"gap_pinf", c.gap_pinf},
                          {"theoretical_floor", c.theoretical_floor},
                          {"certified_lower_bound", c.certified_lower_bound}};
}

inline nlohmann::json inclusion_report_to_json(const InclusionReport& r,
                                               std::uint64_t seed) {
    return nlohmann::json{{"delta_cb", r.delta_cb},
                          {"norm_preservation_worst", r.norm_preservation_worst},
                          {"unitality_residual", r.unitality_residual},
                          {"multiplicativity_worst", r.multiplicativity_worst},
                          {"lambda_min", r.lambda_min},
                          {"dim_source", r.dim_source},
                          {"theoretical_mult_bound", r.theoretical_mult_bound},
                          {"sample_count", r.sample_count},
                          {"seed", seed}};
}

// Integer CSV of the embedding plan: one row per target block, one column per
// source block.
inline std::string plan_to_csv(const EmbeddingPlan& plan) {
    std::ostringstream out;
    for (const std::vector<Index>& row : plan.multiplicity) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace idem
