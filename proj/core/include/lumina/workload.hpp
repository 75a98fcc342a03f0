// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace lumina {

enum class UnitClass { Tensor, Vector, Comm };
enum class Phase { Prefill, Decode };

std::string_view unit_class_name(UnitClass u);
std::string_view phase_name(Phase p);

/// Transformer dimensions. Defaults are GPT-3 175B in FP16 over 8-way tensor parallelism.
struct ModelConfig {
    int d_model = 12288;
    int n_head = 96;
    int d_head = 128;
    int d_ffn = 49152;
    int elem_bytes = 2;
    int tp_degree = 8;

    /// Throws ConfigError when the dimensions are inconsistent.
    void validate() const;
};

/// (M, K, N) of one matrix multiply, repeated `count` times (heads x batch for attention).
struct GemmDims {
    std::int64_t m = 0;
    std::int64_t k = 0;
    std::int64_t n = 0;
    std::int64_t count = 1;
};

/// Per-GPU counts for one operator.
///
/// io_bytes is the compulsory activation traffic: act_in + act_out + cache.
/// Activations are inter-operator tensors that a large enough global buffer can
/// hold on chip; cache bytes (the decode KV cache) always come from DRAM.
struct OperatorSpec {
    std::string name;
    UnitClass unit_class = UnitClass::Vector;
    double flops = 0.0;
    double weight_bytes = 0.0;
    double io_bytes = 0.0;
    double comm_bytes = 0.0;
    std::optional<GemmDims> gemm;

    double act_in_bytes = 0.0;
    double act_out_bytes = 0.0;
    double cache_bytes = 0.0;
};

/// Operators run back to back in list order.
struct PhaseGraph {
    Phase phase = Phase::Prefill;
    int batch = 1;
    int seq_or_kv_len = 1;
    int elem_bytes = 2;
    std::vector<OperatorSpec> operators;
};

/// Run-level workload: the model plus the serving shape.
struct WorkloadConfig {
    ModelConfig model;
    int batch = 8;
    int seq_len = 2048;
    /// Key length when generating the 1024th output token (prompt + 1024).
    int decode_kv_len = 3072;
    /// GPUs in the ring collective.
    int gpus = 8;
};

PhaseGraph build_prefill(const ModelConfig& cfg, int batch, int seq_len);
PhaseGraph build_decode(const ModelConfig& cfg, int batch, int kv_len);

/// Single-operator graphs used as benchmark application targets.
PhaseGraph single_matmul(std::int64_t m, std::int64_t k, std::int64_t n, int elem_bytes = 2);
PhaseGraph single_layernorm(std::int64_t rows, std::int64_t width, int elem_bytes = 2);

nlohmann::json to_json(const OperatorSpec& op);
nlohmann::json to_json(const PhaseGraph& g);

nlohmann::json to_json(const WorkloadConfig& w);
WorkloadConfig workload_from_json(const nlohmann::json& j);

}  // namespace lumina
