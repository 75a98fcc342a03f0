// SPDX-License-Identifier: Apache-2.0
#include "lumina/workload.hpp"

#include "lumina/errors.hpp"

namespace lumina {

std::string_view unit_class_name(UnitClass u) {
    switch (u) {
        case UnitClass::Tensor: return "tensor";
        case UnitClass::Vector: return "vector";
        case UnitClass::Comm: return "comm";
    }
    return "?";
}

std::string_view phase_name(Phase p) { return p == Phase::Prefill ? "prefill" : "decode"; }

void ModelConfig::validate() const {
    if (d_model <= 0 || n_head <= 0 || d_head <= 0 || d_ffn <= 0 || elem_bytes <= 0 || tp_degree <= 0)
        throw ConfigError("model dimensions must be positive");
    if (d_model != n_head * d_head) throw ConfigError("d_model must equal n_head * d_head");
    if (n_head % tp_degree != 0) throw ConfigError("tp_degree must divide n_head");
    if (d_ffn % tp_degree != 0) throw ConfigError("tp_degree must divide d_ffn");
}

namespace {

OperatorSpec projection(std::string name, double m, double k, double n, double eb) {
    OperatorSpec op;
    op.name = std::move(name);
    op.unit_class = UnitClass::Tensor;
    op.flops = 2.0 * m * k * n;
    op.weight_bytes = k * n * eb;
    op.act_in_bytes = m * k * eb;
    op.act_out_bytes = m * n * eb;
    op.io_bytes = op.act_in_bytes + op.act_out_bytes;
    op.gemm = GemmDims{static_cast<std::int64_t>(m), static_cast<std::int64_t>(k), static_cast<std::int64_t>(n), 1};
    return op;
}

OperatorSpec allreduce(std::string name, double payload) {
    OperatorSpec op;
    op.name = std::move(name);
    op.unit_class = UnitClass::Comm;
    op.comm_bytes = payload;
    return op;
}

OperatorSpec layernorm(std::string name, double rows, double width, double eb) {
    OperatorSpec op;
    op.name = std::move(name);
    op.unit_class = UnitClass::Vector;
    op.flops = 5.0 * rows * width;
    op.act_in_bytes = rows * width * eb;
    op.act_out_bytes = rows * width * eb;
    op.io_bytes = op.act_in_bytes + op.act_out_bytes;
    return op;
}

// One transformer layer with query length q and key length l. In prefill the
// keys and values are fresh activations; in decode they stream from the cache.
PhaseGraph build_layer(const ModelConfig& cfg, Phase phase, int batch, int q, int l) {
    cfg.validate();
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (q < 1 || l < 1) throw ConfigError("sequence lengths must be >= 1");

    const double b = batch;
    const double d = cfg.d_model;
    const double dh = cfg.d_head;
    const double tp = cfg.tp_degree;
    const double eb = cfg.elem_bytes;
    const double heads = cfg.n_head / cfg.tp_degree;  // heads on this GPU
    const double tokens = b * q;
    const double bh = b * heads;
    const bool from_cache = phase == Phase::Decode;

    PhaseGraph g;
    g.phase = phase;
    g.batch = batch;
    g.seq_or_kv_len = phase == Phase::Prefill ? q : l;
    g.elem_bytes = cfg.elem_bytes;

    g.operators.push_back(projection("qkv_proj", tokens, d, 3.0 * d / tp, eb));

    {
        OperatorSpec op;
        op.name = "attn_scores";
        op.unit_class = UnitClass::Tensor;
        op.flops = 2.0 * bh * q * l * dh;
        op.gemm = GemmDims{q, static_cast<std::int64_t>(dh), l, static_cast<std::int64_t>(bh)};
        op.act_in_bytes = bh * q * dh * eb;
        const double keys = bh * l * dh * eb;
        (from_cache ? op.cache_bytes : op.act_in_bytes) += keys;
        op.act_out_bytes = bh * q * l * eb;
        op.io_bytes = op.act_in_bytes + op.act_out_bytes + op.cache_bytes;
        g.operators.push_back(op);
    }
    {
        OperatorSpec op;
        op.name = "softmax";
        op.unit_class = UnitClass::Vector;
        op.flops = 5.0 * bh * q * l;
        op.act_in_bytes = bh * q * l * eb;
        op.act_out_bytes = bh * q * l * eb;
        op.io_bytes = op.act_in_bytes + op.act_out_bytes;
        g.operators.push_back(op);
    }
    {
        OperatorSpec op;
        op.name = "attn_context";
        op.unit_class = UnitClass::Tensor;
        op.flops = 2.0 * bh * q * l * dh;
        op.gemm = GemmDims{q, l, static_cast<std::int64_t>(dh), static_cast<std::int64_t>(bh)};
        op.act_in_bytes = bh * q * l * eb;
        const double values = bh * l * dh * eb;
        (from_cache ? op.cache_bytes : op.act_in_bytes) += values;
        op.act_out_bytes = bh * q * dh * eb;
        op.io_bytes = op.act_in_bytes + op.act_out_bytes + op.cache_bytes;
        g.operators.push_back(op);
    }

    g.operators.push_back(projection("out_proj", tokens, d / tp, d, eb));
    g.operators.push_back(allreduce("allreduce_attn", tokens * d * eb));
    g.operators.push_back(layernorm("layernorm_1", tokens, d, eb));
    g.operators.push_back(projection("ffn_up", tokens, d, cfg.d_ffn / tp, eb));
    g.operators.push_back(projection("ffn_down", tokens, cfg.d_ffn / tp, d, eb));
    g.operators.push_back(allreduce("allreduce_ffn", tokens * d * eb));
    g.operators.push_back(layernorm("layernorm_2", tokens, d, eb));
    return g;
}

}  // namespace

PhaseGraph build_prefill(const ModelConfig& cfg, int batch, int seq_len) {
    return build_layer(cfg, Phase::Prefill, batch, seq_len, seq_len);
}

PhaseGraph build_decode(const ModelConfig& cfg, int batch, int kv_len) {
    return build_layer(cfg, Phase::Decode, batch, 1, kv_len);
}

PhaseGraph single_matmul(std::int64_t m, std::int64_t k, std::int64_t n, int elem_bytes) {
    if (m < 1 || k < 1 || n < 1) throw ConfigError("matmul dims must be positive");
    PhaseGraph g;
    g.phase = Phase::Prefill;
    g.batch = 1;
    g.seq_or_kv_len = static_cast<int>(m);
    g.elem_bytes = elem_bytes;
    g.operators.push_back(projection("matmul", static_cast<double>(m), static_cast<double>(k),
                                     static_cast<double>(n), elem_bytes));
    return g;
}

PhaseGraph single_layernorm(std::int64_t rows, std::int64_t width, int elem_bytes) {
    if (rows < 1 || width < 1) throw ConfigError("layernorm dims must be positive");
    PhaseGraph g;
    g.phase = Phase::Prefill;
    g.batch = 1;
    g.seq_or_kv_len = static_cast<int>(rows);
    g.elem_bytes = elem_bytes;
    g.operators.push_back(layernorm("layernorm", static_cast<double>(rows), static_cast<double>(width), elem_bytes));
    return g;
}

nlohmann::json to_json(const OperatorSpec& op) {
    nlohmann::json j{
        {"name", op.name},
        {"unit_class", unit_class_name(op.unit_class)},
        {"flops", op.flops},
        {"weight_bytes", op.weight_bytes},
        {"io_bytes", op.io_bytes},
        {"comm_bytes", op.comm_bytes},
        {"act_in_bytes", op.act_in_bytes},
        {"act_out_bytes", op.act_out_bytes},
        {"cache_bytes", op.cache_bytes},
    };
    if (op.gemm) j["gemm_dims"] = {{"m", op.gemm->m}, {"k", op.gemm->k}, {"n", op.gemm->n}, {"count", op.gemm->count}};
    return j;
}

nlohmann::json to_json(const PhaseGraph& g) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : g.operators) ops.push_back(to_json(op));
    return {{"phase", phase_name(g.phase)}, {"batch", g.batch}, {"seq_or_kv_len", g.seq_or_kv_len}, {"operators", ops}};
}

nlohmann::json to_json(const WorkloadConfig& w) {
    return {
        {"d_model", w.model.d_model}, {"n_head", w.model.n_head},   {"d_head", w.model.d_head},
        {"d_ffn", w.model.d_ffn},     {"elem_bytes", w.model.elem_bytes}, {"tp_degree", w.model.tp_degree},
        {"batch", w.batch},           {"seq_len", w.seq_len},       {"decode_kv_len", w.decode_kv_len},
        {"gpus", w.gpus},
    };
}

WorkloadConfig workload_from_json(const nlohmann::json& j) {
    WorkloadConfig w;
    w.model.d_model = j.value("d_model", w.model.d_model);
    w.model.n_head = j.value("n_head", w.model.n_head);
    w.model.d_head = j.value("d_head", w.model.d_head);
    w.model.d_ffn = j.value("d_ffn", w.model.d_ffn);
    w.model.elem_bytes = j.value("elem_bytes", w.model.elem_bytes);
    w.model.tp_degree = j.value("tp_degree", w.model.tp_degree);
    w.batch = j.value("batch", w.batch);
    w.seq_len = j.value("seq_len", w.seq_len);
    w.decode_kv_len = j.value("decode_kv_len", w.decode_kv_len);
    w.gpus = j.value("gpus", w.gpus);
    w.model.validate();
    if (w.batch < 1 || w.seq_len < 1 || w.decode_kv_len < 1 || w.gpus < 1)
        throw ConfigError("workload sizes must be >= 1");
    return w;
}

}  // namespace lumina
