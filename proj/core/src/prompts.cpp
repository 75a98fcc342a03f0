// SPDX-License-Identifier: Apache-2.0
#include "lumina/prompts.hpp"

#include <algorithm>
#include <sstream>

namespace lumina {

std::string enhanced_rules_text() {
    return "Rules:\n"
           "1. Focus solely on the dominant bottleneck reported by the performance counters; ignore "
           "resources that are not on the critical path.\n"
           "2. Always compute deltas relative to the sensitivity reference design, never against zero.\n"
           "3. When area must be recovered, adjust only the least critical resource.\n";
}

std::string quale_system_prompt() {
    return "You are a GPU architect. Read the performance and area model below and list, for every "
           "design parameter and every metric, whether increasing the parameter raises (+1), lowers (-1) "
           "or cannot affect (0) the metric. Reply with one JSON object "
           "{\"entries\": [{\"parameter\": ..., \"metric\": ..., \"sign\": ...}]}.";
}

std::string quale_user_prompt(const ModelStructure& structure) {
    std::ostringstream os;
    os << "Parameters:";
    for (Param p : kAllParams) os << ' ' << param_name(p);
    os << "\nMetrics:";
    for (Metric m : kAllMetrics) os << ' ' << metric_name(m);
    os << "\n\nModel:\n" << structure.text;
    return os.str();
}

std::string se_system_prompt(bool enhanced) {
    std::string s =
        "You are a GPU architect exploring a design space for LLM inference (one GPT-3 layer, batch 8, "
        "8-way tensor parallel). Minimize time-to-first-token, time-per-output-token and die area. "
        "Each turn, propose one bottleneck-mitigation directive: raise the parameters that relieve the "
        "target bottleneck and optionally lower one parameter to recover area. Steps move along each "
        "parameter's ordered list of allowed values.\n"
        "Reply with exactly one JSON object:\n"
        "{\"target_bottleneck\": \"tensor_compute|vector_compute|memory_bw|interconnect\", "
        "\"boosts\": [{\"parameter\": name, \"steps\": positive int}], "
        "\"tradeoff\": {\"parameter\": name, \"steps\": negative int} or null, \"rationale\": text}\n";
    if (enhanced) s = enhanced_rules_text() + "\n" + s;
    return s;
}

std::string se_user_prompt(const SeContext& ctx, const std::string& feedback) {
    std::ostringstream os;
    os.precision(4);
    const auto& e = ctx.current;
    os << "Current design:";
    for (Param p : kAllParams) os << ' ' << param_name(p) << '=' << e.design[p];
    os << "\nAllowed values:\n";
    for (Param p : kAllParams) {
        os << "  " << param_name(p) << ':';
        for (int v : ctx.space.values(p)) os << ' ' << v;
        os << '\n';
    }
    os << "Normalized metrics (reference = 1): ttft " << e.metrics.ttft_n << ", tpot " << e.metrics.tpot_n
       << ", area " << e.metrics.area_n << '\n';
    for (Phase ph : {Phase::Prefill, Phase::Decode}) {
        const PhaseReport& r = e.report.phase(ph);
        os << phase_name(ph) << " stall shares:";
        for (Resource res : kAllResources) os << ' ' << resource_name(res) << '=' << r.share(res);
        os << " (dominant " << resource_name(r.dominant) << ")\n";
    }
    os << "Target metric this round: " << metric_name(ctx.target) << '\n';
    os << "Influence per +1 step at the sensitivity reference (parameter: ttft_s, tpot_s, area_mm2):\n";
    for (Param p : kAllParams) {
        os << "  " << param_name(p) << ": " << ctx.ahk.at(p, Metric::Ttft).magnitude << ", "
           << ctx.ahk.at(p, Metric::Tpot).magnitude << ", " << ctx.ahk.at(p, Metric::Area).magnitude << '\n';
    }
    const auto& samples = ctx.tm.samples();
    const std::size_t from = samples.size() > 8 ? samples.size() - 8 : 0;
    os << "Recent samples:\n";
    for (std::size_t i = from; i < samples.size(); ++i) {
        const auto& s = samples[i];
        os << "  #" << s.step << ' ' << s.eval.design.to_string() << " ttft " << s.eval.metrics.ttft_n << " tpot "
           << s.eval.metrics.tpot_n << " area " << s.eval.metrics.area_n;
        if (s.outcome) os << ' ' << outcome_name(*s.outcome);
        os << '\n';
    }
    if (!ctx.tm.failures().empty()) {
        os << "Do not repeat these failed directives:\n";
        for (const auto& f : ctx.tm.failures()) os << "  " << f.fingerprint << '\n';
    }
    os << "Do not propose a design that was already sampled.\n";
    if (!feedback.empty()) os << "\nYour previous reply was rejected: " << feedback << "\nReply again.\n";
    return os.str();
}

std::string bench_system_prompt() {
    return "You are a GPU architect answering multiple-choice design questions about LLM inference "
           "hardware. Exactly one option is correct. End your reply with \"Answer: X\" where X is A, B, C or D.\n";
}

}  // namespace lumina
