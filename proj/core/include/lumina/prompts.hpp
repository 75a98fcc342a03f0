// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "lumina/influence.hpp"
#include "lumina/strategy.hpp"

namespace lumina {

/// Recorded in every run manifest that used a language model.
inline constexpr std::string_view kPromptVersion = "lumina-prompts-1";

/// The three corrective rules prepended in enhanced mode.
std::string enhanced_rules_text();

std::string quale_system_prompt();
std::string quale_user_prompt(const ModelStructure& structure);

std::string se_system_prompt(bool enhanced);
/// Current design, metrics, stall shares, influence table, recent history
/// and blocked patterns. `feedback` (a parse error) is appended on re-prompts.
std::string se_user_prompt(const SeContext& ctx, const std::string& feedback = {});

std::string bench_system_prompt();

}  // namespace lumina
