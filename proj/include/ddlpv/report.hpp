#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ddlpv/verification.hpp"

namespace ddlpv {

/// Synthesis report with the verification block merged under "verify".
nlohmann::json synthesis_report(const SynthesisResult& r,
                                const std::optional<VerifyReport>& v = std::nullopt);

/// Messages describing where doc violates the JSON Schema; empty when valid.
std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ddlpv
