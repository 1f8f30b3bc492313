#include "ddlpv/report.hpp"

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ddlpv {

nlohmann::json synthesis_report(const SynthesisResult& r, const std::optional<VerifyReport>& v) {
  nlohmann::json j = to_json(r);
  j["verify"] = v ? to_json(*v) : nlohmann::json(nullptr);
  return j;
}

namespace {

rapidjson::Document parse_rapid(const std::string& text, const char* what) {
  rapidjson::Document d;
  d.Parse(text.c_str());
  if (d.HasParseError()) {
    throw Error(std::string(what) + ": " + rapidjson::GetParseError_En(d.GetParseError()));
  }
  return d;
}

}  // namespace

std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema) {
  const rapidjson::Document sd = parse_rapid(schema.dump(), "schema");
  const rapidjson::SchemaDocument compiled(sd);
  const rapidjson::Document dd = parse_rapid(doc.dump(), "document");
  rapidjson::SchemaValidator validator(compiled);
  std::vector<std::string> out;
  if (!dd.Accept(validator)) {
    rapidjson::StringBuffer where, rule;
    validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
    validator.GetInvalidSchemaPointer().StringifyUriFragment(rule);
    out.push_back(std::string(validator.GetInvalidSchemaKeyword()) + " violated at " +
                  where.GetString() + " (schema " + rule.GetString() + ")");
  }
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0, static_cast<int>(e.byte));
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace ddlpv
