/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/registry.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/error.hpp"

namespace nde4 {

namespace {

constexpr std::string_view kServicePrefix = "inspect-";

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_tag(const Dictionary& dict, TagCode tag, std::string_view where, Report& report) {
  if (tag.is_private()) {
    report.add(FindingKind::PrivateTag, Severity::Info, fmt::format("{} uses private tag {}", where, tag.str()));
  } else if (dict.find(tag) == nullptr) {
    report.add(FindingKind::UnknownSemanticTag, Severity::Error,
               fmt::format("{} uses tag {} not in dictionary v{}", where, tag.str(), dict.version()));
  }
}

}  // namespace

std::string inspection_service_name(std::string_view method) {
  return std::string(kServicePrefix) + lower(method);
}

std::vector<std::string> Manifest::methods() const {
  std::vector<std::string> out;
  for (const auto& s : services) {
    std::string_view name = s.service_name;
    if (name.size() <= kServicePrefix.size() || !name.starts_with(kServicePrefix)) continue;
    std::string m = upper(name.substr(kServicePrefix.size()));
    if (is_method_code(m) && std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

bool Manifest::advertises(std::string_view method) const {
  auto ms = methods();
  return std::find(ms.begin(), ms.end(), upper(method)) != ms.end();
}

Report validate_manifest(const Manifest& m, const Dictionary& dict, const ShellPredicate& is_registered) {
  Report report;
  if (!m.shell_type_id) report.add(FindingKind::MissingHeaderId, Severity::Error, "header.shellTypeId is missing");
  if (!m.asset_instance_id) {
    report.add(FindingKind::MissingHeaderId, Severity::Error, "header.assetInstanceId is missing");
  }

  for (std::size_t i = 0; i < m.data_refs.size(); ++i) {
    const auto& ref = m.data_refs[i];
    if (std::find(m.data_refs.begin(), m.data_refs.begin() + static_cast<std::ptrdiff_t>(i), ref) !=
        m.data_refs.begin() + static_cast<std::ptrdiff_t>(i)) {
      report.add(FindingKind::DuplicateBodyEntry, Severity::Error,
                 fmt::format("dataRefs[{}] repeats {} -> '{}'", i, ref.semantic_tag.str(), ref.locator));
    }
    check_tag(dict, ref.semantic_tag, fmt::format("dataRefs[{}]", i), report);
  }

  std::set<std::string_view> names;
  for (std::size_t i = 0; i < m.services.size(); ++i) {
    const auto& s = m.services[i];
    if (!names.insert(s.service_name).second) {
      report.add(FindingKind::DuplicateBodyEntry, Severity::Error,
                 fmt::format("services[{}] repeats service name '{}'", i, s.service_name));
    }
    for (TagCode t : s.inputs) check_tag(dict, t, fmt::format("services[{}].inputs", i), report);
    for (TagCode t : s.outputs) check_tag(dict, t, fmt::format("services[{}].outputs", i), report);
  }

  std::set<std::string_view> kids;
  for (std::size_t i = 0; i < m.children.size(); ++i) {
    const auto& c = m.children[i];
    if (!kids.insert(c.canonical()).second) {
      report.add(FindingKind::DuplicateBodyEntry, Severity::Error,
                 fmt::format("children[{}] repeats {}", i, c.canonical()));
    } else if (is_registered && !is_registered(c)) {
      report.add(FindingKind::DanglingChild, Severity::Warning,
                 fmt::format("child {} is not registered yet", c.canonical()));
    }
  }
  return report;
}

// --- .aas encoding ---------------------------------------------------------

namespace {

using nlohmann::json;

// Offset of a string value inside the source document, so ID errors point
// into the file rather than into the extracted value.
std::size_t locate(std::string_view text, const std::string& value, std::size_t inner) {
  std::string quoted = json(value).dump();
  auto pos = text.find(quoted);
  return pos == std::string_view::npos ? inner : pos + 1 + inner;
}

template <typename F>
auto parse_located(std::string_view text, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const Error& e) {
    if (e.code() != Errc::ParseError) throw;
    throw Error(Errc::ParseError, e.detail(), locate(text, value, e.offset().value_or(0)));
  }
}

const json& member(const json& j, const char* key, std::string_view path) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(Errc::ParseError, fmt::format("missing field {}.{}", path, key), 0);
  }
  return j.at(key);
}

std::string string_at(const json& j, std::string_view path) {
  if (!j.is_string()) throw Error(Errc::ParseError, fmt::format("{} must be a string", path), 0);
  return j.get<std::string>();
}

TagCode tag_at(std::string_view text, const json& j, std::string_view path) {
  std::string s = string_at(j, path);
  auto tag = parse_tag(s);
  if (!tag) throw Error(Errc::ParseError, fmt::format("{}: bad tag '{}'", path, s), locate(text, s, 0));
  return *tag;
}

std::vector<TagCode> tags_at(std::string_view text, const json& j, std::string_view path) {
  std::vector<TagCode> out;
  if (!j.is_array()) throw Error(Errc::ParseError, fmt::format("{} must be an array", path), 0);
  for (const auto& t : j) out.push_back(tag_at(text, t, path));
  return out;
}

const json& array_or_empty(const json& body, const char* key) {
  static const json kEmpty = json::array();
  if (!body.contains(key)) return kEmpty;
  const json& a = body.at(key);
  if (!a.is_array()) throw Error(Errc::ParseError, fmt::format("body.{} must be an array", key), 0);
  return a;
}

std::string tag_text(TagCode t) { return fmt::format("{:04X},{:04X}", t.group, t.element); }

}  // namespace

Manifest manifest_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, "malformed JSON", e.byte > 0 ? e.byte - 1 : 0);
  }

  Manifest m;
  const json& header = member(doc, "header", "$");
  if (header.contains("shellTypeId")) {
    std::string s = string_at(header["shellTypeId"], "header.shellTypeId");
    if (!s.empty()) m.shell_type_id = parse_located(text, s, [](const std::string& v) { return parse_type_id(v); });
  }
  if (header.contains("assetInstanceId")) {
    std::string s = string_at(header["assetInstanceId"], "header.assetInstanceId");
    if (!s.empty()) {
      m.asset_instance_id = parse_located(text, s, [](const std::string& v) { return parse_instance_id(v); });
    }
  }
  if (header.contains("displayName")) m.display_name = string_at(header["displayName"], "header.displayName");

  static const json kEmptyBody = json::object();
  const json& body = doc.contains("body") ? doc["body"] : kEmptyBody;
  if (!body.is_object()) throw Error(Errc::ParseError, "body must be an object", 0);

  for (const auto& r : array_or_empty(body, "dataRefs")) {
    m.data_refs.push_back(
        {tag_at(text, member(r, "tag", "dataRefs[]"), "dataRefs[].tag"),
         string_at(member(r, "locator", "dataRefs[]"), "dataRefs[].locator")});
  }
  for (const auto& s : array_or_empty(body, "services")) {
    ServiceDesc d;
    d.service_name = string_at(member(s, "name", "services[]"), "services[].name");
    if (s.contains("inputs")) d.inputs = tags_at(text, s["inputs"], "services[].inputs");
    if (s.contains("outputs")) d.outputs = tags_at(text, s["outputs"], "services[].outputs");
    m.services.push_back(std::move(d));
  }
  for (const auto& c : array_or_empty(body, "children")) {
    std::string s = string_at(c, "body.children[]");
    m.children.push_back(parse_located(text, s, [](const std::string& v) { return parse_instance_id(v); }));
  }
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json header = json::object();
  header["shellTypeId"] = m.shell_type_id ? m.shell_type_id->canonical() : "";
  header["assetInstanceId"] = m.asset_instance_id ? m.asset_instance_id->canonical() : "";
  header["displayName"] = m.display_name;

  json refs = json::array();
  for (const auto& r : m.data_refs) refs.push_back({{"tag", tag_text(r.semantic_tag)}, {"locator", r.locator}});
  json services = json::array();
  for (const auto& s : m.services) {
    json in = json::array();
    json out = json::array();
    for (TagCode t : s.inputs) in.push_back(tag_text(t));
    for (TagCode t : s.outputs) out.push_back(tag_text(t));
    services.push_back({{"name", s.service_name}, {"inputs", in}, {"outputs", out}});
  }
  json children = json::array();
  for (const auto& c : m.children) children.push_back(c.canonical());

  json doc = {{"header", header},
              {"body", {{"dataRefs", refs}, {"services", services}, {"children", children}}}};
  return doc.dump(2) + "\n";
}

// --- registry ----------------------------------------------------------------

bool TwinRegistry::reaches(const std::string& from, const std::string& target) const {
  std::vector<std::string> stack{from};
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string at = std::move(stack.back());
    stack.pop_back();
    if (at == target) return true;
    if (!seen.insert(at).second) continue;
    auto it = shells_.find(at);
    if (it == shells_.end()) continue;
    for (const auto& c : it->second.children) stack.push_back(c.canonical());
  }
  return false;
}

Report TwinRegistry::validate(const Manifest& manifest) const {
  std::shared_lock lock(mutex_);
  return validate_manifest(manifest, *dict_,
                           [this](const InstanceId& id) { return shells_.count(id.canonical()) != 0; });
}

ShellHandle TwinRegistry::register_shell(Manifest manifest) {
  std::unique_lock lock(mutex_);
  Report report = validate_manifest(
      manifest, *dict_, [this](const InstanceId& id) { return shells_.count(id.canonical()) != 0; });
  if (!report.ok()) throw ValidationError(Errc::InvalidManifest, std::move(report));

  const InstanceId id = *manifest.asset_instance_id;
  if (shells_.count(id.canonical()) != 0) {
    throw Error(Errc::DuplicateInstance, fmt::format("{} is already registered", id.canonical()));
  }
  // A child registered earlier may already (transitively) list this shell.
  for (const auto& c : manifest.children) {
    if (c == id || reaches(c.canonical(), id.canonical())) {
      throw Error(Errc::CycleDetected, fmt::format("{} would contain itself via {}", id.canonical(), c.canonical()));
    }
  }
  shells_.emplace(id.canonical(), std::move(manifest));
  order_.push_back(id);
  return {id, order_.size() - 1, std::move(report)};
}

void TwinRegistry::nest(const InstanceId& parent, const InstanceId& child) {
  std::unique_lock lock(mutex_);
  auto p = shells_.find(parent.canonical());
  if (p == shells_.end()) throw Error(Errc::UnknownShell, fmt::format("{} is not registered", parent.canonical()));
  if (shells_.count(child.canonical()) == 0) {
    throw Error(Errc::UnknownShell, fmt::format("{} is not registered", child.canonical()));
  }
  if (parent == child || reaches(child.canonical(), parent.canonical())) {
    throw Error(Errc::CycleDetected,
                fmt::format("nesting {} under {} closes a cycle", child.canonical(), parent.canonical()));
  }
  auto& kids = p->second.children;
  if (std::find(kids.begin(), kids.end(), child) == kids.end()) kids.push_back(child);
}

Manifest TwinRegistry::resolve(const InstanceId& id) const {
  std::shared_lock lock(mutex_);
  auto it = shells_.find(id.canonical());
  if (it == shells_.end()) throw Error(Errc::UnknownShell, fmt::format("{} is not registered", id.canonical()));
  return it->second;
}

bool TwinRegistry::contains(const InstanceId& id) const {
  std::shared_lock lock(mutex_);
  return shells_.count(id.canonical()) != 0;
}

std::vector<InstanceId> TwinRegistry::list() const {
  std::shared_lock lock(mutex_);
  return order_;
}

std::size_t TwinRegistry::size() const {
  std::shared_lock lock(mutex_);
  return order_.size();
}

}  // namespace nde4
