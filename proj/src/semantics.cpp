/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/semantics.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {
namespace {

constexpr std::size_t kMaxIdStr = 256;

std::vector<TagDefinition> standard_definitions() {
  using VR = ValueRep;
  auto one = Multiplicity::One;
  return {
      {{0x0008, 0x0001}, "object_uid", VR::IDSTR, std::nullopt, one},
      {{0x0008, 0x0002}, "creation_time", VR::DATETIME, std::nullopt, one},
      {{0x0008, 0x0010}, "method_code", VR::IDSTR, std::nullopt, one},
      {{0x0010, 0x0001}, "component_serial", VR::IDSTR, std::nullopt, one},
      {{0x0010, 0x0002}, "component_type", VR::IDSTR, std::nullopt, one},
      {{0x0020, 0x0001}, "order_id", VR::IDSTR, std::nullopt, one},
      {{0x0020, 0x0002}, "procedure_id", VR::IDSTR, std::nullopt, one},
      {{0x0030, 0x0001}, "device_instance", VR::IDSTR, std::nullopt, one},
      {{0x0030, 0x0002}, "calibration_due", VR::DATETIME, std::nullopt, one},
      {{0x0040, 0x0001}, "rows", VR::U16, std::nullopt, one},
      {{0x0040, 0x0002}, "cols", VR::U16, std::nullopt, one},
      {{0x0040, 0x0003}, "amplitude_grid", VR::F32ARRAY, std::string("percent-FSH"), Multiplicity::Many},
      {{0x7FE0, 0x0010}, "bulk_payload", VR::BYTES, std::nullopt, Multiplicity::Many},
  };
}

bool has_control_char(ByteView b) noexcept {
  return std::any_of(b.begin(), b.end(), [](std::uint8_t c) { return c < 0x20 || c == 0x7F; });
}

std::string hex_preview(ByteView raw) {
  std::string out;
  const std::size_t n = std::min<std::size_t>(raw.size(), 16);
  for (std::size_t i = 0; i < n; ++i) out += fmt::format("{:02x}", raw[i]);
  if (raw.size() > n) out += "...";
  return out;
}

}  // namespace

std::string_view to_string(ValueRep vr) noexcept {
  switch (vr) {
    case ValueRep::IDSTR: return "IDSTR";
    case ValueRep::TEXT: return "TEXT";
    case ValueRep::DATETIME: return "DATETIME";
    case ValueRep::U16: return "U16";
    case ValueRep::F32ARRAY: return "F32ARRAY";
    case ValueRep::BYTES: return "BYTES";
  }
  return "?";
}

std::optional<ValueRep> value_rep_from_string(std::string_view s) noexcept {
  for (auto vr : {ValueRep::IDSTR, ValueRep::TEXT, ValueRep::DATETIME, ValueRep::U16,
                  ValueRep::F32ARRAY, ValueRep::BYTES}) {
    if (to_string(vr) == s) return vr;
  }
  return std::nullopt;
}

Dictionary::Dictionary(int version, std::vector<TagDefinition> definitions)
    : version_(version), defs_(std::move(definitions)) {
  std::sort(defs_.begin(), defs_.end(),
            [](const TagDefinition& a, const TagDefinition& b) { return a.code < b.code; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    if (i > 0 && defs_[i - 1].code == defs_[i].code) {
      throw Error(Errc::DictionaryConflict, fmt::format("duplicate code {}", defs_[i].code.str()));
    }
    if (!names.insert(defs_[i].name).second) {
      throw Error(Errc::DictionaryConflict, fmt::format("duplicate name '{}'", defs_[i].name));
    }
  }
}

const TagDefinition* Dictionary::find(TagCode code) const noexcept {
  auto it = std::lower_bound(defs_.begin(), defs_.end(), code,
                             [](const TagDefinition& d, TagCode c) { return d.code < c; });
  if (it == defs_.end() || it->code != code) return nullptr;
  return &*it;
}

const TagDefinition* Dictionary::find(std::string_view name) const noexcept {
  for (const auto& d : defs_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

Dictionary Dictionary::extend(std::vector<TagDefinition> additions) const {
  std::vector<TagDefinition> all = defs_;
  for (auto& add : additions) {
    if (const TagDefinition* existing = find(add.code)) {
      if (*existing == add) continue;
      throw Error(Errc::DictionaryConflict,
                  fmt::format("extension redefines {} ('{}')", add.code.str(), existing->name));
    }
    all.push_back(std::move(add));
  }
  return Dictionary(version_ + 1, std::move(all));
}

const Dictionary& Dictionary::standard() {
  static const Dictionary dict(1, standard_definitions());
  return dict;
}

std::string Dictionary::to_tsv() const {
  std::string out = fmt::format("#version\t{}\n#code\tname\tvalue_rep\tunits\tmultiplicity\n", version_);
  for (const auto& d : defs_) {
    out += fmt::format("{:04X},{:04X}\t{}\t{}\t{}\t{}\n", d.code.group, d.code.element, d.name,
                       to_string(d.value_rep), d.units.value_or("-"),
                       d.multiplicity == Multiplicity::One ? "1" : "N");
  }
  return out;
}

Dictionary Dictionary::from_tsv(std::string_view text) {
  std::optional<int> version;
  std::vector<TagDefinition> defs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t line_start = pos;
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> cols;
    std::size_t c = 0;
    while (true) {
      std::size_t tab = line.find('\t', c);
      cols.push_back(line.substr(c, tab == std::string_view::npos ? std::string_view::npos : tab - c));
      if (tab == std::string_view::npos) break;
      c = tab + 1;
    }
    if (cols[0] == "#version") {
      int v = 0;
      if (cols.size() != 2 ||
          std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), v).ec != std::errc{}) {
        throw Error(Errc::ParseError, "bad #version line", line_start);
      }
      version = v;
      continue;
    }
    if (line.front() == '#') continue;
    if (cols.size() != 5 || cols[0].size() != 9 || cols[0][4] != ',') {
      throw Error(Errc::ParseError, "expected 'GGGG,EEEE<TAB>name<TAB>vr<TAB>units<TAB>multiplicity'",
                  line_start);
    }
    auto hex = [&](std::string_view s) {
      std::uint16_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
      if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(Errc::ParseError, fmt::format("bad hex '{}'", s), line_start);
      }
      return v;
    };
    TagDefinition def;
    def.code = TagCode{hex(cols[0].substr(0, 4)), hex(cols[0].substr(5))};
    def.name = cols[1];
    auto vr = value_rep_from_string(cols[2]);
    if (!vr) throw Error(Errc::ParseError, fmt::format("unknown value rep '{}'", cols[2]), line_start);
    def.value_rep = *vr;
    if (cols[3] != "-") def.units = std::string(cols[3]);
    if (cols[4] == "1") {
      def.multiplicity = Multiplicity::One;
    } else if (cols[4] == "N") {
      def.multiplicity = Multiplicity::Many;
    } else {
      throw Error(Errc::ParseError, "multiplicity must be 1 or N", line_start);
    }
    defs.push_back(std::move(def));
  }
  if (!version) throw Error(Errc::ParseError, "missing #version line", 0);
  return Dictionary(*version, std::move(defs));
}

LookupResult lookup(const Dictionary& dict, TagCode code) {
  if (code.is_private()) return PrivateTag{code};
  if (const TagDefinition* def = dict.find(code)) return *def;
  throw Error(Errc::UnknownStandardTag, fmt::format("{} not in dictionary v{}", code.str(), dict.version()));
}

bool is_valid_utf8(ByteView b) noexcept {
  std::size_t i = 0;
  while (i < b.size()) {
    const std::uint8_t c = b[i];
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= b.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((b[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b[i + k] & 0x3F);
    }
    // overlong, surrogate and range checks
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

bool is_method_code(std::string_view code) noexcept {
  static constexpr std::string_view kCodes[] = {"UT", "RT", "CT", "ET", "MT", "PT", "VT"};
  return std::find(std::begin(kCodes), std::end(kCodes), code) != std::end(kCodes);
}

Value interpret(const TagDefinition& def, ByteView raw) {
  const std::string where = fmt::format("{} {}", def.name, def.code.str());
  switch (def.value_rep) {
    case ValueRep::IDSTR:
      if (raw.empty() || raw.size() > kMaxIdStr) {
        throw Error(Errc::LengthMismatch, fmt::format("{}: IDSTR length {} outside 1..{}", where, raw.size(), kMaxIdStr));
      }
      if (!is_valid_utf8(raw) || has_control_char(raw)) {
        throw Error(Errc::EncodingError, fmt::format("{}: IDSTR is not printable UTF-8", where));
      }
      return Value{def.value_rep, to_string(raw)};
    case ValueRep::TEXT:
      if (!is_valid_utf8(raw)) throw Error(Errc::EncodingError, fmt::format("{}: TEXT is not UTF-8", where));
      return Value{def.value_rep, to_string(raw)};
    case ValueRep::DATETIME: {
      if (raw.size() != kDateTimeSize) {
        throw Error(Errc::LengthMismatch, fmt::format("{}: DATETIME needs {} bytes, got {}", where, kDateTimeSize, raw.size()));
      }
      auto dt = DateTime::try_parse(to_string(raw));
      if (!dt) throw Error(Errc::EncodingError, fmt::format("{}: invalid DATETIME digits", where));
      return Value{def.value_rep, *dt};
    }
    case ValueRep::U16:
      if (raw.size() != 2) throw Error(Errc::LengthMismatch, fmt::format("{}: U16 needs 2 bytes, got {}", where, raw.size()));
      return Value{def.value_rep, get_u16le(raw)};
    case ValueRep::F32ARRAY: {
      if (raw.size() % 4 != 0) {
        throw Error(Errc::LengthMismatch, fmt::format("{}: F32ARRAY length {} not divisible by 4", where, raw.size()));
      }
      std::vector<float> values(raw.size() / 4);
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::bit_cast<float>(get_u32le(raw.subspan(i * 4)));
      }
      return Value{def.value_rep, std::move(values)};
    }
    case ValueRep::BYTES:
      return Value{def.value_rep, Bytes(raw.begin(), raw.end())};
  }
  throw Error(Errc::EncodingError, "unknown value rep");
}

Bytes encode_value(const Value& value) {
  Bytes out;
  switch (value.value_rep) {
    case ValueRep::IDSTR:
    case ValueRep::TEXT:
      put_text(out, std::get<std::string>(value.data));
      break;
    case ValueRep::DATETIME:
      put_text(out, std::get<DateTime>(value.data).str());
      break;
    case ValueRep::U16:
      put_u16le(out, std::get<std::uint16_t>(value.data));
      break;
    case ValueRep::F32ARRAY: {
      const auto& v = std::get<std::vector<float>>(value.data);
      out.reserve(v.size() * 4);
      for (float f : v) put_u32le(out, std::bit_cast<std::uint32_t>(f));
      break;
    }
    case ValueRep::BYTES:
      out = std::get<Bytes>(value.data);
      break;
  }
  return out;
}

std::string format_value(const TagDefinition& def, ByteView raw) {
  try {
    Value v = interpret(def, raw);
    switch (def.value_rep) {
      case ValueRep::IDSTR:
      case ValueRep::TEXT:
        return std::get<std::string>(v.data);
      case ValueRep::DATETIME:
        return std::get<DateTime>(v.data).str();
      case ValueRep::U16:
        return std::to_string(std::get<std::uint16_t>(v.data));
      case ValueRep::F32ARRAY: {
        const auto& f = std::get<std::vector<float>>(v.data);
        std::string out = fmt::format("[{} values", f.size());
        if (!f.empty()) {
          auto [lo, hi] = std::minmax_element(f.begin(), f.end());
          out += fmt::format(", min {:.2f}, max {:.2f}", *lo, *hi);
        }
        return out + (def.units ? " " + *def.units : "") + "]";
      }
      case ValueRep::BYTES:
        return fmt::format("<{} bytes>", raw.size());
    }
  } catch (const Error&) {
  }
  return fmt::format("<invalid {} {} bytes: {}>", to_string(def.value_rep), raw.size(), hex_preview(raw));
}

Report validate_object(const Dictionary& dict, const DataObject& obj) {
  Report report;
  for (const auto& e : obj.elements()) {
    if (e.tag.is_private()) {
      report.add(FindingKind::PrivateTag, Severity::Info, e.tag.str());
      continue;
    }
    const TagDefinition* def = dict.find(e.tag);
    if (def == nullptr) {
      report.add(FindingKind::UnknownStandardTag, Severity::Error, e.tag.str());
      continue;
    }
    try {
      Value v = interpret(*def, e.value);
      if (def->multiplicity == Multiplicity::One) {
        bool multi = false;
        if (auto* s = std::get_if<std::string>(&v.data)) multi = s->find('\\') != std::string::npos;
        if (auto* f = std::get_if<std::vector<float>>(&v.data)) multi = f->size() != 1;
        if (multi) {
          report.add(FindingKind::MultiplicityViolation, Severity::Error,
                     fmt::format("{} {} holds more than one value", def->name, e.tag.str()));
          continue;
        }
      }
      if (e.tag == tags::kMethod && !is_method_code(std::get<std::string>(v.data))) {
        report.add(FindingKind::VocabularyViolation, Severity::Error,
                   fmt::format("method_code {} '{}' not in {{UT,RT,CT,ET,MT,PT,VT}}", e.tag.str(),
                               std::get<std::string>(v.data)));
      }
    } catch (const Error& err) {
      report.add(FindingKind::ValueRepMismatch, Severity::Error,
                 fmt::format("{} {} is not a valid {}: {}", def->name, e.tag.str(),
                             to_string(def->value_rep), err.detail()));
    }
  }
  for (TagCode tag : tags::kMandatory) {
    if (obj.find(tag) == nullptr) {
      const TagDefinition* def = dict.find(tag);
      report.add(FindingKind::MissingMandatory, Severity::Error,
                 fmt::format("{} {}", def ? def->name : "?", tag.str()));
    }
  }
  return report;
}

}  // namespace nde4
