/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/identity.hpp"

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {
namespace {

constexpr std::string_view kPrefix = "urn:nde4:";

bool is_name_char(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; }

bool is_serial_char(char c) noexcept {
  return is_name_char(c) || (c >= 'A' && c <= 'Z');
}

template <typename Pred>
bool token_ok(std::string_view token, Pred pred) noexcept {
  if (token.empty() || token.size() > kMaxTokenLength) return false;
  for (char c : token) {
    if (!pred(c)) return false;
  }
  return true;
}

template <typename Pred>
void require_token(std::string_view what, std::string_view token, Pred pred) {
  if (token.empty()) throw Error(Errc::MalformedToken, fmt::format("{} is empty", what));
  if (token.size() > kMaxTokenLength) {
    throw Error(Errc::MalformedToken, fmt::format("{} longer than {} characters", what, kMaxTokenLength));
  }
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (!pred(token[i])) {
      throw Error(Errc::MalformedToken,
                  fmt::format("{} '{}' has illegal character at position {}", what, token, i));
    }
  }
}

// Validates one ':'-delimited segment starting at 'base' in the full text.
template <typename Pred>
void check_segment(std::size_t base, std::string_view seg, Pred pred,
                   std::string_view what) {
  if (seg.empty()) throw Error(Errc::ParseError, fmt::format("empty {}", what), base);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (i == kMaxTokenLength) {
      throw Error(Errc::ParseError, fmt::format("{} longer than {} characters", what, kMaxTokenLength),
                  base + i);
    }
    if (!pred(seg[i])) {
      throw Error(Errc::ParseError, fmt::format("illegal character in {}", what), base + i);
    }
  }
}

}  // namespace

bool is_name_token(std::string_view token) noexcept { return token_ok(token, is_name_char); }
bool is_serial_token(std::string_view token) noexcept { return token_ok(token, is_serial_char); }

TypeId mint_type_id(std::string_view ns, std::string_view name) {
  require_token("namespace", ns, is_name_char);
  require_token("type name", name, is_name_char);
  TypeId id;
  id.ns_ = ns;
  id.name_ = name;
  id.canonical_ = fmt::format("urn:nde4:type:{}:{}", ns, name);
  return id;
}

InstanceId mint_instance_id(const TypeId& type, std::string_view serial) {
  if (type.canonical().empty()) throw Error(Errc::MalformedToken, "instance of an empty type id");
  require_token("serial", serial, is_serial_char);
  InstanceId id;
  id.type_ = type;
  id.serial_ = serial;
  id.canonical_ = fmt::format("urn:nde4:inst:{}:{}:{}", type.ns(), type.name(), serial);
  return id;
}

AnyId parse_id(std::string_view text) {
  for (std::size_t i = 0; i < kPrefix.size(); ++i) {
    if (i >= text.size() || text[i] != kPrefix[i]) {
      throw Error(Errc::ParseError, "expected 'urn:nde4:' prefix", i);
    }
  }
  std::size_t pos = kPrefix.size();
  const std::string_view kind = text.substr(pos, 5);
  bool is_type = kind == "type:";
  if (!is_type && kind != "inst:") {
    throw Error(Errc::ParseError, "unknown kind segment (expected 'type' or 'inst')", pos);
  }
  pos += 5;

  const std::size_t want = is_type ? 2 : 3;
  std::string_view segs[3];
  std::size_t starts[3] = {};
  for (std::size_t k = 0; k < want; ++k) {
    starts[k] = pos;
    std::size_t colon = text.find(':', pos);
    if (k + 1 < want) {
      if (colon == std::string_view::npos) {
        throw Error(Errc::ParseError, "missing segment", text.size());
      }
      segs[k] = text.substr(pos, colon - pos);
      pos = colon + 1;
    } else {
      if (colon != std::string_view::npos) throw Error(Errc::ParseError, "unexpected extra segment", colon);
      segs[k] = text.substr(pos);
    }
  }
  check_segment(starts[0], segs[0], is_name_char, "namespace");
  check_segment(starts[1], segs[1], is_name_char, "type name");
  TypeId type = mint_type_id(segs[0], segs[1]);
  if (is_type) return type;
  check_segment(starts[2], segs[2], is_serial_char, "serial");
  return mint_instance_id(type, segs[2]);
}

TypeId parse_type_id(std::string_view text) {
  AnyId id = parse_id(text);
  if (auto* t = std::get_if<TypeId>(&id)) return *t;
  throw Error(Errc::ParseError, "expected a type id, got an instance id", kPrefix.size());
}

InstanceId parse_instance_id(std::string_view text) {
  AnyId id = parse_id(text);
  if (auto* i = std::get_if<InstanceId>(&id)) return *i;
  throw Error(Errc::ParseError, "expected an instance id, got a type id", kPrefix.size());
}

}  // namespace nde4
