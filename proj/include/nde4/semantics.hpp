/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nde4/bytes.hpp"
#include "nde4/data_object.hpp"
#include "nde4/datetime.hpp"
#include "nde4/tag.hpp"
#include "nde4/validation.hpp"

namespace nde4 {

enum class ValueRep { IDSTR, TEXT, DATETIME, U16, F32ARRAY, BYTES };
enum class Multiplicity { One, Many };

[[nodiscard]] std::string_view to_string(ValueRep vr) noexcept;
[[nodiscard]] std::optional<ValueRep> value_rep_from_string(std::string_view s) noexcept;

struct TagDefinition {
  TagCode code;
  std::string name;
  ValueRep value_rep = ValueRep::BYTES;
  std::optional<std::string> units;
  Multiplicity multiplicity = Multiplicity::One;

  friend bool operator==(const TagDefinition&, const TagDefinition&) = default;
};

/// Immutable, versioned tag dictionary. Extension yields a new version and
/// never redefines an existing code.
class Dictionary {
 public:
  /// Throws Error(DictionaryConflict) on duplicate codes or names.
  Dictionary(int version, std::vector<TagDefinition> definitions);

  [[nodiscard]] int version() const noexcept { return version_; }
  [[nodiscard]] const std::vector<TagDefinition>& definitions() const noexcept { return defs_; }
  [[nodiscard]] const TagDefinition* find(TagCode code) const noexcept;
  [[nodiscard]] const TagDefinition* find(std::string_view name) const noexcept;

  [[nodiscard]] Dictionary extend(std::vector<TagDefinition> additions) const;

  /// The compiled-in default (dict-v1.tsv).
  [[nodiscard]] static const Dictionary& standard();

  /// Throws Error(ParseError) with the byte offset of the bad line.
  [[nodiscard]] static Dictionary from_tsv(std::string_view text);
  [[nodiscard]] std::string to_tsv() const;

 private:
  int version_;
  std::vector<TagDefinition> defs_;
};

struct PrivateTag {
  TagCode code;
};

using LookupResult = std::variant<TagDefinition, PrivateTag>;

/// Throws Error(UnknownStandardTag) for an absent non-private code.
[[nodiscard]] LookupResult lookup(const Dictionary& dict, TagCode code);

/// Host-side form of an element value.
struct Value {
  ValueRep value_rep = ValueRep::BYTES;
  std::variant<std::string, DateTime, std::uint16_t, std::vector<float>, Bytes> data;

  friend bool operator==(const Value&, const Value&) = default;
};

/// Throws Error(LengthMismatch | EncodingError).
[[nodiscard]] Value interpret(const TagDefinition& def, ByteView raw);
[[nodiscard]] Bytes encode_value(const Value& value);

/// Human-readable rendering for dumps; never throws.
[[nodiscard]] std::string format_value(const TagDefinition& def, ByteView raw);

[[nodiscard]] bool is_valid_utf8(ByteView bytes) noexcept;
/// UT, RT, CT, ET, MT, PT or VT.
[[nodiscard]] bool is_method_code(std::string_view code) noexcept;

/// Per-element findings plus MissingMandatory for absent mandatory tags.
[[nodiscard]] Report validate_object(const Dictionary& dict, const DataObject& obj);

}  // namespace nde4
