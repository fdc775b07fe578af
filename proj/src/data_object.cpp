/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/data_object.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {

std::string TagCode::str() const { return fmt::format("({:04X},{:04X})", group, element); }

DataObject::DataObject(std::vector<Element> elements) : elements_(std::move(elements)) {
  for (std::size_t i = 1; i < elements_.size(); ++i) {
    if (!(elements_[i - 1].tag < elements_[i].tag)) {
      throw Error(Errc::NonCanonicalOrder,
                  fmt::format("element {} does not follow {}", elements_[i].tag.str(),
                              elements_[i - 1].tag.str()));
    }
  }
}

const Element* DataObject::find(TagCode tag) const noexcept {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), tag,
                             [](const Element& e, TagCode t) { return e.tag < t; });
  if (it == elements_.end() || it->tag != tag) return nullptr;
  return &*it;
}

std::optional<std::string> DataObject::text(TagCode tag) const {
  const Element* e = find(tag);
  if (e == nullptr) return std::nullopt;
  return to_string(e->value);
}

void DataObject::set(TagCode tag, Bytes value) {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), tag,
                             [](const Element& e, TagCode t) { return e.tag < t; });
  if (it != elements_.end() && it->tag == tag) {
    it->value = std::move(value);
  } else {
    elements_.insert(it, Element{tag, std::move(value)});
  }
}

void DataObject::merge(const std::vector<Element>& seed) {
  for (const auto& e : seed) set(e.tag, e.value);
}

Bytes encode_object(const DataObject& obj) {
  std::size_t total = kObjectPreambleSize;
  for (const auto& e : obj.elements()) total += kElementHeaderSize + e.value.size();
  Bytes out;
  out.reserve(total);
  put_text(out, kObjectMagic);
  out.push_back(kObjectVersion);
  for (const auto& e : obj.elements()) {
    if (e.value.size() > 0xFFFFFFFFULL) {
      throw Error(Errc::LengthMismatch, fmt::format("element {} exceeds 4 GiB", e.tag.str()));
    }
    put_u16le(out, e.tag.group);
    put_u16le(out, e.tag.element);
    put_u32le(out, static_cast<std::uint32_t>(e.value.size()));
    out.insert(out.end(), e.value.begin(), e.value.end());
  }
  return out;
}

DataObject decode_object(ByteView bytes) {
  for (std::size_t i = 0; i < kObjectMagic.size(); ++i) {
    if (i >= bytes.size() || bytes[i] != static_cast<std::uint8_t>(kObjectMagic[i])) {
      throw Error(Errc::BadPreamble, "missing NDEO magic", i);
    }
  }
  if (bytes.size() < kObjectPreambleSize) throw Error(Errc::BadPreamble, "missing version byte", 4);
  if (bytes[4] != kObjectVersion) {
    throw Error(Errc::BadPreamble, fmt::format("unsupported version {}", bytes[4]), 4);
  }

  std::vector<Element> elements;
  std::size_t pos = kObjectPreambleSize;
  while (pos < bytes.size()) {
    const std::size_t start = pos;
    if (bytes.size() - pos < kElementHeaderSize) {
      throw Error(Errc::TruncatedElement, "element header cut short", start);
    }
    TagCode tag{get_u16le(bytes.subspan(pos)), get_u16le(bytes.subspan(pos + 2))};
    const std::uint32_t len = get_u32le(bytes.subspan(pos + 4));
    pos += kElementHeaderSize;
    if (bytes.size() - pos < len) {
      throw Error(Errc::TruncatedElement,
                  fmt::format("element {} declares {} bytes, {} remain", tag.str(), len, bytes.size() - pos),
                  start);
    }
    if (!elements.empty() && !(elements.back().tag < tag)) {
      throw Error(Errc::NonCanonicalOrder,
                  fmt::format("element {} after {}", tag.str(), elements.back().tag.str()), start);
    }
    elements.push_back(Element{tag, Bytes(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + len))});
    pos += len;
  }
  return DataObject(std::move(elements));
}

bool is_object_uid(std::string_view uid) noexcept {
  if (uid.empty() || uid.size() > 64 || uid == "." || uid == "..") return false;
  return std::all_of(uid.begin(), uid.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

}  // namespace nde4

namespace nde4 {

std::optional<TagCode> parse_tag(std::string_view text) noexcept {
  if (text.size() == 11 && text.front() == '(' && text.back() == ')') text = text.substr(1, 9);
  if (text.size() != 9 || text[4] != ',') return std::nullopt;
  auto hex = [](std::string_view s) -> std::optional<std::uint16_t> {
    std::uint16_t v = 0;
    for (char c : s) {
      int d = 0;
      if (c >= '0' && c <= '9') {
        d = c - '0';
      } else if (c >= 'a' && c <= 'f') {
        d = c - 'a' + 10;
      } else if (c >= 'A' && c <= 'F') {
        d = c - 'A' + 10;
      } else {
        return std::nullopt;
      }
      v = static_cast<std::uint16_t>(v * 16 + d);
    }
    return v;
  };
  auto g = hex(text.substr(0, 4));
  auto e = hex(text.substr(5, 4));
  if (!g || !e) return std::nullopt;
  return TagCode{*g, *e};
}

}  // namespace nde4
