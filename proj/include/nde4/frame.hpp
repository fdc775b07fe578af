/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "nde4/bytes.hpp"

namespace nde4 {

enum class Channel : std::uint8_t { Orders = 1, Archive = 2, Sovereign = 3 };

[[nodiscard]] std::string_view to_string(Channel channel) noexcept;

/// 16 MiB, inclusive.
inline constexpr std::size_t kMaxOrdersPayload = 16U * 1024U * 1024U;
inline constexpr std::size_t kFrameHeaderSize = 10;
inline constexpr std::uint8_t kFrameVersion = 1;

struct Frame {
  Channel channel = Channel::Orders;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// "NDE4" | version | channel | length u32 LE | payload.
/// Throws Error(OversizedPayload) for ORDERS payloads above 16 MiB.
[[nodiscard]] Bytes encode_frame(Channel channel, ByteView payload);
[[nodiscard]] inline Bytes encode_frame(const Frame& f) { return encode_frame(f.channel, f.payload); }

/// Exactly one frame. Throws Error(BadMagic | BadVersion | BadChannel |
/// LengthMismatch | OversizedPayload).
[[nodiscard]] Frame decode_frame(ByteView bytes);

/// Incremental decoder over a byte stream.
class FrameReader {
 public:
  void feed(ByteView bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }
  /// A complete frame, or nullopt if more bytes are needed. Header errors throw.
  [[nodiscard]] std::optional<Frame> next();
  [[nodiscard]] std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  Bytes buffer_;
};

/// Request/response exchange with a peer endpoint.
using FrameLink = std::function<Frame(const Frame&)>;
using FrameHandler = std::function<Frame(const Frame&)>;
/// Observes each encoded frame crossing a link (requests and responses).
using FrameTap = std::function<void(const Frame&, ByteView wire)>;

/// In-process transport. Every frame is encoded and decoded so the wire
/// format is exercised exactly as over a socket.
[[nodiscard]] FrameLink loopback_link(FrameHandler handler, FrameTap tap = {});

/// Frames over a connected stream socket (or any fd with stream semantics).
class StreamTransport {
 public:
  explicit StreamTransport(int fd) noexcept : fd_(fd) {}
  ~StreamTransport();
  StreamTransport(const StreamTransport&) = delete;
  StreamTransport& operator=(const StreamTransport&) = delete;

  void send(const Frame& frame);
  /// nullopt on orderly EOF.
  [[nodiscard]] std::optional<Frame> receive();
  void shutdown_write() noexcept;

 private:
  int fd_;
  FrameReader reader_;
};

/// Client side: one request, one response, serialized per transport.
[[nodiscard]] FrameLink stream_link(std::shared_ptr<StreamTransport> transport);

/// Server side: answers requests until the peer closes.
void serve_stream(StreamTransport& transport, const FrameHandler& handler);

}  // namespace nde4
