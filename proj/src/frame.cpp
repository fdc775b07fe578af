/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/frame.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {
namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'D', 'E', '4'};

struct Header {
  Channel channel;
  std::uint32_t length;
};

// Validates the 10-byte header; 'bytes' must hold at least that much.
Header parse_header(ByteView bytes) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != kMagic[i]) throw Error(Errc::BadMagic, "frame does not start with NDE4", i);
  }
  if (bytes[4] != kFrameVersion) {
    throw Error(Errc::BadVersion, fmt::format("unsupported frame version {}", bytes[4]), 4);
  }
  const std::uint8_t ch = bytes[5];
  if (ch < 1 || ch > 3) throw Error(Errc::BadChannel, fmt::format("unknown channel {}", ch), 5);
  Header h{static_cast<Channel>(ch), get_u32le(bytes.subspan(6))};
  if (h.channel == Channel::Orders && h.length > kMaxOrdersPayload) {
    throw Error(Errc::OversizedPayload,
                fmt::format("ORDERS frame declares {} bytes; limit is {}", h.length, kMaxOrdersPayload), 6);
  }
  return h;
}

}  // namespace

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::Orders: return "ORDERS";
    case Channel::Archive: return "ARCHIVE";
    case Channel::Sovereign: return "SOVEREIGN";
  }
  return "?";
}

Bytes encode_frame(Channel channel, ByteView payload) {
  if (channel == Channel::Orders && payload.size() > kMaxOrdersPayload) {
    throw Error(Errc::OversizedPayload,
                fmt::format("{} byte ORDERS payload exceeds {}; route it via the archive", payload.size(),
                            kMaxOrdersPayload));
  }
  if (payload.size() > 0xFFFFFFFFULL) throw Error(Errc::OversizedPayload, "payload exceeds 4 GiB");
  Bytes out(kFrameHeaderSize + payload.size());
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[4] = kFrameVersion;
  out[5] = static_cast<std::uint8_t>(channel);
  const auto len = static_cast<std::uint32_t>(payload.size());
  for (std::size_t i = 0; i < 4; ++i) out[6 + i] = static_cast<std::uint8_t>(len >> (8 * i));
  std::copy(payload.begin(), payload.end(), out.begin() + kFrameHeaderSize);
  return out;
}

Frame decode_frame(ByteView bytes) {
  if (bytes.size() < kFrameHeaderSize) {
    // Report a bad magic in a short buffer before complaining about length.
    for (std::size_t i = 0; i < std::min<std::size_t>(4, bytes.size()); ++i) {
      if (bytes[i] != kMagic[i]) throw Error(Errc::BadMagic, "frame does not start with NDE4", i);
    }
    throw Error(Errc::LengthMismatch, fmt::format("{} bytes is shorter than a frame header", bytes.size()),
                bytes.size());
  }
  Header h = parse_header(bytes);
  const std::size_t body = bytes.size() - kFrameHeaderSize;
  if (h.length != body) {
    throw Error(Errc::LengthMismatch, fmt::format("header says {} bytes, {} follow", h.length, body), 6);
  }
  return Frame{h.channel, Bytes(bytes.begin() + kFrameHeaderSize, bytes.end())};
}

std::optional<Frame> FrameReader::next() {
  if (buffer_.size() < kFrameHeaderSize) return std::nullopt;
  Header h = parse_header(buffer_);
  const std::size_t total = kFrameHeaderSize + h.length;
  if (buffer_.size() < total) return std::nullopt;
  Frame f{h.channel, Bytes(buffer_.begin() + kFrameHeaderSize,
                           buffer_.begin() + static_cast<std::ptrdiff_t>(total))};
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(total));
  return f;
}

FrameLink loopback_link(FrameHandler handler, FrameTap tap) {
  return [handler = std::move(handler), tap = std::move(tap)](const Frame& request) {
    Bytes wire = encode_frame(request);
    if (tap) tap(request, wire);
    Frame response = handler(decode_frame(wire));
    Bytes back = encode_frame(response);
    if (tap) tap(response, back);
    return decode_frame(back);
  };
}

StreamTransport::~StreamTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void StreamTransport::send(const Frame& frame) {
  Bytes wire = encode_frame(frame);
  std::size_t sent = 0;
  while (sent < wire.size()) {
    ssize_t n = ::send(fd_, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoError, fmt::format("send: {}", std::strerror(errno)));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<Frame> StreamTransport::receive() {
  std::uint8_t buf[64 * 1024];
  while (true) {
    if (auto f = reader_.next()) return f;
    ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoError, fmt::format("recv: {}", std::strerror(errno)));
    }
    if (n == 0) {
      if (reader_.buffered() != 0) {
        throw Error(Errc::LengthMismatch, "stream closed inside a frame", reader_.buffered());
      }
      return std::nullopt;
    }
    reader_.feed(ByteView(buf, static_cast<std::size_t>(n)));
  }
}

void StreamTransport::shutdown_write() noexcept { ::shutdown(fd_, SHUT_WR); }

FrameLink stream_link(std::shared_ptr<StreamTransport> transport) {
  auto mu = std::make_shared<std::mutex>();
  return [transport = std::move(transport), mu](const Frame& request) {
    std::lock_guard lock(*mu);
    transport->send(request);
    auto response = transport->receive();
    if (!response) throw Error(Errc::IoError, "peer closed before responding");
    return std::move(*response);
  };
}

void serve_stream(StreamTransport& transport, const FrameHandler& handler) {
  while (auto request = transport.receive()) transport.send(handler(*request));
}

}  // namespace nde4
