#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nop/vision/image.hpp"

namespace nop::config {

std::string base64_encode(const std::vector<std::uint8_t>& data);
/// Returns nullopt on malformed input. Whitespace is not accepted.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(std::string_view key);

/// Opcodes of the frames we care about.
enum class WsOpcode : std::uint8_t { Continuation = 0, Text = 1, Binary = 2, Close = 8, Ping = 9, Pong = 10 };

struct WsFrame {
  bool fin = true;
  WsOpcode opcode = WsOpcode::Text;
  std::string payload;
};

/// Server-side frame (never masked).
std::string ws_encode(WsOpcode op, std::string_view payload);
/// Client-side frame with the given mask key, for tests and tools.
std::string ws_encode_masked(WsOpcode op, std::string_view payload, std::uint32_t mask);
/// Pulls one complete frame off the front of `buf`. Returns nullopt when more bytes are needed.
std::optional<WsFrame> ws_decode(std::string& buf);

/// 8-bit RGB PNG.
std::vector<std::uint8_t> encode_png(const vision::RgbImage& img);
std::optional<vision::RgbImage> decode_png(const std::vector<std::uint8_t>& data);

}  // namespace nop::config
