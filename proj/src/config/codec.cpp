#include "nop/config/codec.hpp"

#include <cstring>
#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

namespace nop::config {

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  std::vector<std::uint8_t> out(text.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  // EVP_DecodeBlock keeps the padding bytes as zeros; trim them.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string websocket_accept(std::string_view key) {
  std::string s(key);
  s += "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  std::vector<std::uint8_t> digest(SHA_DIGEST_LENGTH);
  SHA1(reinterpret_cast<const unsigned char*>(s.data()), s.size(), digest.data());
  return base64_encode(digest);
}

namespace {

std::string ws_header(WsOpcode op, std::size_t len, bool masked) {
  std::string h;
  h += static_cast<char>(0x80 | static_cast<std::uint8_t>(op));
  const char m = masked ? static_cast<char>(0x80) : 0;
  if (len < 126) {
    h += static_cast<char>(m | static_cast<char>(len));
  } else if (len <= 0xFFFF) {
    h += static_cast<char>(m | 126);
    h += static_cast<char>(len >> 8);
    h += static_cast<char>(len & 0xFF);
  } else {
    h += static_cast<char>(m | 127);
    for (int i = 7; i >= 0; --i) h += static_cast<char>((static_cast<std::uint64_t>(len) >> (8 * i)) & 0xFF);
  }
  return h;
}

}  // namespace

std::string ws_encode(WsOpcode op, std::string_view payload) {
  return ws_header(op, payload.size(), false) + std::string(payload);
}

std::string ws_encode_masked(WsOpcode op, std::string_view payload, std::uint32_t mask) {
  std::string out = ws_header(op, payload.size(), true);
  const char key[4] = {char(mask >> 24), char(mask >> 16), char(mask >> 8), char(mask)};
  out.append(key, 4);
  for (std::size_t i = 0; i < payload.size(); ++i) out += static_cast<char>(payload[i] ^ key[i % 4]);
  return out;
}

std::optional<WsFrame> ws_decode(std::string& buf) {
  if (buf.size() < 2) return std::nullopt;
  const auto b = [&](std::size_t i) { return static_cast<std::uint8_t>(buf[i]); };
  WsFrame f;
  f.fin = b(0) & 0x80;
  f.opcode = static_cast<WsOpcode>(b(0) & 0x0F);
  const bool masked = b(1) & 0x80;
  std::uint64_t len = b(1) & 0x7F;
  std::size_t pos = 2;
  if (len == 126) {
    if (buf.size() < 4) return std::nullopt;
    len = (std::uint64_t(b(2)) << 8) | b(3);
    pos = 4;
  } else if (len == 127) {
    if (buf.size() < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | b(2 + i);
    pos = 10;
  }
  if (len > (64u << 20)) throw std::runtime_error("websocket frame too large");
  const std::size_t need = pos + (masked ? 4 : 0) + len;
  if (buf.size() < need) return std::nullopt;
  char key[4] = {0, 0, 0, 0};
  if (masked) {
    std::memcpy(key, buf.data() + pos, 4);
    pos += 4;
  }
  f.payload = buf.substr(pos, len);
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ key[i % 4]);
  }
  buf.erase(0, need);
  return f;
}

std::vector<std::uint8_t> encode_png(const vision::RgbImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  const void* pixels = img.pixels.data();
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw std::runtime_error(std::string("png: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw std::runtime_error(std::string("png: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::optional<vision::RgbImage> decode_png(const std::vector<std::uint8_t>& data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) return std::nullopt;
  image.format = PNG_FORMAT_RGB;
  vision::RgbImage img{static_cast<int>(image.width), static_cast<int>(image.height), {}};
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    return std::nullopt;
  }
  return img;
}

}  // namespace nop::config
