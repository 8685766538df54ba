#pragma once

#include <string>
#include <string_view>

// Byte-level helpers backed by OpenSSL.
namespace servnet::codec {

std::string base64_encode(std::string_view bytes);
/// Throws Error(DecodeError) on malformed input.
std::string base64_decode(std::string_view text);

std::string sha256_hex(std::string_view bytes);
/// Constant-time comparison of equal-length strings; false on length mismatch.
bool constant_time_equal(std::string_view a, std::string_view b) noexcept;

/// Random 128-bit identifier formatted as a canonical UUID string.
std::string random_uuid();

}  // namespace servnet::codec
