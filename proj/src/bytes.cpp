// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/bytes.hpp"

#include <sodium.h>

#include "iotchain/errors.hpp"

namespace iotchain {

Bytes bytes_of(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

std::string string_of(const Bytes& b) {
  return std::string(b.begin(), b.end());
}

std::string to_hex(const uint8_t* data, size_t len) {
  std::string out(len * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), data, len);
  out.resize(len * 2);
  return out;
}

std::string to_hex(const Bytes& b) {
  return to_hex(b.data(), b.size());
}

Bytes from_hex(std::string_view hex) {
  // Canonical form is lowercase; uppercase digits are rejected so a digest
  // has exactly one byte representation.
  for (char c : hex) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      raise(ErrorCode::parse_error, "invalid hex string");
    }
  }
  Bytes out(hex.size() / 2 + 1);
  size_t bin_len = 0;
  if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr,
                     &bin_len, nullptr) != 0) {
    raise(ErrorCode::parse_error, "invalid hex string");
  }
  out.resize(bin_len);
  return out;
}

std::string to_base64(const uint8_t* data, size_t len) {
  std::string out(sodium_base64_encoded_len(len, sodium_base64_VARIANT_ORIGINAL),
                  '\0');
  sodium_bin2base64(out.data(), out.size(), data, len,
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.find('\0') == std::string::npos ? out.size()
                                                 : out.find('\0'));
  return out;
}

std::string to_base64(const Bytes& b) {
  return to_base64(b.data(), b.size());
}

Bytes from_base64(std::string_view b64) {
  Bytes out(b64.size() / 4 * 3 + 3);
  size_t bin_len = 0;
  if (sodium_base642bin(out.data(), out.size(), b64.data(), b64.size(), nullptr,
                        &bin_len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    raise(ErrorCode::parse_error, "invalid base64 string");
  }
  out.resize(bin_len);
  return out;
}

}  // namespace iotchain
