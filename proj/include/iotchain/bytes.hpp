// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iotchain {

using Bytes = std::vector<uint8_t>;

Bytes bytes_of(std::string_view s);
std::string string_of(const Bytes& b);

std::string to_hex(const uint8_t* data, size_t len);
std::string to_hex(const Bytes& b);
Bytes from_hex(std::string_view hex);  // throws parse_error on bad input

std::string to_base64(const uint8_t* data, size_t len);
std::string to_base64(const Bytes& b);
Bytes from_base64(std::string_view b64);  // throws parse_error on bad input

}  // namespace iotchain
