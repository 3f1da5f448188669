// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <json.hpp>

#include "iotchain/bytes.hpp"
#include "iotchain/crypto.hpp"

namespace iotchain {

using json = nlohmann::json;

// Canonical JSON is the hashing encoding used everywhere a digest must be
// reproducible across implementations: object keys sorted ascending, no
// whitespace, byte fields base64, integers carried as decimal strings.
// nlohmann::json keeps objects in a sorted map, so dump() of a tree built
// through these helpers is canonical by construction.
namespace canonical {

inline json uint_field(uint64_t v) { return json(std::to_string(v)); }
inline json bytes_field(const Bytes& b) { return json(to_base64(b)); }

inline uint64_t parse_uint(const json& j) { return std::stoull(j.get<std::string>()); }
inline Bytes parse_bytes(const json& j) { return from_base64(j.get<std::string>()); }

inline std::string dump(const json& j) { return j.dump(); }

inline Bytes dump_bytes(const json& j) { return bytes_of(j.dump()); }

inline crypto::Digest digest(const json& j) { return crypto::sha256(j.dump()); }

}  // namespace canonical

}  // namespace iotchain
