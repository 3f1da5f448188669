// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "iotchain/canonical.hpp"
#include "iotchain/crypto.hpp"

namespace iotchain::identity {

enum class Role { client, peer, orderer, device, admin };

Role role_from_string(std::string_view s);  // throws invalid_role
const char* role_name(Role r);

// Simplified certificate: one issuer per org, no chains, no ASN.1.
struct Certificate {
  std::string subject;
  std::string org;
  Role role = Role::client;
  Bytes public_key;
  std::string issuer;
  uint64_t serial = 0;
  uint64_t not_after = 0;  // ms since epoch
  Bytes signature;         // CA signature over signing_bytes()

  // Deterministic binary encoding the CA signs: fields in declaration order,
  // strings and byte fields length-prefixed (u32 BE), integers u64 BE.
  Bytes signing_bytes() const;

  json to_json() const;  // file/wire form: snake_case keys, base64 bytes
  static Certificate from_json(const json& j);

  json canonical_json() const;  // hashing form (integers as decimal strings)
  static Certificate from_canonical_json(const json& j);

  bool operator==(const Certificate& other) const = default;
};

enum class CertStatus {
  valid,
  expired,
  revoked,
  invalid_signature,
  unknown_issuer,
  unknown_subject,
};

const char* cert_status_name(CertStatus s);

// Membership registry: trusted roots, issued members, revocations.
// Validation reads may run concurrently; issuance and revocation go through
// the registering CA, which is the single writer.
class MspRegistry {
public:
  void register_root(const std::string& org, const Bytes& ca_public_key);
  void register_member(const Certificate& cert);

  CertStatus validate(const Certificate& cert, uint64_t now_ms) const;

  // Marks (issuer, serial) revoked. Idempotent. Throws unknown_certificate if
  // that pair was never issued through this registry.
  void revoke(const std::string& issuer, uint64_t serial);

  std::optional<Certificate> member(const std::string& subject) const;
  bool has_active(const std::string& subject, const std::string& org,
                  uint64_t now_ms) const;
  std::optional<Bytes> root_key(const std::string& org) const;
  std::vector<std::string> org_names() const;
  bool is_revoked(const std::string& issuer, uint64_t serial) const;

  json to_json() const;  // roots + members + revocations (no private material)
  void merge_json(const json& j);

private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Bytes> ca_roots_;
  std::map<std::string, Certificate> members_;
  std::set<std::pair<std::string, uint64_t>> revoked_;
  std::set<std::pair<std::string, uint64_t>> issued_;
};

// Certificate authority for one org. Serial numbers are strictly increasing
// per CA. Issue/revoke are serialized by the caller (single-writer contract).
class Ca {
public:
  Ca(std::string name, std::string org, MspRegistry& registry);
  Ca(std::string name, std::string org, MspRegistry& registry, crypto::KeyPair kp,
    uint64_t last_serial);

  Certificate issue(const std::string& subject, Role role,
                    const Bytes& subject_public_key, uint64_t validity_ms,
                    uint64_t now_ms);

  // Self-signed certificate for the CA's own identity.
  Certificate issue_self(uint64_t validity_ms, uint64_t now_ms);

  const std::string& name() const { return name_; }
  const std::string& org() const { return org_; }
  const Bytes& public_key() const { return keys_.public_key; }
  const crypto::KeyPair& key_pair() const { return keys_; }
  uint64_t last_serial() const { return last_serial_; }

  json to_json() const;  // includes private key: operator keystore only
  static Ca from_json(const json& j, MspRegistry& registry);

private:
  std::string name_;
  std::string org_;
  MspRegistry& registry_;
  crypto::KeyPair keys_;
  uint64_t last_serial_ = 0;
};

}  // namespace iotchain::identity
