// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/identity.hpp"

#include "iotchain/errors.hpp"

namespace iotchain::identity {

Role role_from_string(std::string_view s) {
  if (s == "client") return Role::client;
  if (s == "peer") return Role::peer;
  if (s == "orderer") return Role::orderer;
  if (s == "device") return Role::device;
  if (s == "admin") return Role::admin;
  raise(ErrorCode::invalid_role, "unknown role: " + std::string(s));
}

const char* role_name(Role r) {
  switch (r) {
    case Role::client: return "client";
    case Role::peer: return "peer";
    case Role::orderer: return "orderer";
    case Role::device: return "device";
    case Role::admin: return "admin";
  }
  return "client";
}

const char* cert_status_name(CertStatus s) {
  switch (s) {
    case CertStatus::valid: return "valid";
    case CertStatus::expired: return "expired";
    case CertStatus::revoked: return "revoked";
    case CertStatus::invalid_signature: return "invalid_signature";
    case CertStatus::unknown_issuer: return "unknown_issuer";
    case CertStatus::unknown_subject: return "unknown_subject";
  }
  return "invalid_signature";
}

namespace {

void put_u32_be(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64_be(Bytes& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(v >> shift));
  }
}

void put_lp(Bytes& out, std::string_view s) {
  put_u32_be(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_lp(Bytes& out, const Bytes& b) {
  put_u32_be(out, static_cast<uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

}  // namespace

Bytes Certificate::signing_bytes() const {
  Bytes out;
  put_lp(out, subject);
  put_lp(out, org);
  put_lp(out, std::string_view(role_name(role)));
  put_lp(out, public_key);
  put_lp(out, issuer);
  put_u64_be(out, serial);
  put_u64_be(out, not_after);
  return out;
}

json Certificate::to_json() const {
  return json{
      {"subject", subject},
      {"org", org},
      {"role", role_name(role)},
      {"public_key", to_base64(public_key)},
      {"issuer", issuer},
      {"serial", serial},
      {"not_after", not_after},
      {"signature", to_base64(signature)},
  };
}

Certificate Certificate::from_json(const json& j) {
  Certificate c;
  c.subject = j.at("subject").get<std::string>();
  c.org = j.at("org").get<std::string>();
  c.role = role_from_string(j.at("role").get<std::string>());
  c.public_key = from_base64(j.at("public_key").get<std::string>());
  c.issuer = j.at("issuer").get<std::string>();
  c.serial = j.at("serial").get<uint64_t>();
  c.not_after = j.at("not_after").get<uint64_t>();
  c.signature = from_base64(j.at("signature").get<std::string>());
  return c;
}

json Certificate::canonical_json() const {
  return json{
      {"subject", subject},
      {"org", org},
      {"role", role_name(role)},
      {"public_key", canonical::bytes_field(public_key)},
      {"issuer", issuer},
      {"serial", canonical::uint_field(serial)},
      {"not_after", canonical::uint_field(not_after)},
      {"signature", canonical::bytes_field(signature)},
  };
}

Certificate Certificate::from_canonical_json(const json& j) {
  Certificate c;
  c.subject = j.at("subject").get<std::string>();
  c.org = j.at("org").get<std::string>();
  c.role = role_from_string(j.at("role").get<std::string>());
  c.public_key = canonical::parse_bytes(j.at("public_key"));
  c.issuer = j.at("issuer").get<std::string>();
  c.serial = canonical::parse_uint(j.at("serial"));
  c.not_after = canonical::parse_uint(j.at("not_after"));
  c.signature = canonical::parse_bytes(j.at("signature"));
  return c;
}

void MspRegistry::register_root(const std::string& org, const Bytes& ca_public_key) {
  std::unique_lock lock(mutex_);
  ca_roots_[org] = ca_public_key;
}

void MspRegistry::register_member(const Certificate& cert) {
  std::unique_lock lock(mutex_);
  members_[cert.subject] = cert;
  issued_.insert({cert.issuer, cert.serial});
}

CertStatus MspRegistry::validate(const Certificate& cert, uint64_t now_ms) const {
  std::shared_lock lock(mutex_);
  auto root = ca_roots_.find(cert.org);
  if (root == ca_roots_.end()) return CertStatus::unknown_issuer;
  if (!crypto::verify(root->second, cert.signing_bytes(), cert.signature)) {
    return CertStatus::invalid_signature;
  }
  if (revoked_.count({cert.issuer, cert.serial})) return CertStatus::revoked;
  if (now_ms > cert.not_after) return CertStatus::expired;
  return CertStatus::valid;
}

void MspRegistry::revoke(const std::string& issuer, uint64_t serial) {
  std::unique_lock lock(mutex_);
  if (!issued_.count({issuer, serial})) {
    raise(ErrorCode::unknown_certificate,
          "no certificate with serial " + std::to_string(serial) +
              " issued by " + issuer);
  }
  revoked_.insert({issuer, serial});
}

std::optional<Certificate> MspRegistry::member(const std::string& subject) const {
  std::shared_lock lock(mutex_);
  auto it = members_.find(subject);
  if (it == members_.end()) return std::nullopt;
  return it->second;
}

bool MspRegistry::has_active(const std::string& subject, const std::string& org,
                             uint64_t now_ms) const {
  std::shared_lock lock(mutex_);
  auto it = members_.find(subject);
  if (it == members_.end()) return false;
  const Certificate& c = it->second;
  if (c.org != org) return false;
  if (revoked_.count({c.issuer, c.serial})) return false;
  if (now_ms > c.not_after) return false;
  return true;
}

std::optional<Bytes> MspRegistry::root_key(const std::string& org) const {
  std::shared_lock lock(mutex_);
  auto it = ca_roots_.find(org);
  if (it == ca_roots_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MspRegistry::org_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [org, _] : ca_roots_) out.push_back(org);
  return out;
}

bool MspRegistry::is_revoked(const std::string& issuer, uint64_t serial) const {
  std::shared_lock lock(mutex_);
  return revoked_.count({issuer, serial}) > 0;
}

json MspRegistry::to_json() const {
  std::shared_lock lock(mutex_);
  json roots = json::object();
  for (const auto& [org, pk] : ca_roots_) roots[org] = to_base64(pk);
  json members = json::array();
  for (const auto& [_, cert] : members_) members.push_back(cert.to_json());
  json revoked = json::array();
  for (const auto& [issuer, serial] : revoked_) {
    revoked.push_back(json{{"issuer", issuer}, {"serial", serial}});
  }
  json issued = json::array();
  for (const auto& [issuer, serial] : issued_) {
    issued.push_back(json{{"issuer", issuer}, {"serial", serial}});
  }
  return json{{"ca_roots", roots},
              {"members", members},
              {"revoked", revoked},
              {"issued", issued}};
}

void MspRegistry::merge_json(const json& j) {
  std::unique_lock lock(mutex_);
  for (const auto& [org, pk] : j.at("ca_roots").items()) {
    ca_roots_[org] = from_base64(pk.get<std::string>());
  }
  for (const auto& m : j.at("members")) {
    Certificate c = Certificate::from_json(m);
    members_[c.subject] = c;
    issued_.insert({c.issuer, c.serial});
  }
  for (const auto& r : j.at("revoked")) {
    revoked_.insert({r.at("issuer").get<std::string>(), r.at("serial").get<uint64_t>()});
  }
  for (const auto& r : j.at("issued")) {
    issued_.insert({r.at("issuer").get<std::string>(), r.at("serial").get<uint64_t>()});
  }
}

Ca::Ca(std::string name, std::string org, MspRegistry& registry)
    : name_(std::move(name)),
      org_(std::move(org)),
      registry_(registry),
      keys_(crypto::generate_keypair()) {
  registry_.register_root(org_, keys_.public_key);
}

Ca::Ca(std::string name, std::string org, MspRegistry& registry, crypto::KeyPair kp,
       uint64_t last_serial)
    : name_(std::move(name)),
      org_(std::move(org)),
      registry_(registry),
      keys_(std::move(kp)),
      last_serial_(last_serial) {
  registry_.register_root(org_, keys_.public_key);
}

Certificate Ca::issue(const std::string& subject, Role role,
                      const Bytes& subject_public_key, uint64_t validity_ms,
                      uint64_t now_ms) {
  if (subject.empty()) {
    raise(ErrorCode::usage_error, "certificate subject must be non-empty");
  }
  if (subject_public_key.size() != crypto::kPublicKeyBytes) {
    raise(ErrorCode::malformed_key, "subject public key must be 32 bytes");
  }
  if (registry_.has_active(subject, org_, now_ms)) {
    raise(ErrorCode::duplicate_subject,
          "subject already holds an active certificate: " + subject);
  }
  Certificate cert;
  cert.subject = subject;
  cert.org = org_;
  cert.role = role;
  cert.public_key = subject_public_key;
  cert.issuer = name_;
  cert.serial = ++last_serial_;
  cert.not_after = now_ms + validity_ms;
  cert.signature = crypto::sign(keys_.private_key, cert.signing_bytes());
  registry_.register_member(cert);
  return cert;
}

Certificate Ca::issue_self(uint64_t validity_ms, uint64_t now_ms) {
  return issue(name_, Role::admin, keys_.public_key, validity_ms, now_ms);
}

json Ca::to_json() const {
  return json{{"name", name_},
              {"org", org_},
              {"public_key", to_base64(keys_.public_key)},
              {"private_key", to_base64(keys_.private_key)},
              {"last_serial", last_serial_}};
}

Ca Ca::from_json(const json& j, MspRegistry& registry) {
  crypto::KeyPair kp;
  kp.public_key = from_base64(j.at("public_key").get<std::string>());
  kp.private_key = from_base64(j.at("private_key").get<std::string>());
  return Ca(j.at("name").get<std::string>(), j.at("org").get<std::string>(),
            registry, std::move(kp), j.at("last_serial").get<uint64_t>());
}

}  // namespace iotchain::identity
