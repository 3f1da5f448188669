// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "iotchain/txflow.hpp"

namespace iotchain::chaincode {

// The single built-in contract: sensor asset storage and provenance queries,
// device/user registration, permission grants, and the challenge flow that
// gates broker connections.
inline constexpr const char* kChaincodeId = "iotcc";
inline constexpr uint64_t kChallengeTtlMs = 60'000;

enum class SensorType {
  temperature,
  humidity,
  gas,
  motion,
  pressure,
  camera_url,
  other,
};

SensorType sensor_type_from_string(std::string_view s);  // chaincode_error
const char* sensor_type_name(SensorType t);

struct Asset {
  std::string asset_id;  // UUID
  std::string device_id;
  SensorType sensor_type = SensorType::other;
  Bytes payload;
  std::string checksum;  // hex sha256 of payload
  uint64_t version = 1;
  std::string created_tx;
  std::string updated_tx;
  std::string owner_org;
  uint64_t timestamp = 0;  // client-supplied, ms

  json to_json() const;
  static Asset from_json(const json& j);
};

struct AccessPolicy {
  std::string subject;
  std::string resource;  // device id or topic filter
  std::set<std::string> rights;  // subset of read/write/subscribe/publish
  std::string granted_by;
  uint64_t expires = 0;  // 0: never

  json to_json() const;
  static AccessPolicy from_json(const json& j);
  bool live_at(uint64_t now_ms) const { return expires == 0 || now_ms <= expires; }
};

struct DeviceRecord {
  std::string device_id;
  Bytes public_key;
  std::string owner_org;
  std::string registered_tx;
  std::vector<std::string> topics;

  json to_json() const;
  static DeviceRecord from_json(const json& j);
};

struct ChallengeRecord {
  std::string challenge_id;  // UUID
  Bytes nonce;               // 32 bytes
  std::string subject;
  uint64_t issued_at = 0;
  uint64_t ttl_ms = kChallengeTtlMs;
  bool used = false;

  json to_json() const;
  static ChallengeRecord from_json(const json& j);
};

// State key layout.
std::string asset_key(const std::string& asset_id);
std::string device_key(const std::string& device_id);
std::string policy_key(const std::string& subject, const std::string& resource);
std::string challenge_key(const std::string& challenge_id);
std::string version_key(const std::string& asset_id, uint64_t version);
std::string tx_asset_key(const std::string& tx_id);
std::string device_type_key(const std::string& device_id, SensorType type);

// Contract entry point, invoked by name with positional string/base64 args.
Bytes dispatch(txflow::ChaincodeContext& ctx, const std::string& function,
               const std::vector<Bytes>& args);

// Registers the contract on a network under kChaincodeId.
void install(txflow::Network& network);

// Client-side argument builders matching dispatch's positional encoding.
std::vector<Bytes> store_asset_args(const std::string& asset_id,
                                    const std::string& device_id, SensorType type,
                                    const Bytes& payload, uint64_t timestamp);
std::vector<Bytes> query_checksum_args(const std::string& asset_id);
std::vector<Bytes> get_asset_by_txid_args(const std::string& tx_id);
std::vector<Bytes> get_version_by_txid_args(const std::string& tx_id);
std::vector<Bytes> get_lineage_args(const std::string& asset_id);
std::vector<Bytes> get_history_args(const std::string& asset_id);
std::vector<Bytes> get_asset_version_args(const std::string& asset_id,
                                          uint64_t version);
std::vector<Bytes> key_range_query_args(const std::string& start_id,
                                        const std::string& end_id);
std::vector<Bytes> get_sensor_info_args(const std::string& device_id);
std::vector<Bytes> register_device_args(const std::string& device_id,
                                        const Bytes& public_key,
                                        const std::vector<std::string>& topics);
std::vector<Bytes> grant_args(const std::string& subject, const std::string& resource,
                              const std::set<std::string>& rights, uint64_t expires);
std::vector<Bytes> revoke_grant_args(const std::string& subject,
                                     const std::string& resource);
std::vector<Bytes> issue_challenge_args(const std::string& subject, uint64_t now_ms);
std::vector<Bytes> verify_challenge_args(const std::string& challenge_id,
                                         const Bytes& signature, uint64_t now_ms);
std::vector<Bytes> get_assets_from_batch_args(const std::vector<std::string>& uuids);

}  // namespace iotchain::chaincode
