// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/chaincode.hpp"

#include <algorithm>

#include "iotchain/errors.hpp"
#include "iotchain/rng.hpp"

namespace iotchain::chaincode {

SensorType sensor_type_from_string(std::string_view s) {
  if (s == "temperature") return SensorType::temperature;
  if (s == "humidity") return SensorType::humidity;
  if (s == "gas") return SensorType::gas;
  if (s == "motion") return SensorType::motion;
  if (s == "pressure") return SensorType::pressure;
  if (s == "camera_url") return SensorType::camera_url;
  if (s == "other") return SensorType::other;
  raise(ErrorCode::chaincode_error, "unknown sensor type: " + std::string(s));
}

const char* sensor_type_name(SensorType t) {
  switch (t) {
    case SensorType::temperature: return "temperature";
    case SensorType::humidity: return "humidity";
    case SensorType::gas: return "gas";
    case SensorType::motion: return "motion";
    case SensorType::pressure: return "pressure";
    case SensorType::camera_url: return "camera_url";
    case SensorType::other: return "other";
  }
  return "other";
}

json Asset::to_json() const {
  return json{{"asset_id", asset_id},
              {"device_id", device_id},
              {"sensor_type", sensor_type_name(sensor_type)},
              {"payload", canonical::bytes_field(payload)},
              {"checksum", checksum},
              {"version", canonical::uint_field(version)},
              {"created_tx", created_tx},
              {"updated_tx", updated_tx},
              {"owner_org", owner_org},
              {"timestamp", canonical::uint_field(timestamp)}};
}

Asset Asset::from_json(const json& j) {
  Asset a;
  a.asset_id = j.at("asset_id").get<std::string>();
  a.device_id = j.at("device_id").get<std::string>();
  a.sensor_type = sensor_type_from_string(j.at("sensor_type").get<std::string>());
  a.payload = canonical::parse_bytes(j.at("payload"));
  a.checksum = j.at("checksum").get<std::string>();
  a.version = canonical::parse_uint(j.at("version"));
  a.created_tx = j.at("created_tx").get<std::string>();
  a.updated_tx = j.at("updated_tx").get<std::string>();
  a.owner_org = j.at("owner_org").get<std::string>();
  a.timestamp = canonical::parse_uint(j.at("timestamp"));
  return a;
}

json AccessPolicy::to_json() const {
  return json{{"subject", subject},
              {"resource", resource},
              {"rights", json(rights)},
              {"granted_by", granted_by},
              {"expires", canonical::uint_field(expires)}};
}

AccessPolicy AccessPolicy::from_json(const json& j) {
  AccessPolicy p;
  p.subject = j.at("subject").get<std::string>();
  p.resource = j.at("resource").get<std::string>();
  for (const auto& r : j.at("rights")) p.rights.insert(r.get<std::string>());
  p.granted_by = j.at("granted_by").get<std::string>();
  p.expires = canonical::parse_uint(j.at("expires"));
  return p;
}

json DeviceRecord::to_json() const {
  return json{{"device_id", device_id},
              {"public_key", canonical::bytes_field(public_key)},
              {"owner_org", owner_org},
              {"registered_tx", registered_tx},
              {"topics", json(topics)}};
}

DeviceRecord DeviceRecord::from_json(const json& j) {
  DeviceRecord d;
  d.device_id = j.at("device_id").get<std::string>();
  d.public_key = canonical::parse_bytes(j.at("public_key"));
  d.owner_org = j.at("owner_org").get<std::string>();
  d.registered_tx = j.at("registered_tx").get<std::string>();
  for (const auto& t : j.at("topics")) d.topics.push_back(t.get<std::string>());
  return d;
}

json ChallengeRecord::to_json() const {
  return json{{"challenge_id", challenge_id},
              {"nonce", canonical::bytes_field(nonce)},
              {"subject", subject},
              {"issued_at", canonical::uint_field(issued_at)},
              {"ttl_ms", canonical::uint_field(ttl_ms)},
              {"used", used}};
}

ChallengeRecord ChallengeRecord::from_json(const json& j) {
  ChallengeRecord c;
  c.challenge_id = j.at("challenge_id").get<std::string>();
  c.nonce = canonical::parse_bytes(j.at("nonce"));
  c.subject = j.at("subject").get<std::string>();
  c.issued_at = canonical::parse_uint(j.at("issued_at"));
  c.ttl_ms = canonical::parse_uint(j.at("ttl_ms"));
  c.used = j.at("used").get<bool>();
  return c;
}

std::string asset_key(const std::string& asset_id) { return "asset/" + asset_id; }
std::string device_key(const std::string& device_id) { return "dev/" + device_id; }
std::string policy_key(const std::string& subject, const std::string& resource) {
  return "pol/" + subject + "/" + resource;
}
std::string challenge_key(const std::string& challenge_id) {
  return "chal/" + challenge_id;
}
std::string version_key(const std::string& asset_id, uint64_t version) {
  return "ver/" + asset_id + "/" + std::to_string(version);
}
std::string tx_asset_key(const std::string& tx_id) { return "txasset/" + tx_id; }
std::string device_type_key(const std::string& device_id, SensorType type) {
  return "devasset/" + device_id + "/" + sensor_type_name(type);
}

namespace {

using txflow::ChaincodeContext;

const std::set<std::string> kKnownRights = {"read", "write", "subscribe", "publish"};

const Bytes& need(const std::vector<Bytes>& args, size_t index, const char* what) {
  if (index >= args.size()) {
    raise(ErrorCode::chaincode_error, std::string("missing argument: ") + what);
  }
  return args[index];
}

std::string need_str(const std::vector<Bytes>& args, size_t index, const char* what) {
  return string_of(need(args, index, what));
}

uint64_t need_uint(const std::vector<Bytes>& args, size_t index, const char* what) {
  std::string s = need_str(args, index, what);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    raise(ErrorCode::chaincode_error,
          std::string(what) + " must be a decimal integer, got: " + s);
  }
}

std::string require_uuid(const std::string& id) {
  if (!is_uuid(id)) {
    raise(ErrorCode::malformed_uuid, "not a UUID: " + id);
  }
  std::string lower = id;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower;
}

std::optional<json> get_json(ChaincodeContext& ctx, const std::string& key) {
  auto raw = ctx.get(key);
  if (!raw) return std::nullopt;
  return json::parse(string_of(*raw));
}

void put_json(ChaincodeContext& ctx, const std::string& key, const json& doc) {
  ctx.put(key, canonical::dump_bytes(doc));
}

bool holds_right(ChaincodeContext& ctx, const std::string& subject,
                 const std::string& resource, const std::string& right,
                 uint64_t now_ms) {
  auto doc = get_json(ctx, policy_key(subject, resource));
  if (!doc) return false;
  AccessPolicy pol = AccessPolicy::from_json(*doc);
  return pol.live_at(now_ms) && pol.rights.count(right) > 0;
}

bool can_read_asset(ChaincodeContext& ctx, const Asset& asset, uint64_t now_ms) {
  const identity::Certificate& caller = ctx.creator();
  if (caller.subject == asset.device_id) return true;
  if (caller.role == identity::Role::admin && caller.org == asset.owner_org) {
    return true;
  }
  return holds_right(ctx, caller.subject, asset.device_id, "read", now_ms);
}

Asset load_asset(ChaincodeContext& ctx, const std::string& asset_id) {
  auto doc = get_json(ctx, asset_key(asset_id));
  if (!doc) raise(ErrorCode::not_found, "no asset " + asset_id);
  return Asset::from_json(*doc);
}

Asset load_readable_asset(ChaincodeContext& ctx, const std::string& asset_id) {
  Asset asset = load_asset(ctx, asset_id);
  if (!can_read_asset(ctx, asset, ctx.chain_time())) {
    raise(ErrorCode::unauthorized,
          ctx.creator().subject + " may not read assets of " + asset.device_id);
  }
  return asset;
}

std::vector<AccessPolicy> grants_for(ChaincodeContext& ctx,
                                     const std::string& subject) {
  std::vector<AccessPolicy> out;
  std::string prefix = "pol/" + subject + "/";
  for (const auto& [key, value, version] :
       ctx.range(prefix, ledger::prefix_end(prefix))) {
    (void)key;
    (void)version;
    out.push_back(AccessPolicy::from_json(json::parse(string_of(value))));
  }
  return out;
}

Bytes store_asset(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string asset_id = require_uuid(need_str(args, 0, "asset_id"));
  std::string device_id = need_str(args, 1, "device_id");
  SensorType type = sensor_type_from_string(need_str(args, 2, "sensor_type"));
  Bytes payload = from_base64(need_str(args, 3, "payload_b64"));
  uint64_t timestamp = need_uint(args, 4, "timestamp");

  auto dev_doc = get_json(ctx, device_key(device_id));
  if (!dev_doc) {
    raise(ErrorCode::unauthorized, "device " + device_id + " is not registered");
  }
  DeviceRecord device = DeviceRecord::from_json(*dev_doc);

  const identity::Certificate& caller = ctx.creator();
  bool is_device = caller.subject == device_id;
  if (!is_device && !holds_right(ctx, caller.subject, device_id, "write", timestamp)) {
    raise(ErrorCode::unauthorized,
          caller.subject + " may not write assets for " + device_id);
  }

  Asset asset;
  auto existing = get_json(ctx, asset_key(asset_id));
  if (existing) {
    asset = Asset::from_json(*existing);
    if (asset.device_id != device_id) {
      raise(ErrorCode::unauthorized,
            "asset " + asset_id + " belongs to device " + asset.device_id);
    }
    asset.version += 1;
  } else {
    asset.asset_id = asset_id;
    asset.device_id = device_id;
    asset.sensor_type = type;
    asset.version = 1;
    asset.created_tx = ctx.tx_id();
    asset.owner_org = device.owner_org;
  }
  asset.payload = payload;
  asset.checksum = crypto::sha256_hex(payload);
  asset.updated_tx = ctx.tx_id();
  asset.timestamp = timestamp;

  json doc = asset.to_json();
  put_json(ctx, asset_key(asset_id), doc);
  put_json(ctx, version_key(asset_id, asset.version), doc);
  put_json(ctx, tx_asset_key(ctx.tx_id()),
           json{{"asset_id", asset_id},
                {"version", canonical::uint_field(asset.version)}});
  put_json(ctx, device_type_key(device_id, asset.sensor_type),
           json{{"asset_id", asset_id}});
  return canonical::dump_bytes(doc);
}

Bytes query_checksum(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string asset_id = need_str(args, 0, "asset_id");
  Asset asset = load_readable_asset(ctx, asset_id);
  return canonical::dump_bytes(
      json{{"asset_id", asset.asset_id}, {"checksum", asset.checksum}});
}

// Resolves tx_id -> (asset_id, version) through the snapshot index written by
// store_asset, then loads that exact version snapshot.
Asset load_asset_at_tx(ChaincodeContext& ctx, const std::string& tx_id) {
  auto index = get_json(ctx, tx_asset_key(tx_id));
  if (!index) raise(ErrorCode::not_found, "no asset write in transaction " + tx_id);
  std::string asset_id = index->at("asset_id").get<std::string>();
  uint64_t version = canonical::parse_uint(index->at("version"));
  auto doc = get_json(ctx, version_key(asset_id, version));
  if (!doc) raise(ErrorCode::not_found, "missing version snapshot for " + tx_id);
  Asset snapshot = Asset::from_json(*doc);
  if (!can_read_asset(ctx, snapshot, ctx.chain_time())) {
    raise(ErrorCode::unauthorized,
          ctx.creator().subject + " may not read assets of " + snapshot.device_id);
  }
  return snapshot;
}

Bytes get_asset_by_txid(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  Asset snapshot = load_asset_at_tx(ctx, need_str(args, 0, "tx_id"));
  return canonical::dump_bytes(snapshot.to_json());
}

Bytes get_version_by_txid(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  Asset snapshot = load_asset_at_tx(ctx, need_str(args, 0, "tx_id"));
  return canonical::dump_bytes(
      json{{"asset_id", snapshot.asset_id},
           {"version", canonical::uint_field(snapshot.version)}});
}

Bytes get_lineage(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string asset_id = need_str(args, 0, "asset_id");
  Asset current = load_readable_asset(ctx, asset_id);
  json out = json::array();
  for (uint64_t v = 1; v <= current.version; ++v) {
    auto doc = get_json(ctx, version_key(asset_id, v));
    if (!doc) {
      raise(ErrorCode::not_found,
            "missing version snapshot " + std::to_string(v) + " of " + asset_id);
    }
    Asset snapshot = Asset::from_json(*doc);
    out.push_back(json{{"version", canonical::uint_field(v)},
                       {"tx_id", snapshot.updated_tx},
                       {"checksum", snapshot.checksum},
                       {"timestamp", canonical::uint_field(snapshot.timestamp)}});
  }
  return canonical::dump_bytes(out);
}

Bytes get_history(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string asset_id = need_str(args, 0, "asset_id");
  load_readable_asset(ctx, asset_id);  // existence + read right
  json out = json::array();
  for (const auto& entry : ctx.history(asset_key(asset_id))) {
    json item{{"tx_id", entry.tx_id},
              {"timestamp", canonical::uint_field(entry.timestamp)},
              {"version", entry.version.canonical_json()},
              {"deleted", !entry.value.has_value()}};
    item["asset"] =
        entry.value ? json::parse(string_of(*entry.value)) : json(nullptr);
    out.push_back(std::move(item));
  }
  return canonical::dump_bytes(out);
}

Bytes get_asset_version(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string asset_id = need_str(args, 0, "asset_id");
  uint64_t version = need_uint(args, 1, "version");
  auto doc = get_json(ctx, version_key(asset_id, version));
  if (!doc) {
    raise(ErrorCode::not_found,
          "no version " + std::to_string(version) + " of asset " + asset_id);
  }
  Asset snapshot = Asset::from_json(*doc);
  if (!can_read_asset(ctx, snapshot, ctx.chain_time())) {
    raise(ErrorCode::unauthorized,
          ctx.creator().subject + " may not read assets of " + snapshot.device_id);
  }
  return canonical::dump_bytes(snapshot.to_json());
}

Bytes key_range_query(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string start_id = need_str(args, 0, "start_id");
  std::string end_id = need_str(args, 1, "end_id");
  if (start_id > end_id) {
    raise(ErrorCode::invalid_range, "start_id exceeds end_id");
  }
  json out = json::array();
  uint64_t now = ctx.chain_time();
  for (const auto& [key, value, version] :
       ctx.range(asset_key(start_id), asset_key(end_id))) {
    (void)key;
    (void)version;
    Asset asset = Asset::from_json(json::parse(string_of(value)));
    if (!can_read_asset(ctx, asset, now)) continue;  // caller-readable only
    out.push_back(asset.to_json());
  }
  return canonical::dump_bytes(out);
}

Bytes get_sensor_info(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string device_id = need_str(args, 0, "device_id");
  auto dev_doc = get_json(ctx, device_key(device_id));
  if (!dev_doc) raise(ErrorCode::not_found, "no device " + device_id);
  DeviceRecord device = DeviceRecord::from_json(*dev_doc);

  const identity::Certificate& caller = ctx.creator();
  bool allowed =
      caller.subject == device_id ||
      (caller.role == identity::Role::admin && caller.org == device.owner_org) ||
      holds_right(ctx, caller.subject, device_id, "read", ctx.chain_time());
  if (!allowed) {
    raise(ErrorCode::unauthorized,
          caller.subject + " may not read sensor info of " + device_id);
  }

  json latest = json::object();
  std::string prefix = "devasset/" + device_id + "/";
  for (const auto& [key, value, version] :
       ctx.range(prefix, ledger::prefix_end(prefix))) {
    (void)version;
    std::string type = key.substr(prefix.size());
    std::string asset_id =
        json::parse(string_of(value)).at("asset_id").get<std::string>();
    auto asset_doc = get_json(ctx, asset_key(asset_id));
    if (asset_doc) latest[type] = *asset_doc;
  }
  return canonical::dump_bytes(
      json{{"device", device.to_json()}, {"latest", latest}});
}

Bytes register_device(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string device_id = need_str(args, 0, "device_id");
  Bytes public_key = from_base64(need_str(args, 1, "public_key_b64"));
  json topics = json::parse(need_str(args, 2, "topics_json"));

  const identity::Certificate& caller = ctx.creator();
  if (caller.role != identity::Role::admin) {
    raise(ErrorCode::unauthorized, "only admins register devices");
  }
  if (ctx.get(device_key(device_id))) {
    raise(ErrorCode::duplicate_device, "device already registered: " + device_id);
  }
  DeviceRecord device;
  device.device_id = device_id;
  device.public_key = public_key;
  device.owner_org = caller.org;
  device.registered_tx = ctx.tx_id();
  for (const auto& t : topics) device.topics.push_back(t.get<std::string>());
  put_json(ctx, device_key(device_id), device.to_json());
  return canonical::dump_bytes(device.to_json());
}

Bytes grant(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string subject = need_str(args, 0, "subject");
  std::string resource = need_str(args, 1, "resource");
  std::string rights_csv = need_str(args, 2, "rights");
  uint64_t expires = need_uint(args, 3, "expires");

  const identity::Certificate& caller = ctx.creator();
  if (caller.role != identity::Role::admin) {
    raise(ErrorCode::unauthorized, "only admins grant rights");
  }

  AccessPolicy policy;
  policy.subject = subject;
  policy.resource = resource;
  policy.granted_by = caller.subject;
  policy.expires = expires;
  size_t pos = 0;
  while (pos <= rights_csv.size()) {
    size_t comma = rights_csv.find(',', pos);
    std::string right = rights_csv.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!right.empty()) {
      if (!kKnownRights.count(right)) {
        raise(ErrorCode::chaincode_error, "unknown right: " + right);
      }
      policy.rights.insert(right);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (policy.rights.empty()) {
    raise(ErrorCode::chaincode_error, "grant requires at least one right");
  }
  put_json(ctx, policy_key(subject, resource), policy.to_json());
  return canonical::dump_bytes(policy.to_json());
}

Bytes revoke_grant(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string subject = need_str(args, 0, "subject");
  std::string resource = need_str(args, 1, "resource");
  if (ctx.creator().role != identity::Role::admin) {
    raise(ErrorCode::unauthorized, "only admins revoke rights");
  }
  ctx.del(policy_key(subject, resource));
  return canonical::dump_bytes(json{{"subject", subject}, {"resource", resource}});
}

Bytes issue_challenge(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string subject = need_str(args, 0, "subject");
  uint64_t now = need_uint(args, 1, "now");

  // The nonce travels back in this endorsement's response payload, so only
  // the requesting client sees it: subjects fetch their own challenges.
  if (ctx.creator().subject != subject) {
    raise(ErrorCode::unauthorized, "challenges are issued to their own subject");
  }
  auto cert = ctx.msp().member(subject);
  if (!cert) raise(ErrorCode::unknown_subject, "no certificate for " + subject);
  if (ctx.msp().validate(*cert, now) != identity::CertStatus::valid) {
    raise(ErrorCode::unauthorized, "subject has no active certificate");
  }
  bool has_pubsub = false;
  for (const auto& g : grants_for(ctx, subject)) {
    if (g.live_at(now) && (g.rights.count("subscribe") || g.rights.count("publish"))) {
      has_pubsub = true;
      break;
    }
  }
  if (!has_pubsub) {
    raise(ErrorCode::unauthorized, subject + " holds no subscribe or publish rights");
  }

  // Challenge id and nonce derive from the tx id: deterministic across
  // endorsers, unpredictable through the proposal nonce, seedable through the
  // client's rng.
  Bytes tx_bytes = from_hex(ctx.tx_id());
  Bytes id_seed = tx_bytes;
  const std::string id_tag = "chal-id";
  id_seed.insert(id_seed.end(), id_tag.begin(), id_tag.end());
  crypto::Digest id_digest = crypto::sha256(id_seed);

  Bytes nonce_seed = tx_bytes;
  const std::string nonce_tag = "chal-nonce";
  nonce_seed.insert(nonce_seed.end(), nonce_tag.begin(), nonce_tag.end());

  ChallengeRecord record;
  record.challenge_id = uuid_from_bytes(id_digest.data());
  record.nonce = crypto::digest_bytes(crypto::sha256(nonce_seed));
  record.subject = subject;
  record.issued_at = now;
  record.ttl_ms = kChallengeTtlMs;
  record.used = false;

  if (ctx.get(challenge_key(record.challenge_id))) {
    raise(ErrorCode::chaincode_error, "challenge id collision");
  }
  put_json(ctx, challenge_key(record.challenge_id), record.to_json());
  return canonical::dump_bytes(record.to_json());
}

json rights_payload(ChaincodeContext& ctx, const std::string& subject, uint64_t now) {
  json rights = json::array();
  for (const auto& g : grants_for(ctx, subject)) {
    if (!g.live_at(now)) continue;
    rights.push_back(g.to_json());
  }
  return json{{"subject", subject}, {"rights", std::move(rights)}};
}

Bytes verify_challenge(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  std::string challenge_id = need_str(args, 0, "challenge_id");
  Bytes signature = from_base64(need_str(args, 1, "signature_b64"));
  uint64_t now = need_uint(args, 2, "now");

  auto doc = get_json(ctx, challenge_key(challenge_id));
  if (!doc) raise(ErrorCode::not_found, "no challenge " + challenge_id);
  ChallengeRecord record = ChallengeRecord::from_json(*doc);

  if (record.used) {
    raise(ErrorCode::already_used, "challenge already consumed");
  }
  if (now > record.issued_at + record.ttl_ms) {
    raise(ErrorCode::expired, "challenge expired");
  }
  auto cert = ctx.msp().member(record.subject);
  if (!cert) {
    raise(ErrorCode::unknown_subject, "no certificate for " + record.subject);
  }
  if (!crypto::verify(cert->public_key, record.nonce, signature)) {
    raise(ErrorCode::bad_signature, "challenge signature does not verify");
  }

  record.used = true;
  put_json(ctx, challenge_key(challenge_id), record.to_json());
  return canonical::dump_bytes(rights_payload(ctx, record.subject, now));
}

Bytes get_assets_from_batch(ChaincodeContext& ctx, const std::vector<Bytes>& args) {
  json uuids = json::parse(need_str(args, 0, "uuids_json"));
  if (!uuids.is_array()) {
    raise(ErrorCode::chaincode_error, "batch argument must be a JSON array");
  }
  json out = json::array();
  uint64_t now = ctx.chain_time();
  for (const auto& entry : uuids) {
    std::string asset_id = require_uuid(entry.get<std::string>());
    auto doc = get_json(ctx, asset_key(asset_id));
    if (!doc) {
      out.push_back(json(nullptr));
      continue;
    }
    Asset asset = Asset::from_json(*doc);
    if (!can_read_asset(ctx, asset, now)) {
      raise(ErrorCode::unauthorized,
            ctx.creator().subject + " may not read assets of " + asset.device_id);
    }
    out.push_back(asset.to_json());
  }
  return canonical::dump_bytes(out);
}

}  // namespace

Bytes dispatch(txflow::ChaincodeContext& ctx, const std::string& function,
               const std::vector<Bytes>& args) {
  if (function == "store_asset") return store_asset(ctx, args);
  if (function == "query_checksum") return query_checksum(ctx, args);
  if (function == "get_asset_by_txid") return get_asset_by_txid(ctx, args);
  if (function == "get_version_by_txid") return get_version_by_txid(ctx, args);
  if (function == "get_lineage") return get_lineage(ctx, args);
  if (function == "get_history") return get_history(ctx, args);
  if (function == "get_asset_version") return get_asset_version(ctx, args);
  if (function == "key_range_query") return key_range_query(ctx, args);
  if (function == "get_sensor_info") return get_sensor_info(ctx, args);
  if (function == "register_device") return register_device(ctx, args);
  if (function == "grant") return grant(ctx, args);
  if (function == "revoke_grant") return revoke_grant(ctx, args);
  if (function == "issue_challenge") return issue_challenge(ctx, args);
  if (function == "verify_challenge") return verify_challenge(ctx, args);
  if (function == "get_assets_from_batch") return get_assets_from_batch(ctx, args);
  raise(ErrorCode::chaincode_error, "unknown chaincode function: " + function);
}

void install(txflow::Network& network) {
  network.chaincodes()[kChaincodeId] = dispatch;
}

std::vector<Bytes> store_asset_args(const std::string& asset_id,
                                    const std::string& device_id, SensorType type,
                                    const Bytes& payload, uint64_t timestamp) {
  return {bytes_of(asset_id), bytes_of(device_id), bytes_of(sensor_type_name(type)),
          bytes_of(to_base64(payload)), bytes_of(std::to_string(timestamp))};
}

std::vector<Bytes> query_checksum_args(const std::string& asset_id) {
  return {bytes_of(asset_id)};
}

std::vector<Bytes> get_asset_by_txid_args(const std::string& tx_id) {
  return {bytes_of(tx_id)};
}

std::vector<Bytes> get_version_by_txid_args(const std::string& tx_id) {
  return {bytes_of(tx_id)};
}

std::vector<Bytes> get_lineage_args(const std::string& asset_id) {
  return {bytes_of(asset_id)};
}

std::vector<Bytes> get_history_args(const std::string& asset_id) {
  return {bytes_of(asset_id)};
}

std::vector<Bytes> get_asset_version_args(const std::string& asset_id,
                                          uint64_t version) {
  return {bytes_of(asset_id), bytes_of(std::to_string(version))};
}

std::vector<Bytes> key_range_query_args(const std::string& start_id,
                                        const std::string& end_id) {
  return {bytes_of(start_id), bytes_of(end_id)};
}

std::vector<Bytes> get_sensor_info_args(const std::string& device_id) {
  return {bytes_of(device_id)};
}

std::vector<Bytes> register_device_args(const std::string& device_id,
                                        const Bytes& public_key,
                                        const std::vector<std::string>& topics) {
  return {bytes_of(device_id), bytes_of(to_base64(public_key)),
          bytes_of(json(topics).dump())};
}

std::vector<Bytes> grant_args(const std::string& subject, const std::string& resource,
                              const std::set<std::string>& rights, uint64_t expires) {
  std::string csv;
  for (const auto& r : rights) {
    if (!csv.empty()) csv += ",";
    csv += r;
  }
  return {bytes_of(subject), bytes_of(resource), bytes_of(csv),
          bytes_of(std::to_string(expires))};
}

std::vector<Bytes> revoke_grant_args(const std::string& subject,
                                     const std::string& resource) {
  return {bytes_of(subject), bytes_of(resource)};
}

std::vector<Bytes> issue_challenge_args(const std::string& subject, uint64_t now_ms) {
  return {bytes_of(subject), bytes_of(std::to_string(now_ms))};
}

std::vector<Bytes> verify_challenge_args(const std::string& challenge_id,
                                         const Bytes& signature, uint64_t now_ms) {
  return {bytes_of(challenge_id), bytes_of(to_base64(signature)),
          bytes_of(std::to_string(now_ms))};
}

std::vector<Bytes> get_assets_from_batch_args(const std::vector<std::string>& uuids) {
  return {bytes_of(json(uuids).dump())};
}

}  // namespace iotchain::chaincode
