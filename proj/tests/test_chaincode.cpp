// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <doctest.h>

#include <sodium.h>

#include "iotchain/errors.hpp"
#include "test_support.hpp"

using namespace iotchain;
using namespace iotchain::test;
using namespace iotchain::chaincode;

namespace {

constexpr uint64_t kTs = 1700000000000ull;

ErrorCode code_of(std::function<void()> fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

// Independent digest oracle (bypasses crypto::sha256).
std::string sha256_oracle(const std::string& payload) {
  unsigned char digest[32];
  crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(payload.data()),
                     payload.size());
  char hex[65];
  sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
  return hex;
}

}  // namespace

TEST_CASE("store_asset computes checksum and versions") {
  TestNet t;
  std::string id = t.rng.uuid4();
  auto result =
      t.invoke(t.device, "store_asset",
               store_asset_args(id, t.device_id, SensorType::temperature,
                                bytes_of("21.5"), kTs));
  CHECK(result.flag == ledger::TxFlag::valid);
  json asset = json::parse(string_of(result.response));
  CHECK(asset.at("version") == "1");
  CHECK(asset.at("checksum") == sha256_oracle("21.5"));
  CHECK(asset.at("owner_org") == "IoT");
  CHECK(asset.at("created_tx") == result.tx_id);

  auto second =
      t.invoke(t.device, "store_asset",
               store_asset_args(id, t.device_id, SensorType::temperature,
                                bytes_of("22.0"), kTs + 60000));
  json updated = json::parse(string_of(second.response));
  CHECK(updated.at("version") == "2");
  CHECK(updated.at("checksum") == sha256_oracle("22.0"));
  CHECK(updated.at("created_tx") == result.tx_id);  // creation pinned
  CHECK(updated.at("updated_tx") == second.tx_id);
}

TEST_CASE("store_asset authorization") {
  TestNet t;
  std::string id = t.rng.uuid4();
  auto outsider = t.net->issue_identity("mallory@Org1", "Org1",
                                        identity::Role::client);

  SUBCASE("caller is neither the device nor a write grantee") {
    CHECK(code_of([&] {
            t.invoke(outsider, "store_asset",
                     store_asset_args(id, t.device_id, SensorType::gas,
                                      bytes_of("x"), kTs));
          }) == ErrorCode::unauthorized);
  }

  SUBCASE("write grant admits another identity") {
    t.invoke(t.admin_iot, "grant",
             grant_args("mallory@Org1", t.device_id, {"write"}, 0));
    auto result = t.invoke(outsider, "store_asset",
                           store_asset_args(id, t.device_id, SensorType::gas,
                                            bytes_of("x"), kTs));
    CHECK(result.flag == ledger::TxFlag::valid);
  }

  SUBCASE("expired grant does not admit") {
    t.invoke(t.admin_iot, "grant",
             grant_args("mallory@Org1", t.device_id, {"write"}, kTs - 1));
    CHECK(code_of([&] {
            t.invoke(outsider, "store_asset",
                     store_asset_args(id, t.device_id, SensorType::gas,
                                      bytes_of("x"), kTs));
          }) == ErrorCode::unauthorized);
  }

  SUBCASE("unregistered device") {
    auto ghost = t.net->issue_identity("dev-ghost", "IoT", identity::Role::device);
    CHECK(code_of([&] {
            t.invoke(ghost, "store_asset",
                     store_asset_args(id, "dev-ghost", SensorType::gas,
                                      bytes_of("x"), kTs));
          }) == ErrorCode::unauthorized);
  }

  SUBCASE("malformed uuid") {
    CHECK(code_of([&] {
            t.invoke(t.device, "store_asset",
                     store_asset_args("not-a-uuid", t.device_id, SensorType::gas,
                                      bytes_of("x"), kTs));
          }) == ErrorCode::malformed_uuid);
  }
}

TEST_CASE("query_checksum requires read rights and matches the payload") {
  TestNet t;
  std::string id = t.rng.uuid4();
  t.invoke(t.device, "store_asset",
           store_asset_args(id, t.device_id, SensorType::humidity,
                            bytes_of("62%"), kTs));

  json checksum = t.query(t.device, "query_checksum", query_checksum_args(id));
  CHECK(checksum.at("checksum") == sha256_oracle("62%"));

  auto reader = t.net->issue_identity("reader@Org1", "Org1", identity::Role::client);
  CHECK(code_of([&] { t.query(reader, "query_checksum", query_checksum_args(id)); }) ==
        ErrorCode::unauthorized);
  t.invoke(t.admin_iot, "grant", grant_args("reader@Org1", t.device_id, {"read"}, 0));
  CHECK(t.query(reader, "query_checksum", query_checksum_args(id)).at("checksum") ==
        sha256_oracle("62%"));

  CHECK(code_of([&] {
          t.query(t.device, "query_checksum", query_checksum_args(t.rng.uuid4()));
        }) == ErrorCode::not_found);
}

TEST_CASE("tx-id queries return historical snapshots") {
  TestNet t;
  std::string id = t.rng.uuid4();
  std::vector<txflow::CommitResult> commits;
  for (int v = 1; v <= 3; ++v) {
    commits.push_back(t.invoke(
        t.device, "store_asset",
        store_asset_args(id, t.device_id, SensorType::pressure,
                         bytes_of("p" + std::to_string(v)), kTs + v)));
  }

  json middle = t.query(t.device, "get_asset_by_txid",
                        get_asset_by_txid_args(commits[1].tx_id));
  CHECK(middle.at("version") == "2");
  CHECK(string_of(from_base64(middle.at("payload").get<std::string>())) == "p2");

  json version = t.query(t.device, "get_version_by_txid",
                         get_version_by_txid_args(commits[1].tx_id));
  CHECK(version.at("version") == "2");

  CHECK(code_of([&] {
          t.query(t.device, "get_asset_by_txid", get_asset_by_txid_args("feed"));
        }) == ErrorCode::not_found);
}

TEST_CASE("lineage and history agree") {
  TestNet t;
  std::string id = t.rng.uuid4();
  for (int v = 1; v <= 3; ++v) {
    t.invoke(t.device, "store_asset",
             store_asset_args(id, t.device_id, SensorType::motion,
                              bytes_of("m" + std::to_string(v)), kTs + v));
  }

  json lineage = t.query(t.device, "get_lineage", get_lineage_args(id));
  REQUIRE(lineage.size() == 3);
  for (int v = 0; v < 3; ++v) {
    CHECK(lineage[v].at("version") == std::to_string(v + 1));
  }

  // cross-module oracle: lineage length equals the ledger history of the key
  auto history = t.net->channel(TestNet::kChannel).history_query(asset_key(id));
  CHECK(history.size() == lineage.size());
  for (size_t i = 0; i < history.size(); ++i) {
    CHECK(history[i].tx_id == lineage[i].at("tx_id"));
  }

  json cc_history = t.query(t.device, "get_history", get_history_args(id));
  REQUIRE(cc_history.size() == 3);
  CHECK(cc_history[0].at("tx_id") == lineage[0].at("tx_id"));
  CHECK_FALSE(cc_history[0].at("deleted").get<bool>());

  CHECK(code_of([&] {
          t.query(t.device, "get_lineage", get_lineage_args(t.rng.uuid4()));
        }) == ErrorCode::not_found);
}

TEST_CASE("get_asset_version bounds") {
  TestNet t;
  std::string id = t.rng.uuid4();
  t.invoke(t.device, "store_asset",
           store_asset_args(id, t.device_id, SensorType::gas, bytes_of("g"), kTs));
  json v1 = t.query(t.device, "get_asset_version", get_asset_version_args(id, 1));
  CHECK(v1.at("version") == "1");
  CHECK(code_of([&] {
          t.query(t.device, "get_asset_version", get_asset_version_args(id, 2));
        }) == ErrorCode::not_found);
}

TEST_CASE("key_range_query returns caller-readable assets in order") {
  TestNet t;
  // a second device whose assets the caller cannot read
  auto dev2 = t.net->issue_identity("dev-2", "IoT", identity::Role::device);
  t.invoke(t.admin_iot, "register_device",
           register_device_args("dev-2", dev2.cert.public_key, {}));

  std::vector<std::string> mine, theirs;
  for (int i = 0; i < 4; ++i) {
    std::string id = t.rng.uuid4();
    mine.push_back(id);
    t.invoke(t.device, "store_asset",
             store_asset_args(id, t.device_id, SensorType::other,
                              bytes_of("mine"), kTs));
  }
  for (int i = 0; i < 3; ++i) {
    std::string id = t.rng.uuid4();
    theirs.push_back(id);
    t.invoke(dev2, "store_asset",
             store_asset_args(id, "dev-2", SensorType::other, bytes_of("theirs"),
                              kTs));
  }

  json all = t.query(t.device, "key_range_query", key_range_query_args("0", "g"));
  CHECK(all.size() == mine.size());  // dev-2 assets filtered out
  for (size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].at("asset_id").get<std::string>() <
          all[i].at("asset_id").get<std::string>());
  }

  json admin_view =
      t.query(t.admin_iot, "key_range_query", key_range_query_args("0", "g"));
  CHECK(admin_view.size() == mine.size() + theirs.size());

  CHECK(code_of([&] {
          t.query(t.device, "key_range_query", key_range_query_args("z", "a"));
        }) == ErrorCode::invalid_range);
}

TEST_CASE("get_sensor_info returns the latest asset per sensor type") {
  TestNet t;
  std::string temp1 = t.rng.uuid4(), temp2 = t.rng.uuid4(), cam = t.rng.uuid4();
  t.invoke(t.device, "store_asset",
           store_asset_args(temp1, t.device_id, SensorType::temperature,
                            bytes_of("20.0"), kTs));
  t.invoke(t.device, "store_asset",
           store_asset_args(cam, t.device_id, SensorType::camera_url,
                            bytes_of("https://edge.local/stream/7"), kTs + 1));
  t.invoke(t.device, "store_asset",
           store_asset_args(temp2, t.device_id, SensorType::temperature,
                            bytes_of("20.5"), kTs + 2));

  json info = t.query(t.device, "get_sensor_info", get_sensor_info_args(t.device_id));
  CHECK(info.at("device").at("device_id") == t.device_id);
  CHECK(info.at("latest").at("temperature").at("asset_id") == temp2);
  CHECK(string_of(from_base64(
            info.at("latest").at("camera_url").at("payload").get<std::string>())) ==
        "https://edge.local/stream/7");

  CHECK(code_of([&] {
          t.query(t.device, "get_sensor_info", get_sensor_info_args("dev-none"));
        }) == ErrorCode::not_found);
  auto outsider = t.net->issue_identity("nosy@Org2", "Org2", identity::Role::client);
  CHECK(code_of([&] {
          t.query(outsider, "get_sensor_info", get_sensor_info_args(t.device_id));
        }) == ErrorCode::unauthorized);
}

TEST_CASE("register_device and grants enforce the admin role") {
  TestNet t;
  auto user = t.net->issue_identity("user@Org2", "Org2", identity::Role::client);
  auto dev3 = t.net->issue_identity("dev-3", "IoT", identity::Role::device);

  CHECK(code_of([&] {
          t.invoke(user, "register_device",
                   register_device_args("dev-3", dev3.cert.public_key, {}));
        }) == ErrorCode::unauthorized);
  t.invoke(t.admin_iot, "register_device",
           register_device_args("dev-3", dev3.cert.public_key, {"t/3"}));
  CHECK(code_of([&] {
          t.invoke(t.admin_iot, "register_device",
                   register_device_args("dev-3", dev3.cert.public_key, {}));
        }) == ErrorCode::duplicate_device);

  CHECK(code_of([&] {
          t.invoke(user, "grant", grant_args("x", "y", {"read"}, 0));
        }) == ErrorCode::unauthorized);

  // grant overwrites any prior grant for (subject, resource)
  t.invoke(t.admin_iot, "grant",
           grant_args("user@Org2", t.device_id, {"read", "write"}, 0));
  t.invoke(t.admin_iot, "grant", grant_args("user@Org2", t.device_id, {"read"}, 0));
  auto entry = t.net->channel(TestNet::kChannel)
                   .state_get(policy_key("user@Org2", t.device_id));
  REQUIRE(entry.has_value());
  json pol = json::parse(string_of(entry->value));
  CHECK(pol.at("rights") == json::array({"read"}));
  CHECK(pol.at("granted_by") == "admin@IoT");

  t.invoke(t.admin_iot, "revoke_grant", revoke_grant_args("user@Org2", t.device_id));
  CHECK_FALSE(t.net->channel(TestNet::kChannel)
                  .state_get(policy_key("user@Org2", t.device_id))
                  .has_value());
}

TEST_CASE("challenge flow: issue, verify, one-time use") {
  TestNet t;
  auto sub = t.net->issue_identity("subscriber@Org1", "Org1", identity::Role::client);

  // no pub/sub rights yet
  CHECK(code_of([&] {
          t.invoke(sub, "issue_challenge",
                   issue_challenge_args("subscriber@Org1", kTs));
        }) == ErrorCode::unauthorized);

  t.invoke(t.admin_iot, "grant",
           grant_args("subscriber@Org1", "sensors/#", {"subscribe"}, 0));

  // only the subject itself may fetch its challenge
  CHECK(code_of([&] {
          t.invoke(t.admin_iot, "issue_challenge",
                   issue_challenge_args("subscriber@Org1", kTs));
        }) == ErrorCode::unauthorized);

  auto issued = t.invoke(sub, "issue_challenge",
                         issue_challenge_args("subscriber@Org1", kTs));
  json record = json::parse(string_of(issued.response));
  std::string challenge_id = record.at("challenge_id");
  Bytes nonce = from_base64(record.at("nonce").get<std::string>());
  CHECK(nonce.size() == 32);
  CHECK(record.at("used") == false);
  CHECK(is_uuid(challenge_id));

  SUBCASE("correct signature within ttl returns rights and consumes") {
    Bytes sig = crypto::sign(sub.keys.private_key, nonce);
    auto verified = t.invoke(sub, "verify_challenge",
                             verify_challenge_args(challenge_id, sig, kTs + 1000));
    json rights = json::parse(string_of(verified.response));
    CHECK(rights.at("subject") == "subscriber@Org1");
    REQUIRE(rights.at("rights").size() == 1);
    CHECK(rights.at("rights")[0].at("resource") == "sensors/#");

    // replay is refused
    CHECK(code_of([&] {
            t.invoke(sub, "verify_challenge",
                     verify_challenge_args(challenge_id, sig, kTs + 2000));
          }) == ErrorCode::already_used);
  }

  SUBCASE("wrong key") {
    auto other = t.net->issue_identity("other@Org2", "Org2", identity::Role::client);
    Bytes sig = crypto::sign(other.keys.private_key, nonce);
    CHECK(code_of([&] {
            t.invoke(sub, "verify_challenge",
                     verify_challenge_args(challenge_id, sig, kTs + 1000));
          }) == ErrorCode::bad_signature);
  }

  SUBCASE("expired challenge") {
    Bytes sig = crypto::sign(sub.keys.private_key, nonce);
    CHECK(code_of([&] {
            t.invoke(sub, "verify_challenge",
                     verify_challenge_args(challenge_id, sig,
                                           kTs + kChallengeTtlMs + 1));
          }) == ErrorCode::expired);
  }

  SUBCASE("unknown challenge id") {
    Bytes sig = crypto::sign(sub.keys.private_key, nonce);
    CHECK(code_of([&] {
            t.invoke(sub, "verify_challenge",
                     verify_challenge_args(t.rng.uuid4(), sig, kTs + 1000));
          }) == ErrorCode::not_found);
  }
}

TEST_CASE("concurrent verify_challenge: at most one success") {
  TestNet t;
  auto sub = t.net->issue_identity("racer@Org1", "Org1", identity::Role::client);
  t.invoke(t.admin_iot, "grant", grant_args("racer@Org1", "sensors/#",
                                            {"subscribe"}, 0));

  for (int trial = 0; trial < 5; ++trial) {
    auto issued = t.invoke(sub, "issue_challenge",
                           issue_challenge_args("racer@Org1", kTs));
    json record = json::parse(string_of(issued.response));
    Bytes nonce = from_base64(record.at("nonce").get<std::string>());
    Bytes sig = crypto::sign(sub.keys.private_key, nonce);

    std::vector<std::pair<const txflow::NodeIdentity*, std::vector<Bytes>>> calls;
    for (int i = 0; i < 8; ++i) {
      calls.emplace_back(&sub, verify_challenge_args(
                                   record.at("challenge_id"), sig, kTs + 100));
    }
    auto flags = t.invoke_concurrently(calls, "verify_challenge");
    int successes = 0;
    for (auto f : flags) {
      if (f == ledger::TxFlag::valid) ++successes;
    }
    CHECK(successes == 1);
  }
}

TEST_CASE("get_assets_from_batch matches a per-id state_get loop") {
  TestNet t;
  constexpr int kPool = 120;
  std::vector<std::string> pool;
  std::vector<std::pair<const txflow::NodeIdentity*, std::vector<Bytes>>> calls;
  for (int i = 0; i < kPool; ++i) {
    pool.push_back(t.rng.uuid4());
    calls.emplace_back(&t.device,
                       store_asset_args(pool.back(), t.device_id,
                                        SensorType::temperature,
                                        bytes_of("v" + std::to_string(i)), kTs));
  }
  auto flags = t.invoke_concurrently(calls, "store_asset");
  for (auto f : flags) REQUIRE(f == ledger::TxFlag::valid);

  SUBCASE("missing ids become null slots") {
    std::string missing = t.rng.uuid4();
    json out = t.query(t.device, "get_assets_from_batch",
                       get_assets_from_batch_args({pool[0], missing}));
    REQUIRE(out.size() == 2);
    CHECK(out[0].at("asset_id") == pool[0]);
    CHECK(out[1].is_null());
  }

  SUBCASE("random batches equal the state_get loop oracle") {
    auto& channel = t.net->channel(TestNet::kChannel);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::string> batch;
      for (int i = 0; i < 30; ++i) batch.push_back(pool[t.rng.uniform(kPool)]);
      json out = t.query(t.device, "get_assets_from_batch",
                         get_assets_from_batch_args(batch));
      REQUIRE(out.size() == batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        auto entry = channel.state_get(asset_key(batch[i]));
        REQUIRE(entry.has_value());
        CHECK(out[i] == json::parse(string_of(entry->value)));
      }
    }
  }

  SUBCASE("malformed id rejects the batch") {
    CHECK(code_of([&] {
            t.query(t.device, "get_assets_from_batch",
                    get_assets_from_batch_args({"nope"}));
          }) == ErrorCode::malformed_uuid);
  }
}

TEST_CASE("checksum soundness sweep") {
  TestNet t;
  for (int i = 0; i < 10; ++i) {
    t.invoke(t.device, "store_asset",
             store_asset_args(t.rng.uuid4(), t.device_id, SensorType::other,
                              t.rng.bytes(1 + t.rng.uniform(64)), kTs + i));
  }
  auto& channel = t.net->channel(TestNet::kChannel);
  auto rows = channel.range_query("asset/", ledger::prefix_end("asset/"));
  CHECK(rows.size() == 10);
  for (const auto& [key, value, version] : rows) {
    (void)key;
    (void)version;
    json doc = json::parse(string_of(value));
    Bytes payload = from_base64(doc.at("payload").get<std::string>());
    CHECK(doc.at("checksum") == crypto::sha256_hex(payload));
  }
}
