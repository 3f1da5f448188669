// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <string>
#include <vector>

#include "iotchain/canonical.hpp"

namespace iotchain::net {

struct PeerSpec {
  std::string name;
  std::string endpoint;  // documentation label; TCP mode derives ports from order
};

struct OrgSpec {
  std::string name;
  std::string ca;  // defaults to "<name>-CA"
  std::vector<PeerSpec> peers;

  std::string tls_ca_name() const;
};

struct OrdererSpec {
  std::string mode = "solo";
  std::string endpoint;
  uint64_t max_block_txs = 10;
  uint64_t batch_timeout_ms = 500;
};

struct ChannelSpec {
  std::string id;
  std::vector<std::string> members;
  std::string endorsement_policy;  // empty: OUTOF(min(2,n), members...)
};

struct NetworkConfig {
  std::vector<OrgSpec> orgs;
  OrdererSpec orderer;
  std::vector<ChannelSpec> channels;

  static NetworkConfig from_json(const json& j);
  json to_json() const;

  // The three-organization demo topology (Org1, Org2, IoT + solo orderer).
  static NetworkConfig default_topology();

  void validate() const;  // config_error on bad member refs / duplicate endpoints
  const ChannelSpec* find_channel(const std::string& id) const;
  const OrgSpec* find_org(const std::string& name) const;
};

inline constexpr const char* kOrdererOrg = "Orderer";
inline constexpr const char* kOrdererCa = "Orderer-CA";
inline constexpr const char* kOrdererNode = "Solo@Orderer";

}  // namespace iotchain::net
