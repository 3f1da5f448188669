// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/netconfig.hpp"

#include <set>

#include "iotchain/errors.hpp"

namespace iotchain::net {

std::string OrgSpec::tls_ca_name() const {
  // "Org1-CA" -> "Org1-TLS-CA"; anything else gets "-TLS-CA" appended.
  const std::string suffix = "-CA";
  if (ca.size() > suffix.size() &&
      ca.compare(ca.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return ca.substr(0, ca.size() - suffix.size()) + "-TLS-CA";
  }
  return ca + "-TLS-CA";
}

NetworkConfig NetworkConfig::from_json(const json& j) {
  NetworkConfig cfg;
  for (const auto& jorg : j.at("orgs")) {
    OrgSpec org;
    org.name = jorg.at("name").get<std::string>();
    org.ca = jorg.value("ca", org.name + "-CA");
    if (jorg.contains("peers")) {
      for (const auto& jp : jorg.at("peers")) {
        PeerSpec peer;
        peer.name = jp.at("name").get<std::string>();
        peer.endpoint = jp.value("endpoint", "");
        org.peers.push_back(std::move(peer));
      }
    }
    cfg.orgs.push_back(std::move(org));
  }
  if (j.contains("orderer")) {
    const auto& jo = j.at("orderer");
    cfg.orderer.mode = jo.value("mode", "solo");
    cfg.orderer.endpoint = jo.value("endpoint", "");
    cfg.orderer.max_block_txs = jo.value("max_block_txs", uint64_t{10});
    cfg.orderer.batch_timeout_ms = jo.value("batch_timeout_ms", uint64_t{500});
  }
  if (j.contains("channels")) {
    for (const auto& jc : j.at("channels")) {
      ChannelSpec ch;
      ch.id = jc.at("id").get<std::string>();
      for (const auto& m : jc.at("members")) ch.members.push_back(m.get<std::string>());
      ch.endorsement_policy = jc.value("endorsement_policy", "");
      cfg.channels.push_back(std::move(ch));
    }
  }
  cfg.validate();
  return cfg;
}

json NetworkConfig::to_json() const {
  json jorgs = json::array();
  for (const auto& org : orgs) {
    json jpeers = json::array();
    for (const auto& p : org.peers) {
      jpeers.push_back(json{{"name", p.name}, {"endpoint", p.endpoint}});
    }
    jorgs.push_back(json{{"name", org.name}, {"ca", org.ca}, {"peers", jpeers}});
  }
  json jchannels = json::array();
  for (const auto& ch : channels) {
    jchannels.push_back(json{{"id", ch.id},
                             {"members", ch.members},
                             {"endorsement_policy", ch.endorsement_policy}});
  }
  return json{{"orgs", jorgs},
              {"orderer",
               json{{"mode", orderer.mode},
                    {"endpoint", orderer.endpoint},
                    {"max_block_txs", orderer.max_block_txs},
                    {"batch_timeout_ms", orderer.batch_timeout_ms}}},
              {"channels", jchannels}};
}

NetworkConfig NetworkConfig::default_topology() {
  // Endpoints mirror the experimental node roster; the in-process transport
  // treats them as labels.
  json j = json::parse(R"cfg({
    "orgs": [
      {"name": "Org1", "ca": "Org1-CA",
       "peers": [{"name": "peer@org1", "endpoint": "10.0.1.30"}]},
      {"name": "Org2", "ca": "Org2-CA",
       "peers": [{"name": "peer@org2", "endpoint": "10.0.2.30"}]},
      {"name": "IoT", "ca": "IoT-CA",
       "peers": [{"name": "peer@IoT", "endpoint": "192.168.10.30"}]}
    ],
    "orderer": {"mode": "solo", "endpoint": "10.0.5.30",
                "max_block_txs": 10, "batch_timeout_ms": 500},
    "channels": [
      {"id": "iotchannel", "members": ["Org1", "Org2", "IoT"],
       "endorsement_policy": "OUTOF(2,Org1,Org2,IoT)"}
    ]
  })cfg");
  return from_json(j);
}

void NetworkConfig::validate() const {
  if (orgs.empty()) raise(ErrorCode::config_error, "config declares no orgs");
  if (orderer.mode != "solo") {
    raise(ErrorCode::config_error, "only the solo orderer mode is supported");
  }
  std::set<std::string> org_names;
  std::set<std::string> endpoints;
  for (const auto& org : orgs) {
    if (!org_names.insert(org.name).second) {
      raise(ErrorCode::config_error, "duplicate org: " + org.name);
    }
    for (const auto& p : org.peers) {
      if (!p.endpoint.empty() && !endpoints.insert(p.endpoint).second) {
        raise(ErrorCode::config_error, "duplicate endpoint: " + p.endpoint);
      }
    }
  }
  if (!orderer.endpoint.empty() && !endpoints.insert(orderer.endpoint).second) {
    raise(ErrorCode::config_error, "duplicate endpoint: " + orderer.endpoint);
  }
  if (orderer.max_block_txs < 1) {
    raise(ErrorCode::config_error, "max_block_txs must be >= 1");
  }
  for (const auto& ch : channels) {
    if (ch.members.empty()) {
      raise(ErrorCode::config_error, "channel " + ch.id + " has no members");
    }
    for (const auto& m : ch.members) {
      if (!org_names.count(m)) {
        raise(ErrorCode::config_error,
              "channel " + ch.id + " names undeclared org " + m);
      }
    }
  }
}

const ChannelSpec* NetworkConfig::find_channel(const std::string& id) const {
  for (const auto& ch : channels) {
    if (ch.id == id) return &ch;
  }
  return nullptr;
}

const OrgSpec* NetworkConfig::find_org(const std::string& name) const {
  for (const auto& org : orgs) {
    if (org.name == name) return &org;
  }
  return nullptr;
}

}  // namespace iotchain::net
