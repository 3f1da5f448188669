// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <thread>

#include "iotchain/chaincode.hpp"
#include "iotchain/txflow.hpp"

namespace iotchain::test {

inline net::NetworkConfig fast_config(uint64_t max_block_txs = 10,
                                      uint64_t batch_timeout_ms = 20) {
  net::NetworkConfig config = net::NetworkConfig::default_topology();
  config.orderer.max_block_txs = max_block_txs;
  config.orderer.batch_timeout_ms = batch_timeout_ms;
  // extra two-member channel for membership tests
  config.channels.push_back(
      net::ChannelSpec{"twochannel", {"Org1", "Org2"}, "OUTOF(2,Org1,Org2)"});
  return config;
}

// A ready-to-use network: iotchannel created, contract deployed, one admin
// per org, and a registered IoT device.
struct TestNet {
  static constexpr const char* kChannel = "iotchannel";

  net::NetworkConfig config;
  std::unique_ptr<txflow::Network> net;
  Rng rng{12345};

  txflow::NodeIdentity admin_org1, admin_org2, admin_iot;
  txflow::NodeIdentity device;  // dev-1 in org IoT
  std::string device_id = "dev-1";

  explicit TestNet(ledger::Backend backend = ledger::Backend::embedded_kv,
                   net::NetworkConfig cfg = fast_config()) {
    config = std::move(cfg);
    txflow::NetworkOptions opts;
    opts.backend = backend;
    net = std::make_unique<txflow::Network>(config, opts);
    chaincode::install(*net);
    net->create_channel(kChannel);

    admin_org1 = net->issue_identity("admin@Org1", "Org1", identity::Role::admin);
    admin_org2 = net->issue_identity("admin@Org2", "Org2", identity::Role::admin);
    admin_iot = net->issue_identity("admin@IoT", "IoT", identity::Role::admin);
    net->deploy_chaincode(kChannel, admin_org1, chaincode::kChaincodeId);

    device = net->issue_identity(device_id, "IoT", identity::Role::device);
    invoke(admin_iot, "register_device",
           chaincode::register_device_args(device_id, device.cert.public_key,
                                           {"sensors/" + device_id + "/#"}));
  }

  txflow::CommitResult invoke(const txflow::NodeIdentity& who,
                              const std::string& function,
                              std::vector<Bytes> args,
                              const std::string& channel = kChannel) {
    auto proposal = net->make_proposal(who, channel, chaincode::kChaincodeId,
                                       function, std::move(args), rng);
    return net->submit_and_await(std::move(proposal));
  }

  json query(const txflow::NodeIdentity& who, const std::string& function,
             std::vector<Bytes> args, const std::string& channel = kChannel) {
    auto proposal = net->make_proposal(who, channel, chaincode::kChaincodeId,
                                       function, std::move(args), rng);
    return json::parse(string_of(net->query(proposal)));
  }

  // Commits the same call from many worker threads at once; returns flags.
  std::vector<ledger::TxFlag> invoke_concurrently(
      const std::vector<std::pair<const txflow::NodeIdentity*, std::vector<Bytes>>>&
          calls,
      const std::string& function) {
    std::vector<txflow::Proposal> proposals;
    proposals.reserve(calls.size());
    for (const auto& [who, args] : calls) {
      proposals.push_back(net->make_proposal(*who, kChannel,
                                             chaincode::kChaincodeId, function,
                                             args, rng));
    }
    std::vector<ledger::TxFlag> flags(calls.size(), ledger::TxFlag::bad_signature);
    std::vector<std::string> errors(calls.size());
    std::vector<std::thread> threads;
    threads.reserve(calls.size());
    for (size_t i = 0; i < proposals.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          flags[i] = net->submit_and_await(std::move(proposals[i])).flag;
        } catch (const Error& e) {
          errors[i] = e.what();
        }
      });
    }
    for (auto& t : threads) t.join();
    return flags;
  }
};

// (key, value) pairs of the full world state, for byte-equality comparisons.
inline std::vector<std::pair<std::string, Bytes>> state_pairs(
    const ledger::Channel& channel) {
  std::vector<std::pair<std::string, Bytes>> out;
  for (const auto& [key, value, version] :
       channel.range_query("", "\x7f")) {
    (void)version;
    out.emplace_back(key, value);
  }
  return out;
}

}  // namespace iotchain::test
