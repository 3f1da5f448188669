// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "iotchain/broker.hpp"
#include "iotchain/chaincode.hpp"
#include "iotchain/txflow.hpp"

namespace iotchain::broker {

// LedgerAuth backed by a live network: connect-time challenges run through
// the full execute-order-validate pipeline under the broker's own identity,
// and bridged publishes become store_asset transactions on a worker thread so
// subscriber delivery never waits for a commit.
class NetworkLedgerAuth : public LedgerAuth {
public:
  NetworkLedgerAuth(txflow::Network& network, txflow::NodeIdentity broker_identity,
                    std::string channel_id, uint64_t rng_seed);
  ~NetworkLedgerAuth() override;

  VerifyOutcome verify_challenge(const std::string& challenge_id,
                                 const Bytes& signature, uint64_t now_ms) override;
  void bridge_store_asset(const std::string& device_id, const std::string& topic,
                          const Bytes& payload, uint64_t timestamp_ms) override;

  // Blocks until every queued bridge transaction has committed or failed.
  void flush_bridge();
  uint64_t bridge_failures() const { return bridge_failures_; }

private:
  struct BridgeJob {
    std::string device_id;
    std::string topic;
    Bytes payload;
    uint64_t timestamp_ms;
  };

  void bridge_loop();

  txflow::Network& network_;
  txflow::NodeIdentity identity_;
  std::string channel_id_;
  std::mutex rng_mutex_;
  Rng rng_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<BridgeJob> queue_;
  bool running_ = true;
  bool busy_ = false;
  std::thread worker_;
  std::atomic<uint64_t> bridge_failures_{0};
};

}  // namespace iotchain::broker
