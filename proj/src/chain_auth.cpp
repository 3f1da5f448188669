// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/chain_auth.hpp"

#include "iotchain/errors.hpp"

namespace iotchain::broker {

NetworkLedgerAuth::NetworkLedgerAuth(txflow::Network& network,
                                     txflow::NodeIdentity broker_identity,
                                     std::string channel_id, uint64_t rng_seed)
    : network_(network),
      identity_(std::move(broker_identity)),
      channel_id_(std::move(channel_id)),
      rng_(rng_seed),
      worker_([this] { bridge_loop(); }) {}

NetworkLedgerAuth::~NetworkLedgerAuth() {
  {
    std::lock_guard lock(queue_mutex_);
    running_ = false;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

VerifyOutcome NetworkLedgerAuth::verify_challenge(const std::string& challenge_id,
                                                  const Bytes& signature,
                                                  uint64_t now_ms) {
  VerifyOutcome outcome;
  txflow::Proposal proposal;
  {
    std::lock_guard lock(rng_mutex_);
    proposal = network_.make_proposal(
        identity_, channel_id_, chaincode::kChaincodeId, "verify_challenge",
        chaincode::verify_challenge_args(challenge_id, signature, now_ms), rng_);
  }
  try {
    txflow::CommitResult result = network_.submit_and_await(std::move(proposal));
    if (result.flag != ledger::TxFlag::valid) {
      // A conflicting commit consumed the challenge first.
      outcome.error = error_code_name(ErrorCode::already_used);
      return outcome;
    }
    json payload = json::parse(string_of(result.response));
    outcome.ok = true;
    outcome.subject = payload.at("subject").get<std::string>();
    for (const auto& g : payload.at("rights")) {
      outcome.rights.push_back(GrantView::from_json(g));
    }
  } catch (const Error& e) {
    outcome.error = error_code_name(e.code());
  }
  return outcome;
}

void NetworkLedgerAuth::bridge_store_asset(const std::string& device_id,
                                           const std::string& topic,
                                           const Bytes& payload,
                                           uint64_t timestamp_ms) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(BridgeJob{device_id, topic, payload, timestamp_ms});
  }
  queue_cv_.notify_all();
}

void NetworkLedgerAuth::flush_bridge() {
  std::unique_lock lock(queue_mutex_);
  queue_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void NetworkLedgerAuth::bridge_loop() {
  while (true) {
    BridgeJob job;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return !running_ || !queue_.empty(); });
      if (!running_ && queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    try {
      std::string asset_id;
      txflow::Proposal proposal;
      {
        std::lock_guard lock(rng_mutex_);
        asset_id = rng_.uuid4();
        proposal = network_.make_proposal(
            identity_, channel_id_, chaincode::kChaincodeId, "store_asset",
            chaincode::store_asset_args(asset_id, job.device_id,
                                        chaincode::SensorType::other, job.payload,
                                        job.timestamp_ms),
            rng_);
      }
      txflow::CommitResult result = network_.submit_and_await(std::move(proposal));
      if (result.flag != ledger::TxFlag::valid) ++bridge_failures_;
    } catch (const Error&) {
      // Ledger errors are counted, never surfaced to the publisher.
      ++bridge_failures_;
    }
    {
      std::lock_guard lock(queue_mutex_);
      busy_ = false;
    }
    queue_cv_.notify_all();
  }
}

}  // namespace iotchain::broker
