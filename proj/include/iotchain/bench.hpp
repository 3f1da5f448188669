// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iotchain/txflow.hpp"

namespace iotchain::bench {

struct Round {
  std::string label;
  std::string function = "get_assets_from_batch";
  uint64_t tx_count = 100;
  uint64_t send_rate_tps = 50;  // fixed-rate pacing
  uint64_t batch_size = 1;      // for batch workloads
  uint64_t asset_pool = 0;      // pre-created assets this round expects

  static Round from_json(const json& j);
  json to_json() const;
};

struct BenchmarkConfig {
  uint64_t workers = 1;
  uint64_t seed = 42;
  ledger::Backend state_db = ledger::Backend::embedded_kv;
  std::string report_path;
  std::vector<Round> rounds;
  // Optional orderer overrides for latency-sensitive runs.
  std::optional<uint64_t> max_block_txs;
  std::optional<uint64_t> batch_timeout_ms;

  static BenchmarkConfig from_json(const json& j);
  json to_json() const;
};

struct RoundMetrics {
  std::string label;
  uint64_t submitted = 0;
  uint64_t committed = 0;
  uint64_t failed = 0;
  double send_rate_actual = 0;  // tps over the submission window
  double throughput = 0;        // committed / duration, tps
  double latency_min = 0;       // ms, client-observed (proposal to commit)
  double latency_avg = 0;
  double latency_max = 0;
  double latency_p95 = 0;  // nearest-rank
  double duration = 0;     // seconds, first submit to last completion

  json to_json() const;
};

struct MetricsReport {
  std::vector<RoundMetrics> rounds;

  json to_json() const;
  std::string text_table() const;
};

std::string render_report(const MetricsReport& report, const std::string& format);

// Issues the paper-shaped workloads against a live network: User A (first
// org) and User B (second org) submit reads, the bench device owns the pool.
class BenchRunner {
public:
  BenchRunner(txflow::Network& network, std::string channel_id, uint64_t seed,
              uint64_t workers = 1);

  // Commits pool_size assets with deterministic seeded UUIDs and payloads.
  std::vector<std::string> prepare_state(uint64_t pool_size);

  RoundMetrics run_round(const Round& round);
  MetricsReport run_rounds(const std::vector<Round>& rounds);

  const std::vector<std::string>& pool() const { return pool_; }
  const std::string& device_id() const { return device_id_; }

  // Builds an ephemeral in-process network for the whole config.
  static MetricsReport run_benchmark(const BenchmarkConfig& config);
  static MetricsReport run_benchmark(const BenchmarkConfig& config,
                                     net::NetworkConfig network_config);

private:
  std::vector<Bytes> workload_args(const Round& round, uint64_t tx_index,
                                   Rng& rng);
  const txflow::NodeIdentity& caller_for(const Round& round, uint64_t tx_index);

  txflow::Network& network_;
  std::string channel_id_;
  uint64_t seed_;
  uint64_t workers_;

  txflow::NodeIdentity admin_;
  txflow::NodeIdentity user_a_;
  txflow::NodeIdentity user_b_;
  txflow::NodeIdentity device_;
  std::string device_id_ = "bench-dev";
  std::vector<std::string> pool_;
};

}  // namespace iotchain::bench
