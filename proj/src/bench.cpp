// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "iotchain/chaincode.hpp"
#include "iotchain/errors.hpp"

namespace iotchain::bench {

using Clock = std::chrono::steady_clock;

namespace {

uint64_t mix64(uint64_t i) {
  // splitmix64 finalizer
  uint64_t z = i + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Round Round::from_json(const json& j) {
  Round r;
  r.label = j.at("label").get<std::string>();
  r.function = j.value("function", r.function);
  r.tx_count = j.value("tx_count", r.tx_count);
  r.send_rate_tps = j.value("send_rate_tps", r.send_rate_tps);
  r.batch_size = j.value("batch_size", r.batch_size);
  r.asset_pool = j.value("asset_pool", r.asset_pool);
  if (r.send_rate_tps < 1 || r.batch_size < 1) {
    raise(ErrorCode::config_error,
          "round " + r.label + ": send_rate_tps and batch_size must be >= 1");
  }
  return r;
}

json Round::to_json() const {
  return json{{"label", label},           {"function", function},
              {"tx_count", tx_count},     {"send_rate_tps", send_rate_tps},
              {"batch_size", batch_size}, {"asset_pool", asset_pool}};
}

BenchmarkConfig BenchmarkConfig::from_json(const json& j) {
  BenchmarkConfig cfg;
  cfg.workers = j.value("workers", cfg.workers);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("state_db")) {
    cfg.state_db = ledger::backend_from_string(j.at("state_db").get<std::string>());
  }
  cfg.report_path = j.value("report_path", "");
  for (const auto& r : j.at("rounds")) cfg.rounds.push_back(Round::from_json(r));
  if (j.contains("max_block_txs")) {
    cfg.max_block_txs = j.at("max_block_txs").get<uint64_t>();
  }
  if (j.contains("batch_timeout_ms")) {
    cfg.batch_timeout_ms = j.at("batch_timeout_ms").get<uint64_t>();
  }
  if (cfg.workers < 1) raise(ErrorCode::config_error, "workers must be >= 1");
  if (cfg.rounds.empty()) raise(ErrorCode::config_error, "rounds must be non-empty");
  return cfg;
}

json BenchmarkConfig::to_json() const {
  json rounds_json = json::array();
  for (const auto& r : rounds) rounds_json.push_back(r.to_json());
  json j{{"workers", workers},
         {"seed", seed},
         {"state_db", ledger::backend_name(state_db)},
         {"report_path", report_path},
         {"rounds", rounds_json}};
  if (max_block_txs) j["max_block_txs"] = *max_block_txs;
  if (batch_timeout_ms) j["batch_timeout_ms"] = *batch_timeout_ms;
  return j;
}

json RoundMetrics::to_json() const {
  return json{{"label", label},
              {"submitted", submitted},
              {"committed", committed},
              {"failed", failed},
              {"send_rate_actual", send_rate_actual},
              {"throughput", throughput},
              {"latency_min", latency_min},
              {"latency_avg", latency_avg},
              {"latency_max", latency_max},
              {"latency_p95", latency_p95},
              {"duration", duration}};
}

json MetricsReport::to_json() const {
  json rounds_json = json::array();
  for (const auto& r : rounds) rounds_json.push_back(r.to_json());
  return json{{"rounds", rounds_json}};
}

std::string MetricsReport::text_table() const {
  std::ostringstream out;
  out << "Label            | Send Rate | Throughput |     Min |     Avg |     Max |     P95\n";
  out << "-----------------+-----------+------------+---------+---------+---------+--------\n";
  char line[256];
  for (const auto& r : rounds) {
    std::snprintf(line, sizeof line,
                  "%-16s | %7.1f/s | %8.1f/s | %5.1fms | %5.1fms | %5.1fms | %5.1fms\n",
                  r.label.c_str(), r.send_rate_actual, r.throughput, r.latency_min,
                  r.latency_avg, r.latency_max, r.latency_p95);
    out << line;
  }
  return out.str();
}

std::string render_report(const MetricsReport& report, const std::string& format) {
  if (format == "json") return report.to_json().dump(2) + "\n";
  if (format == "text-table") return report.text_table();
  raise(ErrorCode::config_error, "unknown report format: " + format);
}

BenchRunner::BenchRunner(txflow::Network& network, std::string channel_id,
                         uint64_t seed, uint64_t workers)
    : network_(network),
      channel_id_(std::move(channel_id)),
      seed_(seed),
      workers_(std::max<uint64_t>(1, workers)) {
  const auto& orgs = network_.config().orgs;
  const std::string& org_a = orgs.front().name;
  const std::string& org_b = orgs.size() > 1 ? orgs[1].name : orgs.front().name;
  const std::string& device_org = orgs.back().name;

  admin_ = network_.issue_identity("bench-admin@" + device_org, device_org,
                                   identity::Role::admin);
  user_a_ = network_.issue_identity("bench-userA@" + org_a, org_a,
                                    identity::Role::client);
  user_b_ = network_.issue_identity("bench-userB@" + org_b, org_b,
                                    identity::Role::client);
  device_ = network_.issue_identity(device_id_, device_org, identity::Role::device);
}

std::vector<std::string> BenchRunner::prepare_state(uint64_t pool_size) {
  Rng rng(seed_);
  Rng proposal_rng(seed_ ^ 0x5eedf00dull);

  auto run_tx = [&](const txflow::NodeIdentity& who, const std::string& function,
                    std::vector<Bytes> args) {
    auto proposal = network_.make_proposal(who, channel_id_, chaincode::kChaincodeId,
                                           function, std::move(args), proposal_rng);
    auto result = network_.submit_and_await(std::move(proposal));
    if (result.flag != ledger::TxFlag::valid) {
      raise(ErrorCode::chaincode_error,
            std::string("state preparation transaction flagged ") +
                ledger::tx_flag_name(result.flag));
    }
  };

  run_tx(admin_, "register_device",
         chaincode::register_device_args(device_id_, device_.cert.public_key,
                                         {"sensors/" + device_id_ + "/#"}));
  run_tx(admin_, "grant",
         chaincode::grant_args(user_a_.cert.subject, device_id_, {"read"}, 0));
  run_tx(admin_, "grant",
         chaincode::grant_args(user_b_.cert.subject, device_id_, {"read"}, 0));

  pool_.clear();
  pool_.reserve(pool_size);
  std::vector<std::vector<Bytes>> stores;
  stores.reserve(pool_size);
  for (uint64_t i = 0; i < pool_size; ++i) {
    pool_.push_back(rng.uuid4());
    stores.push_back(chaincode::store_asset_args(
        pool_.back(), device_id_, chaincode::SensorType::temperature,
        rng.bytes(256), network_.now_ms()));
  }

  // Enough in-flight submissions to keep blocks cutting at max_block_txs.
  size_t prep_workers =
      std::max<size_t>(16, network_.orderer().config().max_block_txs + 2);
  std::atomic<uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex rng_mutex;
  std::vector<std::thread> threads;
  for (size_t w = 0; w < prep_workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        uint64_t i = next.fetch_add(1);
        if (i >= stores.size() || failed) return;
        try {
          txflow::Proposal proposal;
          {
            std::lock_guard lock(rng_mutex);
            proposal = network_.make_proposal(device_, channel_id_,
                                              chaincode::kChaincodeId,
                                              "store_asset", stores[i],
                                              proposal_rng);
          }
          auto result = network_.submit_and_await(std::move(proposal));
          if (result.flag != ledger::TxFlag::valid) failed = true;
        } catch (const Error&) {
          failed = true;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failed) {
    raise(ErrorCode::chaincode_error,
          "state preparation aborted on a failed commit");
  }
  return pool_;
}

std::vector<Bytes> BenchRunner::workload_args(const Round& round, uint64_t tx_index,
                                              Rng& rng) {
  if (round.function == "get_assets_from_batch") {
    if (pool_.empty()) {
      raise(ErrorCode::config_error, "batch workload requires a prepared pool");
    }
    std::vector<std::string> batch;
    batch.reserve(round.batch_size);
    for (uint64_t i = 0; i < round.batch_size; ++i) {
      batch.push_back(pool_[rng.uniform(pool_.size())]);
    }
    return chaincode::get_assets_from_batch_args(batch);
  }
  if (round.function == "query_checksum") {
    if (pool_.empty()) {
      raise(ErrorCode::config_error, "query workload requires a prepared pool");
    }
    return chaincode::query_checksum_args(pool_[rng.uniform(pool_.size())]);
  }
  if (round.function == "store_asset") {
    Bytes raw = rng.bytes(16);
    std::string asset_id = uuid_from_bytes(raw.data());
    return chaincode::store_asset_args(asset_id, device_id_,
                                       chaincode::SensorType::temperature,
                                       rng.bytes(256),
                                       network_.now_ms() + tx_index);
  }
  raise(ErrorCode::config_error, "unsupported workload function: " + round.function);
}

const txflow::NodeIdentity& BenchRunner::caller_for(const Round& round,
                                                    uint64_t tx_index) {
  if (round.function == "store_asset") return device_;
  return tx_index % 2 == 0 ? user_a_ : user_b_;
}

RoundMetrics BenchRunner::run_round(const Round& round) {
  RoundMetrics metrics;
  metrics.label = round.label;

  const auto interval = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / static_cast<double>(round.send_rate_tps)));
  const auto start = Clock::now() + std::chrono::milliseconds(5);
  const uint64_t label_salt = std::hash<std::string>{}(round.label);

  std::atomic<uint64_t> next{0};
  std::atomic<uint64_t> submitted{0}, committed{0}, failed{0};
  std::mutex collect_mutex;
  std::vector<double> latencies;
  Clock::time_point first_submit = Clock::time_point::max();
  Clock::time_point last_submit = Clock::time_point::min();
  Clock::time_point last_done = Clock::time_point::min();

  auto worker = [&] {
    std::vector<double> local_latencies;
    Clock::time_point local_first = Clock::time_point::max();
    Clock::time_point local_last_submit = Clock::time_point::min();
    Clock::time_point local_last_done = Clock::time_point::min();

    while (true) {
      uint64_t i = next.fetch_add(1);
      if (i >= round.tx_count) break;
      std::this_thread::sleep_until(start + interval * static_cast<int64_t>(i));

      // Per-transaction rng: the issued (function, args) sequence depends
      // only on seed, round label and index, never on thread interleaving.
      Rng tx_rng(seed_ ^ mix64(label_salt) ^ mix64(i));
      txflow::Proposal proposal;
      try {
        proposal = network_.make_proposal(caller_for(round, i), channel_id_,
                                          chaincode::kChaincodeId, round.function,
                                          workload_args(round, i, tx_rng), tx_rng);
      } catch (const Error&) {
        failed.fetch_add(1);
        continue;
      }
      auto t_submit = Clock::now();
      local_first = std::min(local_first, t_submit);
      local_last_submit = std::max(local_last_submit, t_submit);
      submitted.fetch_add(1);
      try {
        auto result = network_.submit_and_await(std::move(proposal));
        if (result.flag == ledger::TxFlag::valid) {
          committed.fetch_add(1);
          local_latencies.push_back(result.latency_ms);
        } else {
          failed.fetch_add(1);
        }
      } catch (const Error&) {
        failed.fetch_add(1);  // timeouts count as failed, never dropped
      }
      local_last_done = std::max(local_last_done, Clock::now());
    }

    std::lock_guard lock(collect_mutex);
    latencies.insert(latencies.end(), local_latencies.begin(),
                     local_latencies.end());
    first_submit = std::min(first_submit, local_first);
    last_submit = std::max(last_submit, local_last_submit);
    last_done = std::max(last_done, local_last_done);
  };

  std::vector<std::thread> threads;
  for (uint64_t w = 0; w < workers_; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  metrics.submitted = submitted;
  metrics.committed = committed;
  metrics.failed = failed;

  if (metrics.submitted > 0) {
    double send_window_s =
        std::chrono::duration<double>(last_submit - first_submit + interval).count();
    metrics.send_rate_actual = static_cast<double>(metrics.submitted) / send_window_s;
    metrics.duration =
        std::chrono::duration<double>(last_done - first_submit).count();
    if (metrics.duration > 0) {
      metrics.throughput = static_cast<double>(metrics.committed) / metrics.duration;
    }
  }
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    metrics.latency_min = latencies.front();
    metrics.latency_max = latencies.back();
    double sum = 0;
    for (double l : latencies) sum += l;
    metrics.latency_avg = sum / static_cast<double>(latencies.size());
    size_t rank = static_cast<size_t>(
        std::ceil(0.95 * static_cast<double>(latencies.size())));
    metrics.latency_p95 = latencies[std::max<size_t>(rank, 1) - 1];
  }
  return metrics;
}

MetricsReport BenchRunner::run_rounds(const std::vector<Round>& rounds) {
  MetricsReport report;
  for (const auto& round : rounds) report.rounds.push_back(run_round(round));
  return report;
}

MetricsReport BenchRunner::run_benchmark(const BenchmarkConfig& config) {
  return run_benchmark(config, net::NetworkConfig::default_topology());
}

MetricsReport BenchRunner::run_benchmark(const BenchmarkConfig& config,
                                         net::NetworkConfig network_config) {
  if (config.max_block_txs) {
    network_config.orderer.max_block_txs = *config.max_block_txs;
  }
  if (config.batch_timeout_ms) {
    network_config.orderer.batch_timeout_ms = *config.batch_timeout_ms;
  }

  txflow::NetworkOptions options;
  options.backend = config.state_db;
  txflow::Network network(network_config, options);
  chaincode::install(network);

  const std::string channel_id = network_config.channels.empty()
                                     ? std::string("iotchannel")
                                     : network_config.channels.front().id;
  network.create_channel(channel_id);
  BenchRunner runner(network, channel_id, config.seed, config.workers);
  network.deploy_chaincode(channel_id, runner.admin_, chaincode::kChaincodeId);

  uint64_t pool_size = 0;
  for (const auto& round : config.rounds) {
    pool_size = std::max(pool_size, round.asset_pool);
  }
  if (pool_size > 0) runner.prepare_state(pool_size);

  MetricsReport report = runner.run_rounds(config.rounds);

  // Hash-chain integrity check after every benchmark run.
  if (auto broken = network.channel(channel_id).verify_chain()) {
    raise(ErrorCode::chain_mismatch,
          "post-benchmark chain verification failed at block " +
              std::to_string(*broken));
  }
  return report;
}

}  // namespace iotchain::bench
