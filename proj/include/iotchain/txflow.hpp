// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "iotchain/ledger.hpp"
#include "iotchain/netconfig.hpp"
#include "iotchain/policy.hpp"
#include "iotchain/rng.hpp"

namespace iotchain::txflow {

struct Proposal {
  std::string channel_id;
  std::string chaincode_id;
  std::string function;
  std::vector<Bytes> args;
  identity::Certificate creator;
  Bytes nonce;  // 16 random bytes from the client's rng
  Bytes client_signature;

  json canonical_json() const;  // fields the signature and tx_id cover
  Bytes canonical_bytes() const;
  std::string tx_id() const;

  void sign(const Bytes& private_key);
  bool verify_signature() const;

  json to_json() const;  // wire form (canonical fields + signature)
  static Proposal from_json(const json& j);
};

// Simulation stub handed to chaincode during endorsement. Reads come from the
// committed snapshot and are recorded with their versions; writes buffer into
// the write set and are visible to this transaction's own later reads. Range
// scans observe the snapshot only and are re-checked at validation.
class ChaincodeContext {
public:
  ChaincodeContext(const ledger::Channel::SnapshotView& view,
                   const identity::MspRegistry& msp, const Proposal& proposal);

  std::optional<Bytes> get(const std::string& key);
  void put(const std::string& key, Bytes value);
  void del(const std::string& key);
  std::vector<std::tuple<std::string, Bytes, ledger::Version>> range(
      const std::string& start, const std::string& end);

  // History of committed writes; not part of the read set (same phantom
  // semantics as Fabric's history queries).
  std::vector<ledger::HistoryEntry> history(const std::string& key) const;

  const identity::Certificate& creator() const { return proposal_.creator; }
  const std::string& tx_id() const { return tx_id_; }
  const Bytes& proposal_nonce() const { return proposal_.nonce; }
  const identity::MspRegistry& msp() const { return msp_; }

  // Timestamp of the head block: the deterministic clock available to read
  // paths (every endorser at the same height sees the same value).
  uint64_t chain_time() const { return view_.head_timestamp; }

  ledger::ReadWriteSet take_rw_set();

private:
  const ledger::Channel::SnapshotView& view_;
  const identity::MspRegistry& msp_;
  const Proposal& proposal_;
  std::string tx_id_;

  std::map<std::string, std::optional<ledger::Version>> reads_;
  std::map<std::string, std::optional<Bytes>> writes_;  // nullopt = delete
  std::vector<ledger::ReadWriteSet::RangeRead> range_reads_;
};

using ChaincodeFn = std::function<Bytes(
    ChaincodeContext&, const std::string& function, const std::vector<Bytes>& args)>;

using ChaincodeRegistry = std::map<std::string, ChaincodeFn>;

// Chaincode id of the deployment meta-contract; deploying chaincode `X`
// writes the state key "_chaincode/X" that invocation checks.
inline constexpr const char* kLifecycleChaincode = "_lifecycle";
std::string deployed_key(const std::string& chaincode_id);

class Peer {
public:
  Peer(std::string name, std::string org, identity::Certificate cert,
       crypto::KeyPair keys, const identity::MspRegistry& msp,
       const ChaincodeRegistry& chaincodes,
       std::function<ledger::Channel*(const std::string&)> channel_lookup,
       std::function<uint64_t()> clock);

  // Simulates the proposal against a read-only snapshot and signs the result.
  // Throws auth_failure / not_member / unknown_channel / chaincode errors.
  std::pair<ledger::Endorsement, ledger::ReadWriteSet> endorse(
      const Proposal& proposal) const;

  const std::string& name() const { return name_; }
  const std::string& org() const { return org_; }
  const identity::Certificate& certificate() const { return cert_; }

private:
  std::string name_;
  std::string org_;
  identity::Certificate cert_;
  crypto::KeyPair keys_;
  const identity::MspRegistry& msp_;
  const ChaincodeRegistry& chaincodes_;
  std::function<ledger::Channel*(const std::string&)> channel_lookup_;
  std::function<uint64_t()> clock_;
};

// True iff the endorsing orgs satisfy the policy. All endorsements must carry
// the same rw_set_hash (mixed_read_write_sets otherwise); signature validity
// is the caller's precondition.
bool check_policy(const EndorsementPolicy& policy,
                  const std::vector<ledger::Endorsement>& endorsements);

struct OrdererConfig {
  std::string mode = "solo";
  uint64_t max_block_txs = 10;
  uint64_t batch_timeout_ms = 500;
};

// Single-node ordering service: accumulates transactions per channel in
// arrival order and cuts blocks when a batch fills or times out. Ordering
// never validates.
class SoloOrderer {
public:
  explicit SoloOrderer(OrdererConfig config) : config_(config) {}

  void submit(ledger::Transaction tx, uint64_t now_ms);

  // Blocks ready under the cutting rule; force cuts everything pending.
  std::vector<std::pair<std::string, ledger::Block>> cut_ready(uint64_t now_ms,
                                                               bool force);
  bool has_pending() const;
  size_t pending_count(const std::string& channel_id) const;
  // Earliest deadline at which a pending batch times out, if any.
  std::optional<uint64_t> next_deadline(uint64_t now_ms) const;

  const OrdererConfig& config() const { return config_; }

private:
  struct PendingBatch {
    std::deque<ledger::Transaction> txs;
    uint64_t first_arrival_ms = 0;
  };

  OrdererConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, PendingBatch> pending_;
};

// Assigns validation flags for an ordered block against the channel's current
// state. Failures are flags, never exceptions. Caller must hold the channel's
// commit lock (or otherwise guarantee quiescence).
std::vector<ledger::TxFlag> validate_transactions(
    const ledger::Channel& channel, const std::vector<ledger::Transaction>& txs,
    uint64_t block_number, const EndorsementPolicy& policy,
    const identity::MspRegistry& msp, uint64_t now_ms);

struct CommitResult {
  std::string tx_id;
  uint64_t block_number = 0;
  ledger::TxFlag flag = ledger::TxFlag::valid;
  double latency_ms = 0.0;  // proposal creation to commit notification
  Bytes response;           // endorsement response payload
};

struct NodeIdentity {
  identity::Certificate cert;
  crypto::KeyPair keys;
};

struct NetworkOptions {
  ledger::Backend backend = ledger::Backend::embedded_kv;
  uint64_t default_deadline_ms = 10'000;
  uint64_t cert_validity_ms = 365ull * 24 * 3600 * 1000;
  std::function<uint64_t()> clock;  // wall-clock ms; defaults to system clock
};

uint64_t system_time_ms();

// Persisted identity material: everything needed to reconstruct the same
// network actors in a later process (the ledger itself is persisted as block
// files and replayed separately).
struct NetworkState {
  json msp;                              // registry roots/members/revocations
  std::vector<json> cas;                 // CA states including signing keys
  std::map<std::string, json> node_keys; // subject -> key pair (operator keystore)
  std::vector<std::string> roster_subjects;
};

// The assembled in-process network: MSP + CAs, one endorsing peer per org,
// a solo orderer with its ordering thread, channels, and the commit
// notification fabric that submit_and_await rides on.
class Network {
public:
  explicit Network(const net::NetworkConfig& config, NetworkOptions opts = {});
  Network(const net::NetworkConfig& config, NetworkOptions opts,
          const NetworkState& state);  // rebuild previously issued identities
  ~Network();

  NetworkState export_state() const;
  // Key pair of a roster node or locally issued identity.
  crypto::KeyPair node_keys(const std::string& subject) const;  // not_found
  NodeIdentity identity_of(const std::string& subject) const;   // not_found

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  // --- identity surface ---
  identity::MspRegistry& msp() { return msp_; }
  identity::Ca& ca(const std::string& org);  // unknown_issuer
  NodeIdentity issue_identity(const std::string& subject, const std::string& org,
                              identity::Role role, uint64_t validity_ms = 0);
  // Certificates for every node in the topology (CAs, TLS-CAs, peers, orderer).
  const std::vector<identity::Certificate>& roster() const { return roster_; }
  const NodeIdentity& orderer_identity() const { return orderer_identity_; }

  // --- topology ---
  Peer& peer_for_org(const std::string& org);  // not_member if org has no peer
  ledger::Channel& channel(const std::string& id);  // unknown_channel
  ledger::Channel* find_channel(const std::string& id);
  std::vector<std::string> channel_ids() const;
  const net::NetworkConfig& config() const { return config_; }
  const NetworkOptions& options() const { return options_; }

  ledger::Channel& create_channel(const std::string& id);  // from config entry
  ledger::Channel& restore_channel(const std::vector<ledger::Block>& blocks);
  void deploy_chaincode(const std::string& channel_id, const NodeIdentity& admin,
                        const std::string& chaincode_id);
  bool chaincode_deployed(const std::string& channel_id,
                          const std::string& chaincode_id);

  // --- pipeline ---
  Proposal make_proposal(const NodeIdentity& client, const std::string& channel_id,
                         const std::string& chaincode_id, const std::string& function,
                         std::vector<Bytes> args, Rng& rng) const;

  // Full execute-order-validate round trip. Throws on endorsement failure or
  // timeout; validation failures come back as flags.
  CommitResult submit_and_await(Proposal proposal, uint64_t deadline_ms = 0);

  // Endorse-only read at a single peer of the client's org; nothing commits.
  Bytes query(const Proposal& proposal);

  // Pipeline pieces, exposed for tests and the RPC server.
  std::vector<ledger::Endorsement> collect_endorsements(
      const Proposal& proposal, ledger::ReadWriteSet& rw_set_out);
  ledger::Transaction assemble_transaction(
      const Proposal& proposal, std::vector<ledger::Endorsement> endorsements,
      ledger::ReadWriteSet rw_set) const;
  void order_submit(ledger::Transaction tx);
  SoloOrderer& orderer() { return orderer_; }
  const EndorsementPolicy& channel_policy(const std::string& channel_id);

  // Await a commit notification for a transaction submitted via order_submit.
  // Returns nullopt on deadline expiry.
  std::optional<CommitResult> await_commit(const std::string& tx_id,
                                           uint64_t deadline_ms);
  void register_waiter(const std::string& tx_id);

  void start();
  void stop();
  void stop_orderer();  // keeps accepting submissions, stops cutting blocks
  bool orderer_running() const { return !orderer_stopped_; }

  // Invoked after each committed block (ledger persistence hook).
  void set_commit_hook(
      std::function<void(const std::string&, const ledger::Block&)> hook);

  uint64_t now_ms() const { return options_.clock(); }

  ChaincodeRegistry& chaincodes() { return chaincodes_; }

private:
  void ordering_loop();
  void commit_raw_block(const std::string& channel_id, ledger::Block block);
  void notify_commit(const ledger::Block& block, const std::string& channel_id);

  void register_lifecycle_chaincode();
  void build_peer(const net::OrgSpec& org, const net::PeerSpec& peer_spec,
                  const identity::Certificate& cert, crypto::KeyPair keys);

  net::NetworkConfig config_;
  NetworkOptions options_;

  identity::MspRegistry msp_;
  std::map<std::string, identity::Ca> cas_;
  std::vector<identity::Certificate> roster_;
  NodeIdentity orderer_identity_;
  std::map<std::string, crypto::KeyPair> node_keys_;
  mutable std::mutex node_keys_mutex_;

  ChaincodeRegistry chaincodes_;
  std::map<std::string, Peer> peers_;  // one endorsing peer per org
  std::map<std::string, std::unique_ptr<ledger::Channel>> channels_;
  std::map<std::string, EndorsementPolicy> policies_;
  mutable std::mutex channels_mutex_;

  SoloOrderer orderer_;
  std::thread ordering_thread_;
  std::mutex order_mutex_;
  std::condition_variable order_cv_;
  bool running_ = false;
  std::atomic<bool> orderer_stopped_{false};

  std::mutex waiters_mutex_;
  std::condition_variable waiters_cv_;
  std::map<std::string, std::optional<CommitResult>> waiters_;

  std::function<void(const std::string&, const ledger::Block&)> commit_hook_;
  std::mutex hook_mutex_;
};

}  // namespace iotchain::txflow
