// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "iotchain/canonical.hpp"
#include "iotchain/crypto.hpp"
#include "iotchain/identity.hpp"

namespace iotchain::ledger {

// Commit position of a write: (block, tx index). Lexicographic order on the
// pair totally orders versions.
struct Version {
  uint64_t block_num = 0;
  uint64_t tx_num = 0;

  auto operator<=>(const Version&) const = default;

  json canonical_json() const;
  static Version from_canonical_json(const json& j);
};

struct ReadWriteSet {
  struct Read {
    std::string key;
    std::optional<Version> version;  // absent: key did not exist at read time
  };
  struct Write {
    std::string key;
    std::optional<Bytes> value;  // nullopt: delete
  };
  struct RangeRead {
    std::string start;
    std::string end;
    std::vector<std::pair<std::string, Version>> observed;
  };

  std::vector<Read> reads;
  std::vector<Write> writes;
  std::vector<RangeRead> range_reads;

  json canonical_json() const;
  static ReadWriteSet from_canonical_json(const json& j);
  crypto::Digest hash() const;
};

// A peer's signed attestation over the simulated read/write set.
struct Endorsement {
  identity::Certificate endorser;
  crypto::Digest rw_set_hash{};
  Bytes response_payload;
  Bytes signature;  // over tx_id digest ∥ rw_set_hash ∥ response_payload

  static Bytes signed_bytes(const std::string& tx_id,
                            const crypto::Digest& rw_set_hash,
                            const Bytes& response_payload);

  json canonical_json() const;
  static Endorsement from_canonical_json(const json& j);
};

struct Transaction {
  std::string tx_id;  // hex digest of the proposal's canonical encoding
  std::string channel_id;
  std::string chaincode_id;
  std::string function;
  std::vector<Bytes> args;
  identity::Certificate creator;
  Bytes nonce;  // proposal nonce, kept so tx_id stays recomputable
  ReadWriteSet rw_set;
  std::vector<Endorsement> endorsements;
  Bytes client_signature;

  // Canonical encoding of the proposal fields only; sha256 of it is tx_id and
  // it is what the client signature covers.
  json proposal_canonical_json() const;
  std::string computed_tx_id() const;

  json canonical_json() const;
  static Transaction from_canonical_json(const json& j);
};

enum class TxFlag { valid, mvcc_conflict, policy_failure, bad_signature };

const char* tx_flag_name(TxFlag f);
TxFlag tx_flag_from_string(std::string_view s);

struct Block {
  uint64_t number = 0;
  crypto::Digest prev_hash{};  // header hash of the previous block; zeros for genesis
  crypto::Digest data_hash{};  // sha256 of the canonical transaction list
  uint64_t timestamp = 0;      // ms, assigned by the orderer
  std::vector<Transaction> transactions;
  std::vector<TxFlag> validation_flags;

  // sha256 of the canonical header (number, prev_hash, data_hash, timestamp,
  // validation_flags). The next block's prev_hash must equal this, and it is
  // stored so tampering with any byte of a block file is attributable to that
  // exact block.
  crypto::Digest header_hash{};

  static crypto::Digest compute_data_hash(const std::vector<Transaction>& txs);
  json canonical_header() const;
  crypto::Digest compute_header_hash() const;
  void seal();  // fills data_hash + header_hash from current contents

  json to_json() const;  // canonical block file encoding
  static Block from_json(const json& j);
};

enum class Backend { embedded_kv, document_store };

Backend backend_from_string(std::string_view s);
const char* backend_name(Backend b);

struct StateEntry {
  Bytes value;
  Version version;
};

// Versioned key-value world state. Two interchangeable backends; both must
// return byte-identical results for get/range.
class WorldState {
public:
  virtual ~WorldState() = default;
  virtual Backend backend() const = 0;
  virtual std::optional<StateEntry> get(const std::string& key) const = 0;
  // Committed keys k with start <= k < end, ascending byte-lexicographic.
  virtual std::vector<std::tuple<std::string, Bytes, Version>> range(
      const std::string& start, const std::string& end) const = 0;
  // Commit path only.
  virtual void apply(const std::string& key, const std::optional<Bytes>& value,
                     Version version) = 0;
  virtual size_t size() const = 0;

  static std::unique_ptr<WorldState> make(Backend backend);
};

class EmbeddedKvState : public WorldState {
public:
  Backend backend() const override { return Backend::embedded_kv; }
  std::optional<StateEntry> get(const std::string& key) const override;
  std::vector<std::tuple<std::string, Bytes, Version>> range(
      const std::string& start, const std::string& end) const override;
  void apply(const std::string& key, const std::optional<Bytes>& value,
             Version version) override;
  size_t size() const override { return entries_.size(); }

private:
  std::map<std::string, StateEntry> entries_;
};

// Mirrors a document database: values parsing as JSON are kept as parsed
// documents and are reachable through field-equality selectors; non-JSON
// values are stored but excluded from selector queries.
class DocumentStoreState : public WorldState {
public:
  Backend backend() const override { return Backend::document_store; }
  std::optional<StateEntry> get(const std::string& key) const override;
  std::vector<std::tuple<std::string, Bytes, Version>> range(
      const std::string& start, const std::string& end) const override;
  void apply(const std::string& key, const std::optional<Bytes>& value,
             Version version) override;
  size_t size() const override { return entries_.size(); }

  // Keys of documents whose field equals the given value. `field` is a
  // top-level key of the document.
  std::vector<std::string> select_equals(const std::string& field,
                                         const json& value) const;

private:
  struct Doc {
    StateEntry entry;
    std::optional<json> parsed;
  };
  std::map<std::string, Doc> entries_;
};

struct HistoryEntry {
  std::string tx_id;
  std::optional<Bytes> value;  // nullopt: deletion
  uint64_t timestamp = 0;      // block timestamp
  Version version;
};

// Key prefix scan bound: smallest string greater than every key with the
// given prefix.
std::string prefix_end(const std::string& prefix);

// Per-channel hash-chained block store plus the derived world state and
// history index. One writer (the commit path); concurrent readers see the
// latest fully committed block.
class Channel {
public:
  Channel(std::string channel_id, std::set<std::string> members,
          std::string endorsement_policy, Backend backend, uint64_t genesis_time,
          const identity::Certificate& creator);

  // Rebuild from stored blocks (blocks[0] must be a genesis config block).
  static std::unique_ptr<Channel> replay(const std::vector<Block>& blocks,
                                         Backend backend);

  const std::string& id() const { return channel_id_; }
  const std::set<std::string>& members() const { return members_; }
  const std::string& endorsement_policy() const { return endorsement_policy_; }
  Backend backend() const { return state_->backend(); }

  void append_block(Block block);  // throws chain_mismatch / out_of_order

  uint64_t height() const;
  crypto::Digest head_header_hash() const;

  std::optional<StateEntry> state_get(const std::string& key) const;
  std::vector<std::tuple<std::string, Bytes, Version>> range_query(
      const std::string& start, const std::string& end) const;
  std::vector<HistoryEntry> history_query(const std::string& key) const;

  Block get_block(uint64_t number) const;  // not_found
  // (block number, transaction, validation flag)
  std::tuple<uint64_t, Transaction, TxFlag> get_transaction(
      const std::string& tx_id) const;  // not_found

  // Recomputes every digest; nullopt when intact, otherwise the number of the
  // first broken block.
  std::optional<uint64_t> verify_chain() const;

  std::vector<Block> all_blocks() const;

  // Consistent read view for endorsement simulation. Only valid while the
  // shared lock taken by with_snapshot is held.
  struct SnapshotView {
    const WorldState& state;
    uint64_t height;
    uint64_t head_timestamp;
    const Channel& channel;
  };

  // Runs fn while holding the read lock, giving a consistent snapshot of
  // state, height and history for endorsement simulation.
  template <typename Fn>
  auto with_snapshot(Fn&& fn) const {
    std::shared_lock lock(mutex_);
    SnapshotView view{*state_, blocks_.size(), head_timestamp_unlocked(), *this};
    return fn(view);
  }

  // Lock-free history lookup; callers must hold the channel lock (used from
  // inside with_snapshot).
  const std::vector<HistoryEntry>* history_nolock(const std::string& key) const;

  std::shared_mutex& commit_mutex() const { return mutex_; }

  // Commit-path internals, callers must hold the unique lock.
  void append_block_locked(Block block);
  const WorldState& state_unlocked() const { return *state_; }
  uint64_t height_unlocked() const { return blocks_.size(); }
  crypto::Digest head_header_hash_unlocked() const;
  uint64_t head_timestamp_unlocked() const;
  uint64_t head_timestamp() const;

private:
  Channel() = default;

  void apply_block(const Block& block, bool strict = true);

  std::string channel_id_;
  std::set<std::string> members_;
  std::string endorsement_policy_;

  mutable std::shared_mutex mutex_;
  std::vector<Block> blocks_;
  std::unique_ptr<WorldState> state_;
  std::map<std::string, std::vector<HistoryEntry>> history_;
  std::map<std::string, std::pair<uint64_t, size_t>> tx_index_;
};

// Genesis helpers (also used when replaying exported chains).
Transaction make_genesis_transaction(const std::string& channel_id,
                                     const std::set<std::string>& members,
                                     const std::string& endorsement_policy,
                                     const identity::Certificate& creator);
inline constexpr const char* kConfigKey = "_config/members";

}  // namespace iotchain::ledger
