// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/ledger.hpp"

#include <algorithm>

#include "iotchain/errors.hpp"

namespace iotchain::ledger {

json Version::canonical_json() const {
  return json{{"block_num", canonical::uint_field(block_num)},
              {"tx_num", canonical::uint_field(tx_num)}};
}

Version Version::from_canonical_json(const json& j) {
  Version v;
  v.block_num = canonical::parse_uint(j.at("block_num"));
  v.tx_num = canonical::parse_uint(j.at("tx_num"));
  return v;
}

json ReadWriteSet::canonical_json() const {
  json jreads = json::array();
  for (const auto& r : reads) {
    json entry{{"key", r.key}};
    entry["version"] = r.version ? r.version->canonical_json() : json(nullptr);
    jreads.push_back(std::move(entry));
  }
  json jwrites = json::array();
  for (const auto& w : writes) {
    json entry{{"key", w.key}};
    entry["value"] = w.value ? json(to_base64(*w.value)) : json(nullptr);
    jwrites.push_back(std::move(entry));
  }
  json jranges = json::array();
  for (const auto& rr : range_reads) {
    json observed = json::array();
    for (const auto& [key, version] : rr.observed) {
      observed.push_back(json{{"key", key}, {"version", version.canonical_json()}});
    }
    jranges.push_back(json{
        {"start", rr.start}, {"end", rr.end}, {"observed", std::move(observed)}});
  }
  return json{{"reads", std::move(jreads)},
              {"writes", std::move(jwrites)},
              {"range_reads", std::move(jranges)}};
}

ReadWriteSet ReadWriteSet::from_canonical_json(const json& j) {
  ReadWriteSet rw;
  for (const auto& r : j.at("reads")) {
    Read read;
    read.key = r.at("key").get<std::string>();
    if (!r.at("version").is_null()) {
      read.version = Version::from_canonical_json(r.at("version"));
    }
    rw.reads.push_back(std::move(read));
  }
  for (const auto& w : j.at("writes")) {
    Write write;
    write.key = w.at("key").get<std::string>();
    if (!w.at("value").is_null()) {
      write.value = from_base64(w.at("value").get<std::string>());
    }
    rw.writes.push_back(std::move(write));
  }
  for (const auto& rr : j.at("range_reads")) {
    RangeRead range;
    range.start = rr.at("start").get<std::string>();
    range.end = rr.at("end").get<std::string>();
    for (const auto& o : rr.at("observed")) {
      range.observed.emplace_back(o.at("key").get<std::string>(),
                                  Version::from_canonical_json(o.at("version")));
    }
    rw.range_reads.push_back(std::move(range));
  }
  return rw;
}

crypto::Digest ReadWriteSet::hash() const {
  return canonical::digest(canonical_json());
}

Bytes Endorsement::signed_bytes(const std::string& tx_id,
                                const crypto::Digest& rw_set_hash,
                                const Bytes& response_payload) {
  Bytes out = from_hex(tx_id);
  out.insert(out.end(), rw_set_hash.begin(), rw_set_hash.end());
  out.insert(out.end(), response_payload.begin(), response_payload.end());
  return out;
}

json Endorsement::canonical_json() const {
  return json{{"endorser", endorser.canonical_json()},
              {"rw_set_hash", crypto::digest_hex(rw_set_hash)},
              {"response_payload", canonical::bytes_field(response_payload)},
              {"signature", canonical::bytes_field(signature)}};
}

Endorsement Endorsement::from_canonical_json(const json& j) {
  Endorsement e;
  e.endorser = identity::Certificate::from_canonical_json(j.at("endorser"));
  e.rw_set_hash = crypto::digest_from_hex(j.at("rw_set_hash").get<std::string>());
  e.response_payload = canonical::parse_bytes(j.at("response_payload"));
  e.signature = canonical::parse_bytes(j.at("signature"));
  return e;
}

json Transaction::proposal_canonical_json() const {
  json jargs = json::array();
  for (const auto& a : args) jargs.push_back(to_base64(a));
  return json{{"channel_id", channel_id},
              {"chaincode_id", chaincode_id},
              {"function", function},
              {"args", std::move(jargs)},
              {"creator", creator.canonical_json()},
              {"nonce", canonical::bytes_field(nonce)}};
}

std::string Transaction::computed_tx_id() const {
  return crypto::sha256_hex(canonical::dump(proposal_canonical_json()));
}

json Transaction::canonical_json() const {
  json j = proposal_canonical_json();
  j["tx_id"] = tx_id;
  j["rw_set"] = rw_set.canonical_json();
  json jend = json::array();
  for (const auto& e : endorsements) jend.push_back(e.canonical_json());
  j["endorsements"] = std::move(jend);
  j["client_signature"] = canonical::bytes_field(client_signature);
  return j;
}

Transaction Transaction::from_canonical_json(const json& j) {
  Transaction tx;
  tx.tx_id = j.at("tx_id").get<std::string>();
  tx.channel_id = j.at("channel_id").get<std::string>();
  tx.chaincode_id = j.at("chaincode_id").get<std::string>();
  tx.function = j.at("function").get<std::string>();
  for (const auto& a : j.at("args")) {
    tx.args.push_back(from_base64(a.get<std::string>()));
  }
  tx.creator = identity::Certificate::from_canonical_json(j.at("creator"));
  tx.nonce = canonical::parse_bytes(j.at("nonce"));
  tx.rw_set = ReadWriteSet::from_canonical_json(j.at("rw_set"));
  for (const auto& e : j.at("endorsements")) {
    tx.endorsements.push_back(Endorsement::from_canonical_json(e));
  }
  tx.client_signature = canonical::parse_bytes(j.at("client_signature"));
  return tx;
}

const char* tx_flag_name(TxFlag f) {
  switch (f) {
    case TxFlag::valid: return "valid";
    case TxFlag::mvcc_conflict: return "mvcc_conflict";
    case TxFlag::policy_failure: return "policy_failure";
    case TxFlag::bad_signature: return "bad_signature";
  }
  return "bad_signature";
}

TxFlag tx_flag_from_string(std::string_view s) {
  if (s == "valid") return TxFlag::valid;
  if (s == "mvcc_conflict") return TxFlag::mvcc_conflict;
  if (s == "policy_failure") return TxFlag::policy_failure;
  if (s == "bad_signature") return TxFlag::bad_signature;
  raise(ErrorCode::parse_error, "unknown validation flag: " + std::string(s));
}

crypto::Digest Block::compute_data_hash(const std::vector<Transaction>& txs) {
  json arr = json::array();
  for (const auto& tx : txs) arr.push_back(tx.canonical_json());
  return canonical::digest(arr);
}

json Block::canonical_header() const {
  json flags = json::array();
  for (TxFlag f : validation_flags) flags.push_back(tx_flag_name(f));
  return json{{"number", canonical::uint_field(number)},
              {"prev_hash", crypto::digest_hex(prev_hash)},
              {"data_hash", crypto::digest_hex(data_hash)},
              {"timestamp", canonical::uint_field(timestamp)},
              {"validation_flags", std::move(flags)}};
}

crypto::Digest Block::compute_header_hash() const {
  return canonical::digest(canonical_header());
}

void Block::seal() {
  data_hash = compute_data_hash(transactions);
  header_hash = compute_header_hash();
}

json Block::to_json() const {
  json txs = json::array();
  for (const auto& tx : transactions) txs.push_back(tx.canonical_json());
  json flags = json::array();
  for (TxFlag f : validation_flags) flags.push_back(tx_flag_name(f));
  return json{{"number", canonical::uint_field(number)},
              {"prev_hash", crypto::digest_hex(prev_hash)},
              {"data_hash", crypto::digest_hex(data_hash)},
              {"header_hash", crypto::digest_hex(header_hash)},
              {"timestamp", canonical::uint_field(timestamp)},
              {"transactions", std::move(txs)},
              {"validation_flags", std::move(flags)}};
}

Block Block::from_json(const json& j) {
  Block b;
  b.number = canonical::parse_uint(j.at("number"));
  b.prev_hash = crypto::digest_from_hex(j.at("prev_hash").get<std::string>());
  b.data_hash = crypto::digest_from_hex(j.at("data_hash").get<std::string>());
  b.header_hash = crypto::digest_from_hex(j.at("header_hash").get<std::string>());
  b.timestamp = canonical::parse_uint(j.at("timestamp"));
  for (const auto& tx : j.at("transactions")) {
    b.transactions.push_back(Transaction::from_canonical_json(tx));
  }
  for (const auto& f : j.at("validation_flags")) {
    b.validation_flags.push_back(tx_flag_from_string(f.get<std::string>()));
  }
  return b;
}

Backend backend_from_string(std::string_view s) {
  if (s == "embedded-kv") return Backend::embedded_kv;
  if (s == "document-store") return Backend::document_store;
  raise(ErrorCode::config_error, "unknown state backend: " + std::string(s));
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::embedded_kv: return "embedded-kv";
    case Backend::document_store: return "document-store";
  }
  return "embedded-kv";
}

std::unique_ptr<WorldState> WorldState::make(Backend backend) {
  if (backend == Backend::embedded_kv) return std::make_unique<EmbeddedKvState>();
  return std::make_unique<DocumentStoreState>();
}

std::optional<StateEntry> EmbeddedKvState::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::tuple<std::string, Bytes, Version>> EmbeddedKvState::range(
    const std::string& start, const std::string& end) const {
  if (start > end) raise(ErrorCode::invalid_range, "range start exceeds end");
  std::vector<std::tuple<std::string, Bytes, Version>> out;
  for (auto it = entries_.lower_bound(start);
       it != entries_.end() && it->first < end; ++it) {
    out.emplace_back(it->first, it->second.value, it->second.version);
  }
  return out;
}

void EmbeddedKvState::apply(const std::string& key,
                            const std::optional<Bytes>& value, Version version) {
  if (!value) {
    entries_.erase(key);
    return;
  }
  entries_[key] = StateEntry{*value, version};
}

std::optional<StateEntry> DocumentStoreState::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.entry;
}

std::vector<std::tuple<std::string, Bytes, Version>> DocumentStoreState::range(
    const std::string& start, const std::string& end) const {
  if (start > end) raise(ErrorCode::invalid_range, "range start exceeds end");
  std::vector<std::tuple<std::string, Bytes, Version>> out;
  for (auto it = entries_.lower_bound(start);
       it != entries_.end() && it->first < end; ++it) {
    out.emplace_back(it->first, it->second.entry.value, it->second.entry.version);
  }
  return out;
}

void DocumentStoreState::apply(const std::string& key,
                               const std::optional<Bytes>& value,
                               Version version) {
  if (!value) {
    entries_.erase(key);
    return;
  }
  Doc doc;
  doc.entry = StateEntry{*value, version};
  json parsed = json::parse(string_of(*value), nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) {
    doc.parsed = std::move(parsed);
  }
  entries_[key] = std::move(doc);
}

std::vector<std::string> DocumentStoreState::select_equals(
    const std::string& field, const json& value) const {
  std::vector<std::string> out;
  for (const auto& [key, doc] : entries_) {
    if (!doc.parsed) continue;
    auto it = doc.parsed->find(field);
    if (it != doc.parsed->end() && *it == value) out.push_back(key);
  }
  return out;
}

std::string prefix_end(const std::string& prefix) {
  // Smallest ASCII string above every key with this prefix. Bounds end up in
  // recorded range reads, which are JSON strings, so they must stay valid
  // UTF-8 (state keys are ASCII by construction).
  std::string end = prefix;
  while (!end.empty()) {
    if (static_cast<unsigned char>(end.back()) < 0x7f) {
      end.back() = static_cast<char>(end.back() + 1);
      return end;
    }
    end.pop_back();
  }
  return "\x7f";
}

Transaction make_genesis_transaction(const std::string& channel_id,
                                     const std::set<std::string>& members,
                                     const std::string& endorsement_policy,
                                     const identity::Certificate& creator) {
  json config{{"members", json(members)},
              {"endorsement_policy", endorsement_policy}};
  Bytes config_bytes = canonical::dump_bytes(config);

  Transaction tx;
  tx.channel_id = channel_id;
  tx.chaincode_id = "_config";
  tx.function = "create_channel";
  tx.args.push_back(config_bytes);
  tx.creator = creator;
  tx.nonce = Bytes(16, 0);
  tx.rw_set.writes.push_back({kConfigKey, config_bytes});
  tx.tx_id = tx.computed_tx_id();
  return tx;
}

Channel::Channel(std::string channel_id, std::set<std::string> members,
                 std::string endorsement_policy, Backend backend,
                 uint64_t genesis_time, const identity::Certificate& creator)
    : channel_id_(std::move(channel_id)),
      members_(std::move(members)),
      endorsement_policy_(std::move(endorsement_policy)),
      state_(WorldState::make(backend)) {
  Block genesis;
  genesis.number = 0;
  genesis.prev_hash.fill(0);
  genesis.timestamp = genesis_time;
  genesis.transactions.push_back(make_genesis_transaction(
      channel_id_, members_, endorsement_policy_, creator));
  genesis.validation_flags.push_back(TxFlag::valid);
  genesis.seal();
  apply_block(genesis, true);
}

std::unique_ptr<Channel> Channel::replay(const std::vector<Block>& blocks,
                                         Backend backend) {
  if (blocks.empty() || blocks[0].transactions.size() != 1 ||
      blocks[0].transactions[0].chaincode_id != "_config") {
    raise(ErrorCode::parse_error, "chain does not start with a config block");
  }
  const Transaction& config_tx = blocks[0].transactions[0];
  json config = json::parse(string_of(config_tx.args.at(0)));

  auto channel = std::unique_ptr<Channel>(new Channel());
  channel->channel_id_ = config_tx.channel_id;
  for (const auto& m : config.at("members")) {
    channel->members_.insert(m.get<std::string>());
  }
  channel->endorsement_policy_ = config.at("endorsement_policy").get<std::string>();
  channel->state_ = WorldState::make(backend);
  // Tolerant load: a tampered chain must still load so verify_chain can name
  // the broken block. Callers that care run verify_chain right after.
  for (const auto& block : blocks) channel->apply_block(block, false);
  return channel;
}

void Channel::apply_block(const Block& block, bool strict) {
  if (strict) {
    if (block.number != blocks_.size()) {
      raise(ErrorCode::out_of_order,
            "expected block " + std::to_string(blocks_.size()) + ", got " +
                std::to_string(block.number));
    }
    crypto::Digest expected_prev{};
    if (!blocks_.empty()) expected_prev = blocks_.back().header_hash;
    if (block.prev_hash != expected_prev) {
      raise(ErrorCode::chain_mismatch,
            "prev_hash of block " + std::to_string(block.number) +
                " does not match the chain head");
    }
    if (block.validation_flags.size() != block.transactions.size()) {
      raise(ErrorCode::chain_mismatch, "validation flags length mismatch");
    }
  }

  for (size_t i = 0; i < block.transactions.size(); ++i) {
    if (i >= block.validation_flags.size()) break;
    if (block.validation_flags[i] != TxFlag::valid) continue;
    const Transaction& tx = block.transactions[i];
    Version version{block.number, i};
    for (const auto& w : tx.rw_set.writes) {
      state_->apply(w.key, w.value, version);
      history_[w.key].push_back(
          HistoryEntry{tx.tx_id, w.value, block.timestamp, version});
    }
  }
  for (size_t i = 0; i < block.transactions.size(); ++i) {
    tx_index_[block.transactions[i].tx_id] = {block.number, i};
  }
  blocks_.push_back(block);
}

void Channel::append_block(Block block) {
  std::unique_lock lock(mutex_);
  append_block_locked(std::move(block));
}

void Channel::append_block_locked(Block block) {
  block.seal();
  apply_block(block);
}

uint64_t Channel::height() const {
  std::shared_lock lock(mutex_);
  return blocks_.size();
}

crypto::Digest Channel::head_header_hash() const {
  std::shared_lock lock(mutex_);
  return head_header_hash_unlocked();
}

crypto::Digest Channel::head_header_hash_unlocked() const {
  if (blocks_.empty()) {
    crypto::Digest zero{};
    return zero;
  }
  return blocks_.back().header_hash;
}

uint64_t Channel::head_timestamp_unlocked() const {
  return blocks_.empty() ? 0 : blocks_.back().timestamp;
}

uint64_t Channel::head_timestamp() const {
  std::shared_lock lock(mutex_);
  return head_timestamp_unlocked();
}

std::optional<StateEntry> Channel::state_get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  return state_->get(key);
}

std::vector<std::tuple<std::string, Bytes, Version>> Channel::range_query(
    const std::string& start, const std::string& end) const {
  std::shared_lock lock(mutex_);
  return state_->range(start, end);
}

std::vector<HistoryEntry> Channel::history_query(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = history_.find(key);
  if (it == history_.end()) return {};
  return it->second;
}

const std::vector<HistoryEntry>* Channel::history_nolock(
    const std::string& key) const {
  auto it = history_.find(key);
  if (it == history_.end()) return nullptr;
  return &it->second;
}

Block Channel::get_block(uint64_t number) const {
  std::shared_lock lock(mutex_);
  if (number >= blocks_.size()) {
    raise(ErrorCode::not_found, "no block " + std::to_string(number));
  }
  return blocks_[number];
}

std::tuple<uint64_t, Transaction, TxFlag> Channel::get_transaction(
    const std::string& tx_id) const {
  std::shared_lock lock(mutex_);
  auto it = tx_index_.find(tx_id);
  if (it == tx_index_.end()) {
    raise(ErrorCode::not_found, "no transaction " + tx_id);
  }
  const auto& [block_num, tx_num] = it->second;
  const Block& block = blocks_[block_num];
  return {block_num, block.transactions[tx_num], block.validation_flags[tx_num]};
}

std::optional<uint64_t> Channel::verify_chain() const {
  std::shared_lock lock(mutex_);
  crypto::Digest expected_prev{};
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    if (b.number != i) return i;
    if (b.validation_flags.size() != b.transactions.size()) return i;
    if (b.prev_hash != expected_prev) return i;
    if (Block::compute_data_hash(b.transactions) != b.data_hash) return i;
    if (b.compute_header_hash() != b.header_hash) return i;
    expected_prev = b.header_hash;
  }
  return std::nullopt;
}

std::vector<Block> Channel::all_blocks() const {
  std::shared_lock lock(mutex_);
  return blocks_;
}

}  // namespace iotchain::ledger
