// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/txflow.hpp"

#include <algorithm>
#include <chrono>

#include "iotchain/errors.hpp"

namespace iotchain::txflow {

uint64_t system_time_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

double steady_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

json Proposal::canonical_json() const {
  json jargs = json::array();
  for (const auto& a : args) jargs.push_back(to_base64(a));
  return json{{"channel_id", channel_id},
              {"chaincode_id", chaincode_id},
              {"function", function},
              {"args", std::move(jargs)},
              {"creator", creator.canonical_json()},
              {"nonce", canonical::bytes_field(nonce)}};
}

Bytes Proposal::canonical_bytes() const {
  return canonical::dump_bytes(canonical_json());
}

std::string Proposal::tx_id() const {
  return crypto::sha256_hex(canonical::dump(canonical_json()));
}

void Proposal::sign(const Bytes& private_key) {
  client_signature = crypto::sign(private_key, canonical_bytes());
}

bool Proposal::verify_signature() const {
  return crypto::verify(creator.public_key, canonical_bytes(), client_signature);
}

json Proposal::to_json() const {
  json j = canonical_json();
  j["client_signature"] = canonical::bytes_field(client_signature);
  return j;
}

Proposal Proposal::from_json(const json& j) {
  Proposal p;
  p.channel_id = j.at("channel_id").get<std::string>();
  p.chaincode_id = j.at("chaincode_id").get<std::string>();
  p.function = j.at("function").get<std::string>();
  for (const auto& a : j.at("args")) p.args.push_back(from_base64(a.get<std::string>()));
  p.creator = identity::Certificate::from_canonical_json(j.at("creator"));
  p.nonce = canonical::parse_bytes(j.at("nonce"));
  p.client_signature = canonical::parse_bytes(j.at("client_signature"));
  return p;
}

ChaincodeContext::ChaincodeContext(const ledger::Channel::SnapshotView& view,
                                   const identity::MspRegistry& msp,
                                   const Proposal& proposal)
    : view_(view), msp_(msp), proposal_(proposal), tx_id_(proposal.tx_id()) {}

std::optional<Bytes> ChaincodeContext::get(const std::string& key) {
  auto pending = writes_.find(key);
  if (pending != writes_.end()) {
    return pending->second;  // read-your-writes; no snapshot read recorded
  }
  auto entry = view_.state.get(key);
  if (!reads_.count(key)) {
    reads_[key] = entry ? std::optional(entry->version) : std::nullopt;
  }
  if (!entry) return std::nullopt;
  return entry->value;
}

void ChaincodeContext::put(const std::string& key, Bytes value) {
  writes_[key] = std::move(value);
}

void ChaincodeContext::del(const std::string& key) {
  writes_[key] = std::nullopt;
}

std::vector<std::tuple<std::string, Bytes, ledger::Version>> ChaincodeContext::range(
    const std::string& start, const std::string& end) {
  auto rows = view_.state.range(start, end);
  ledger::ReadWriteSet::RangeRead rr;
  rr.start = start;
  rr.end = end;
  for (const auto& [key, value, version] : rows) {
    rr.observed.emplace_back(key, version);
  }
  range_reads_.push_back(std::move(rr));
  return rows;
}

std::vector<ledger::HistoryEntry> ChaincodeContext::history(
    const std::string& key) const {
  const auto* entries = view_.channel.history_nolock(key);
  if (!entries) return {};
  return *entries;
}

ledger::ReadWriteSet ChaincodeContext::take_rw_set() {
  ledger::ReadWriteSet rw;
  for (const auto& [key, version] : reads_) {
    rw.reads.push_back({key, version});
  }
  for (const auto& [key, value] : writes_) {
    rw.writes.push_back({key, value});
  }
  rw.range_reads = range_reads_;
  return rw;
}

std::string deployed_key(const std::string& chaincode_id) {
  return "_chaincode/" + chaincode_id;
}

Peer::Peer(std::string name, std::string org, identity::Certificate cert,
           crypto::KeyPair keys, const identity::MspRegistry& msp,
           const ChaincodeRegistry& chaincodes,
           std::function<ledger::Channel*(const std::string&)> channel_lookup,
           std::function<uint64_t()> clock)
    : name_(std::move(name)),
      org_(std::move(org)),
      cert_(std::move(cert)),
      keys_(std::move(keys)),
      msp_(msp),
      chaincodes_(chaincodes),
      channel_lookup_(std::move(channel_lookup)),
      clock_(std::move(clock)) {}

std::pair<ledger::Endorsement, ledger::ReadWriteSet> Peer::endorse(
    const Proposal& proposal) const {
  ledger::Channel* channel = channel_lookup_(proposal.channel_id);
  if (!channel) {
    raise(ErrorCode::unknown_channel, "no channel " + proposal.channel_id);
  }
  if (!channel->members().count(org_)) {
    raise(ErrorCode::not_member,
          "peer org " + org_ + " is not a member of " + proposal.channel_id);
  }
  if (!channel->members().count(proposal.creator.org)) {
    raise(ErrorCode::not_member, "creator org " + proposal.creator.org +
                                     " is not a member of " + proposal.channel_id);
  }
  identity::CertStatus status = msp_.validate(proposal.creator, clock_());
  if (status != identity::CertStatus::valid) {
    raise(ErrorCode::auth_failure,
          std::string("creator certificate ") + identity::cert_status_name(status));
  }
  if (!proposal.verify_signature()) {
    raise(ErrorCode::auth_failure, "proposal signature does not verify");
  }

  auto fn_it = chaincodes_.find(proposal.chaincode_id);
  if (fn_it == chaincodes_.end()) {
    raise(ErrorCode::chaincode_error, "unknown chaincode " + proposal.chaincode_id);
  }

  return channel->with_snapshot([&](const ledger::Channel::SnapshotView& view) {
    ChaincodeContext ctx(view, msp_, proposal);
    if (proposal.chaincode_id != kLifecycleChaincode) {
      if (!ctx.get(deployed_key(proposal.chaincode_id))) {
        raise(ErrorCode::chaincode_error,
              "chaincode " + proposal.chaincode_id + " is not deployed on " +
                  proposal.channel_id);
      }
    }
    Bytes payload = fn_it->second(ctx, proposal.function, proposal.args);
    ledger::ReadWriteSet rw_set = ctx.take_rw_set();

    ledger::Endorsement endorsement;
    endorsement.endorser = cert_;
    endorsement.rw_set_hash = rw_set.hash();
    endorsement.response_payload = std::move(payload);
    endorsement.signature = crypto::sign(
        keys_.private_key,
        ledger::Endorsement::signed_bytes(ctx.tx_id(), endorsement.rw_set_hash,
                                          endorsement.response_payload));
    return std::make_pair(std::move(endorsement), std::move(rw_set));
  });
}

bool check_policy(const EndorsementPolicy& policy,
                  const std::vector<ledger::Endorsement>& endorsements) {
  std::set<std::string> orgs;
  for (size_t i = 0; i < endorsements.size(); ++i) {
    if (endorsements[i].rw_set_hash != endorsements[0].rw_set_hash) {
      raise(ErrorCode::mixed_read_write_sets,
            "endorsements carry different read/write set hashes");
    }
    orgs.insert(endorsements[i].endorser.org);
  }
  return policy.satisfied_by(orgs);
}

void SoloOrderer::submit(ledger::Transaction tx, uint64_t now_ms) {
  std::lock_guard lock(mutex_);
  auto& batch = pending_[tx.channel_id];
  if (batch.txs.empty()) batch.first_arrival_ms = now_ms;
  batch.txs.push_back(std::move(tx));
}

std::vector<std::pair<std::string, ledger::Block>> SoloOrderer::cut_ready(
    uint64_t now_ms, bool force) {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::string, ledger::Block>> out;
  for (auto& [channel_id, batch] : pending_) {
    while (!batch.txs.empty() &&
           (force || batch.txs.size() >= config_.max_block_txs ||
            now_ms - batch.first_arrival_ms >= config_.batch_timeout_ms)) {
      size_t count = std::min<size_t>(batch.txs.size(), config_.max_block_txs);
      ledger::Block block;
      block.timestamp = now_ms;
      for (size_t i = 0; i < count; ++i) {
        block.transactions.push_back(std::move(batch.txs.front()));
        batch.txs.pop_front();
      }
      batch.first_arrival_ms = now_ms;  // restart the timeout for the remainder
      out.emplace_back(channel_id, std::move(block));
    }
  }
  return out;
}

bool SoloOrderer::has_pending() const {
  std::lock_guard lock(mutex_);
  for (const auto& [_, batch] : pending_) {
    if (!batch.txs.empty()) return true;
  }
  return false;
}

size_t SoloOrderer::pending_count(const std::string& channel_id) const {
  std::lock_guard lock(mutex_);
  auto it = pending_.find(channel_id);
  return it == pending_.end() ? 0 : it->second.txs.size();
}

std::optional<uint64_t> SoloOrderer::next_deadline(uint64_t now_ms) const {
  std::lock_guard lock(mutex_);
  std::optional<uint64_t> deadline;
  for (const auto& [_, batch] : pending_) {
    if (batch.txs.empty()) continue;
    uint64_t d = batch.first_arrival_ms + config_.batch_timeout_ms;
    if (d < now_ms) d = now_ms;
    if (!deadline || d < *deadline) deadline = d;
  }
  return deadline;
}

namespace {

// Validation-time view: committed state plus the writes of earlier Valid
// transactions in the same block.
class OverlayState {
public:
  explicit OverlayState(const ledger::WorldState& base) : base_(base) {}

  std::optional<ledger::Version> current_version(const std::string& key) const {
    auto it = pending_.find(key);
    if (it != pending_.end()) {
      if (!it->second) return std::nullopt;  // deleted in this block
      return it->second->version;
    }
    auto entry = base_.get(key);
    if (!entry) return std::nullopt;
    return entry->version;
  }

  std::vector<std::pair<std::string, ledger::Version>> range_versions(
      const std::string& start, const std::string& end) const {
    std::map<std::string, ledger::Version> merged;
    for (const auto& [key, value, version] : base_.range(start, end)) {
      (void)value;
      merged[key] = version;
    }
    for (const auto& [key, entry] : pending_) {
      if (key < start || key >= end) continue;
      if (entry) {
        merged[key] = entry->version;
      } else {
        merged.erase(key);
      }
    }
    return {merged.begin(), merged.end()};
  }

  void apply(const std::string& key, const std::optional<Bytes>& value,
             ledger::Version version) {
    if (value) {
      pending_[key] = ledger::StateEntry{*value, version};
    } else {
      pending_[key] = std::nullopt;
    }
  }

private:
  const ledger::WorldState& base_;
  std::map<std::string, std::optional<ledger::StateEntry>> pending_;
};

bool signatures_ok(const ledger::Transaction& tx, const identity::MspRegistry& msp,
                   uint64_t now_ms) {
  if (tx.computed_tx_id() != tx.tx_id) return false;
  if (msp.validate(tx.creator, now_ms) != identity::CertStatus::valid) return false;

  Proposal p;
  p.channel_id = tx.channel_id;
  p.chaincode_id = tx.chaincode_id;
  p.function = tx.function;
  p.args = tx.args;
  p.creator = tx.creator;
  p.nonce = tx.nonce;
  if (!crypto::verify(tx.creator.public_key, p.canonical_bytes(),
                      tx.client_signature)) {
    return false;
  }

  crypto::Digest rw_hash = tx.rw_set.hash();
  for (const auto& e : tx.endorsements) {
    if (e.endorser.role != identity::Role::peer) return false;
    if (msp.validate(e.endorser, now_ms) != identity::CertStatus::valid) return false;
    if (e.rw_set_hash != rw_hash) return false;
    if (!crypto::verify(e.endorser.public_key,
                        ledger::Endorsement::signed_bytes(tx.tx_id, e.rw_set_hash,
                                                          e.response_payload),
                        e.signature)) {
      return false;
    }
  }
  return true;
}

bool mvcc_ok(const ledger::Transaction& tx, const OverlayState& overlay) {
  for (const auto& read : tx.rw_set.reads) {
    if (overlay.current_version(read.key) != read.version) return false;
  }
  for (const auto& rr : tx.rw_set.range_reads) {
    if (overlay.range_versions(rr.start, rr.end) != rr.observed) return false;
  }
  return true;
}

}  // namespace

std::vector<ledger::TxFlag> validate_transactions(
    const ledger::Channel& channel, const std::vector<ledger::Transaction>& txs,
    uint64_t block_number, const EndorsementPolicy& policy,
    const identity::MspRegistry& msp, uint64_t now_ms) {
  OverlayState overlay(channel.state_unlocked());
  std::vector<ledger::TxFlag> flags;
  flags.reserve(txs.size());

  for (size_t i = 0; i < txs.size(); ++i) {
    const ledger::Transaction& tx = txs[i];

    if (!signatures_ok(tx, msp, now_ms)) {
      flags.push_back(ledger::TxFlag::bad_signature);
      continue;
    }
    std::set<std::string> endorsing_orgs;
    for (const auto& e : tx.endorsements) endorsing_orgs.insert(e.endorser.org);
    if (!channel.members().count(tx.creator.org) ||
        !policy.satisfied_by(endorsing_orgs)) {
      flags.push_back(ledger::TxFlag::policy_failure);
      continue;
    }
    if (!mvcc_ok(tx, overlay)) {
      flags.push_back(ledger::TxFlag::mvcc_conflict);
      continue;
    }
    flags.push_back(ledger::TxFlag::valid);
    for (const auto& w : tx.rw_set.writes) {
      overlay.apply(w.key, w.value, ledger::Version{block_number, i});
    }
  }
  return flags;
}

void Network::register_lifecycle_chaincode() {
  chaincodes_[kLifecycleChaincode] = [](ChaincodeContext& ctx,
                                        const std::string& function,
                                        const std::vector<Bytes>& args) -> Bytes {
    if (function != "deploy") {
      raise(ErrorCode::chaincode_error, "unknown lifecycle function " + function);
    }
    if (ctx.creator().role != identity::Role::admin) {
      raise(ErrorCode::unauthorized, "only admins deploy chaincode");
    }
    std::string chaincode_id = string_of(args.at(0));
    json record{{"chaincode_id", chaincode_id},
                {"deployed_tx", ctx.tx_id()},
                {"deployed_by", ctx.creator().subject}};
    ctx.put(deployed_key(chaincode_id), canonical::dump_bytes(record));
    return canonical::dump_bytes(record);
  };
}

void Network::build_peer(const net::OrgSpec& org, const net::PeerSpec& peer_spec,
                         const identity::Certificate& cert, crypto::KeyPair keys) {
  if (peers_.count(org.name)) return;  // one endorsing peer per org
  peers_.emplace(org.name,
                 Peer(peer_spec.name, org.name, cert, std::move(keys), msp_,
                      chaincodes_,
                      [this](const std::string& id) { return find_channel(id); },
                      options_.clock));
}

namespace {

OrdererConfig orderer_config_of(const net::NetworkConfig& config) {
  OrdererConfig oc;
  oc.mode = config.orderer.mode;
  oc.max_block_txs = config.orderer.max_block_txs;
  oc.batch_timeout_ms = config.orderer.batch_timeout_ms;
  return oc;
}

}  // namespace

Network::Network(const net::NetworkConfig& config, NetworkOptions opts)
    : config_(config), options_(std::move(opts)), orderer_(orderer_config_of(config)) {
  config_.validate();
  if (!options_.clock) options_.clock = system_time_ms;
  uint64_t now = options_.clock();
  register_lifecycle_chaincode();

  // one CA per org plus the orderer org; roster mirrors the topology table:
  // per org a CA cert, a TLS-CA cert (collapsed issuer) and the peer certs,
  // plus the orderer's CA pair and node cert.
  auto build_org = [&](const std::string& org_name, const std::string& ca_name,
                       const std::string& tls_name) -> identity::Ca& {
    auto [it, _] = cas_.emplace(org_name, identity::Ca(ca_name, org_name, msp_));
    identity::Ca& ca = it->second;
    roster_.push_back(ca.issue_self(options_.cert_validity_ms, now));
    node_keys_[ca_name] = ca.key_pair();  // CA identities double as org admins
    crypto::KeyPair tls_keys = crypto::generate_keypair();
    roster_.push_back(ca.issue(tls_name, identity::Role::admin,
                               tls_keys.public_key, options_.cert_validity_ms, now));
    node_keys_[tls_name] = std::move(tls_keys);
    return ca;
  };

  for (const auto& org : config_.orgs) {
    identity::Ca& ca = build_org(org.name, org.ca, org.tls_ca_name());
    for (const auto& peer_spec : org.peers) {
      crypto::KeyPair keys = crypto::generate_keypair();
      identity::Certificate cert =
          ca.issue(peer_spec.name, identity::Role::peer, keys.public_key,
                   options_.cert_validity_ms, now);
      roster_.push_back(cert);
      node_keys_[peer_spec.name] = keys;
      build_peer(org, peer_spec, cert, std::move(keys));
    }
  }

  identity::Ca& orderer_ca =
      build_org(net::kOrdererOrg, net::kOrdererCa, "Orderer-TLS-CA");
  crypto::KeyPair orderer_keys = crypto::generate_keypair();
  identity::Certificate orderer_cert =
      orderer_ca.issue(net::kOrdererNode, identity::Role::orderer,
                       orderer_keys.public_key, options_.cert_validity_ms, now);
  roster_.push_back(orderer_cert);
  node_keys_[net::kOrdererNode] = orderer_keys;
  orderer_identity_ = NodeIdentity{orderer_cert, std::move(orderer_keys)};

  start();
}

Network::Network(const net::NetworkConfig& config, NetworkOptions opts,
                 const NetworkState& state)
    : config_(config), options_(std::move(opts)), orderer_(orderer_config_of(config)) {
  config_.validate();
  if (!options_.clock) options_.clock = system_time_ms;
  register_lifecycle_chaincode();

  msp_.merge_json(state.msp);
  for (const auto& jca : state.cas) {
    identity::Ca ca = identity::Ca::from_json(jca, msp_);
    cas_.emplace(ca.org(), std::move(ca));
  }
  for (const auto& [subject, jkeys] : state.node_keys) {
    crypto::KeyPair kp;
    if (jkeys.contains("public_key")) {
      kp.public_key = from_base64(jkeys.at("public_key").get<std::string>());
      kp.private_key = from_base64(jkeys.at("private_key").get<std::string>());
    }
    node_keys_[subject] = std::move(kp);
  }
  for (const auto& subject : state.roster_subjects) {
    auto cert = msp_.member(subject);
    if (cert) roster_.push_back(*cert);
  }

  for (const auto& org : config_.orgs) {
    for (const auto& peer_spec : org.peers) {
      auto cert = msp_.member(peer_spec.name);
      auto keys = node_keys_.find(peer_spec.name);
      if (!cert || keys == node_keys_.end()) {
        raise(ErrorCode::config_error,
              "persisted state is missing peer identity " + peer_spec.name);
      }
      build_peer(org, peer_spec, *cert, keys->second);
    }
  }
  auto orderer_cert = msp_.member(net::kOrdererNode);
  auto orderer_keys = node_keys_.find(net::kOrdererNode);
  if (!orderer_cert || orderer_keys == node_keys_.end()) {
    raise(ErrorCode::config_error, "persisted state is missing the orderer identity");
  }
  orderer_identity_ = NodeIdentity{*orderer_cert, orderer_keys->second};

  start();
}

NetworkState Network::export_state() const {
  NetworkState state;
  state.msp = msp_.to_json();
  for (const auto& [_, ca] : cas_) state.cas.push_back(ca.to_json());
  {
    std::lock_guard lock(node_keys_mutex_);
    for (const auto& [subject, kp] : node_keys_) {
      if (kp.public_key.empty()) continue;
      state.node_keys[subject] = json{{"public_key", to_base64(kp.public_key)},
                                      {"private_key", to_base64(kp.private_key)}};
    }
  }
  for (const auto& cert : roster_) state.roster_subjects.push_back(cert.subject);
  return state;
}

crypto::KeyPair Network::node_keys(const std::string& subject) const {
  std::lock_guard lock(node_keys_mutex_);
  auto it = node_keys_.find(subject);
  if (it == node_keys_.end() || it->second.public_key.empty()) {
    raise(ErrorCode::not_found, "no key material for " + subject);
  }
  return it->second;
}

NodeIdentity Network::identity_of(const std::string& subject) const {
  auto cert = msp_.member(subject);
  if (!cert) raise(ErrorCode::not_found, "no certificate for " + subject);
  return NodeIdentity{*cert, node_keys(subject)};
}

Network::~Network() {
  stop();
}

identity::Ca& Network::ca(const std::string& org) {
  auto it = cas_.find(org);
  if (it == cas_.end()) {
    raise(ErrorCode::unknown_issuer, "no certificate authority for org " + org);
  }
  return it->second;
}

NodeIdentity Network::issue_identity(const std::string& subject,
                                     const std::string& org, identity::Role role,
                                     uint64_t validity_ms) {
  if (validity_ms == 0) validity_ms = options_.cert_validity_ms;
  crypto::KeyPair keys = crypto::generate_keypair();
  identity::Certificate cert =
      ca(org).issue(subject, role, keys.public_key, validity_ms, options_.clock());
  {
    std::lock_guard lock(node_keys_mutex_);
    node_keys_[subject] = keys;
  }
  return NodeIdentity{cert, std::move(keys)};
}

Peer& Network::peer_for_org(const std::string& org) {
  auto it = peers_.find(org);
  if (it == peers_.end()) {
    raise(ErrorCode::not_member, "org " + org + " has no peer");
  }
  return it->second;
}

ledger::Channel& Network::channel(const std::string& id) {
  ledger::Channel* ch = find_channel(id);
  if (!ch) raise(ErrorCode::unknown_channel, "no channel " + id);
  return *ch;
}

ledger::Channel* Network::find_channel(const std::string& id) {
  std::lock_guard lock(channels_mutex_);
  auto it = channels_.find(id);
  return it == channels_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Network::channel_ids() const {
  std::lock_guard lock(channels_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : channels_) out.push_back(id);
  return out;
}

ledger::Channel& Network::create_channel(const std::string& id) {
  const net::ChannelSpec* spec = config_.find_channel(id);
  if (!spec) {
    raise(ErrorCode::config_error, "channel " + id + " is not declared in the config");
  }
  std::set<std::string> members(spec->members.begin(), spec->members.end());
  std::string policy_expr = spec->endorsement_policy;
  if (policy_expr.empty()) {
    size_t quorum = std::min<size_t>(2, members.size());
    policy_expr = "OUTOF(" + std::to_string(quorum);
    for (const auto& m : members) policy_expr += "," + m;
    policy_expr += ")";
  }
  EndorsementPolicy policy = EndorsementPolicy::parse(policy_expr);

  std::lock_guard lock(channels_mutex_);
  if (channels_.count(id)) {
    raise(ErrorCode::config_error, "channel " + id + " already exists");
  }
  auto ch = std::make_unique<ledger::Channel>(id, members, policy_expr,
                                              options_.backend, options_.clock(),
                                              orderer_identity_.cert);
  ledger::Channel& ref = *ch;
  channels_[id] = std::move(ch);
  policies_.emplace(id, std::move(policy));

  std::lock_guard hook_lock(hook_mutex_);
  if (commit_hook_) commit_hook_(id, ref.get_block(0));
  return ref;
}

ledger::Channel& Network::restore_channel(const std::vector<ledger::Block>& blocks) {
  auto ch = ledger::Channel::replay(blocks, options_.backend);
  EndorsementPolicy policy = EndorsementPolicy::parse(ch->endorsement_policy());
  std::lock_guard lock(channels_mutex_);
  std::string id = ch->id();
  if (channels_.count(id)) {
    raise(ErrorCode::config_error, "channel " + id + " already exists");
  }
  ledger::Channel& ref = *ch;
  channels_[id] = std::move(ch);
  policies_.emplace(id, std::move(policy));
  return ref;
}

void Network::deploy_chaincode(const std::string& channel_id,
                               const NodeIdentity& admin,
                               const std::string& chaincode_id) {
  Rng rng = Rng::from_entropy();
  Proposal p = make_proposal(admin, channel_id, kLifecycleChaincode, "deploy",
                             {bytes_of(chaincode_id)}, rng);
  CommitResult result = submit_and_await(std::move(p));
  if (result.flag != ledger::TxFlag::valid) {
    raise(ErrorCode::chaincode_error,
          std::string("chaincode deployment flagged ") +
              ledger::tx_flag_name(result.flag));
  }
}

bool Network::chaincode_deployed(const std::string& channel_id,
                                 const std::string& chaincode_id) {
  return channel(channel_id).state_get(deployed_key(chaincode_id)).has_value();
}

const EndorsementPolicy& Network::channel_policy(const std::string& channel_id) {
  std::lock_guard lock(channels_mutex_);
  auto it = policies_.find(channel_id);
  if (it == policies_.end()) {
    raise(ErrorCode::unknown_channel, "no channel " + channel_id);
  }
  return it->second;
}

Proposal Network::make_proposal(const NodeIdentity& client,
                                const std::string& channel_id,
                                const std::string& chaincode_id,
                                const std::string& function,
                                std::vector<Bytes> args, Rng& rng) const {
  Proposal p;
  p.channel_id = channel_id;
  p.chaincode_id = chaincode_id;
  p.function = function;
  p.args = std::move(args);
  p.creator = client.cert;
  p.nonce = rng.bytes(16);
  p.sign(client.keys.private_key);
  return p;
}

std::vector<ledger::Endorsement> Network::collect_endorsements(
    const Proposal& proposal, ledger::ReadWriteSet& rw_set_out) {
  ledger::Channel& ch = channel(proposal.channel_id);
  std::vector<ledger::Endorsement> endorsements;
  std::optional<crypto::Digest> rw_hash;
  std::optional<Error> first_error;

  for (const auto& org : ch.members()) {
    auto peer_it = peers_.find(org);
    if (peer_it == peers_.end()) continue;
    try {
      auto [endorsement, rw_set] = peer_it->second.endorse(proposal);
      if (!rw_hash) {
        rw_hash = endorsement.rw_set_hash;
        rw_set_out = std::move(rw_set);
      } else if (*rw_hash != endorsement.rw_set_hash) {
        raise(ErrorCode::mixed_read_write_sets,
              "peers returned different read/write sets for one proposal");
      }
      endorsements.push_back(std::move(endorsement));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::mixed_read_write_sets) throw;
      if (!first_error) first_error = e;
    }
  }

  if (endorsements.empty() && first_error) throw *first_error;
  if (!check_policy(channel_policy(proposal.channel_id), endorsements)) {
    if (first_error) throw *first_error;
    raise(ErrorCode::policy_error,
          "collected endorsements do not satisfy the channel policy");
  }
  return endorsements;
}

ledger::Transaction Network::assemble_transaction(
    const Proposal& proposal, std::vector<ledger::Endorsement> endorsements,
    ledger::ReadWriteSet rw_set) const {
  ledger::Transaction tx;
  tx.tx_id = proposal.tx_id();
  tx.channel_id = proposal.channel_id;
  tx.chaincode_id = proposal.chaincode_id;
  tx.function = proposal.function;
  tx.args = proposal.args;
  tx.creator = proposal.creator;
  tx.nonce = proposal.nonce;
  tx.rw_set = std::move(rw_set);
  tx.endorsements = std::move(endorsements);
  tx.client_signature = proposal.client_signature;
  return tx;
}

void Network::order_submit(ledger::Transaction tx) {
  {
    std::lock_guard lock(order_mutex_);
    orderer_.submit(std::move(tx), options_.clock());
  }
  order_cv_.notify_all();
}

void Network::register_waiter(const std::string& tx_id) {
  std::lock_guard lock(waiters_mutex_);
  waiters_.emplace(tx_id, std::nullopt);
}

std::optional<CommitResult> Network::await_commit(const std::string& tx_id,
                                                  uint64_t deadline_ms) {
  std::unique_lock lock(waiters_mutex_);
  bool done = waiters_cv_.wait_for(
      lock, std::chrono::milliseconds(deadline_ms),
      [&] { return waiters_.count(tx_id) && waiters_[tx_id].has_value(); });
  if (!done) {
    waiters_.erase(tx_id);
    return std::nullopt;
  }
  CommitResult result = *waiters_[tx_id];
  waiters_.erase(tx_id);
  return result;
}

CommitResult Network::submit_and_await(Proposal proposal, uint64_t deadline_ms) {
  if (deadline_ms == 0) deadline_ms = options_.default_deadline_ms;
  auto t0 = std::chrono::steady_clock::now();

  ledger::ReadWriteSet rw_set;
  std::vector<ledger::Endorsement> endorsements =
      collect_endorsements(proposal, rw_set);
  Bytes response = endorsements.front().response_payload;

  ledger::Transaction tx =
      assemble_transaction(proposal, std::move(endorsements), std::move(rw_set));
  std::string tx_id = tx.tx_id;

  register_waiter(tx_id);
  order_submit(std::move(tx));

  std::optional<CommitResult> result = await_commit(tx_id, deadline_ms);
  if (!result) {
    raise(ErrorCode::timeout,
          "no commit notification for " + tx_id + " within " +
              std::to_string(deadline_ms) + " ms");
  }
  result->latency_ms = steady_ms_since(t0);
  result->response = std::move(response);
  return *result;
}

Bytes Network::query(const Proposal& proposal) {
  ledger::Channel& ch = channel(proposal.channel_id);
  // Prefer the creator org's own peer for reads; fall back to any member peer.
  Peer* peer = nullptr;
  auto it = peers_.find(proposal.creator.org);
  if (it != peers_.end() && ch.members().count(proposal.creator.org)) {
    peer = &it->second;
  } else {
    for (const auto& org : ch.members()) {
      auto pit = peers_.find(org);
      if (pit != peers_.end()) {
        peer = &pit->second;
        break;
      }
    }
  }
  if (!peer) raise(ErrorCode::not_member, "no peer available for query");
  auto [endorsement, rw_set] = peer->endorse(proposal);
  (void)rw_set;
  return endorsement.response_payload;
}

void Network::start() {
  std::lock_guard lock(order_mutex_);
  if (running_) return;
  running_ = true;
  ordering_thread_ = std::thread([this] { ordering_loop(); });
}

void Network::stop() {
  {
    std::lock_guard lock(order_mutex_);
    if (!running_) return;
    running_ = false;
  }
  order_cv_.notify_all();
  if (ordering_thread_.joinable()) ordering_thread_.join();
}

void Network::stop_orderer() {
  orderer_stopped_ = true;
}

void Network::set_commit_hook(
    std::function<void(const std::string&, const ledger::Block&)> hook) {
  std::lock_guard lock(hook_mutex_);
  commit_hook_ = std::move(hook);
}

void Network::ordering_loop() {
  std::unique_lock lock(order_mutex_);
  while (running_) {
    uint64_t now = options_.clock();
    std::optional<uint64_t> deadline = orderer_.next_deadline(now);
    auto wait_for = std::chrono::milliseconds(
        deadline ? std::min<uint64_t>(*deadline - now + 1, 100) : 100);
    order_cv_.wait_for(lock, wait_for);
    if (!running_) break;
    if (orderer_stopped_) continue;

    auto ready = orderer_.cut_ready(options_.clock(), false);
    if (ready.empty()) continue;
    lock.unlock();
    for (auto& [channel_id, block] : ready) {
      commit_raw_block(channel_id, std::move(block));
    }
    lock.lock();
  }
}

void Network::commit_raw_block(const std::string& channel_id, ledger::Block block) {
  ledger::Channel* ch = find_channel(channel_id);
  if (!ch) return;  // channel disappeared; nothing to notify

  const EndorsementPolicy& policy = channel_policy(channel_id);
  {
    std::unique_lock commit_lock(ch->commit_mutex());
    block.number = ch->height_unlocked();
    block.prev_hash = ch->head_header_hash_unlocked();
    block.validation_flags = validate_transactions(
        *ch, block.transactions, block.number, policy, msp_, options_.clock());
    ch->append_block_locked(block);
  }
  const ledger::Block& committed = ch->get_block(block.number);
  {
    std::lock_guard hook_lock(hook_mutex_);
    if (commit_hook_) commit_hook_(channel_id, committed);
  }
  notify_commit(committed, channel_id);
}

void Network::notify_commit(const ledger::Block& block,
                            const std::string& channel_id) {
  (void)channel_id;
  std::lock_guard lock(waiters_mutex_);
  bool notified = false;
  for (size_t i = 0; i < block.transactions.size(); ++i) {
    auto it = waiters_.find(block.transactions[i].tx_id);
    if (it == waiters_.end()) continue;
    CommitResult result;
    result.tx_id = block.transactions[i].tx_id;
    result.block_number = block.number;
    result.flag = block.validation_flags[i];
    it->second = std::move(result);
    notified = true;
  }
  if (notified) waiters_cv_.notify_all();
}

}  // namespace iotchain::txflow
