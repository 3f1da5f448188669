// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/storage.hpp"

#include <fstream>

#include "iotchain/errors.hpp"

namespace iotchain::storage {

namespace fs = std::filesystem;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot read " + path.string());
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) {
    raise(ErrorCode::parse_error, "invalid JSON in " + path.string());
  }
  return parsed;
}

void write_json_file(const fs::path& path, const json& value, int indent) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot write " + path.string());
  out << value.dump(indent);
  if (indent >= 0) out << "\n";
  if (!out) raise(ErrorCode::io_error, "failed writing " + path.string());
}

bool DataDir::initialized() const {
  return fs::exists(root_ / "network.json");
}

void DataDir::initialize(const net::NetworkConfig& config, ledger::Backend backend) {
  fs::create_directories(root_);
  json meta = config.to_json();
  meta["state_db"] = ledger::backend_name(backend);
  write_json_file(root_ / "network.json", meta);
}

net::NetworkConfig DataDir::load_config() const {
  return net::NetworkConfig::from_json(read_json_file(root_ / "network.json"));
}

ledger::Backend DataDir::load_backend() const {
  json meta = read_json_file(root_ / "network.json");
  return ledger::backend_from_string(meta.value("state_db", "embedded-kv"));
}

void DataDir::save_network_state(const txflow::Network& network) const {
  txflow::NetworkState state = network.export_state();
  write_json_file(root_ / "msp" / "registry.json", state.msp);
  write_json_file(root_ / "msp" / "cas.json", json(state.cas));
  json keys = json::object();
  for (const auto& [subject, kp] : state.node_keys) keys[subject] = kp;
  write_json_file(root_ / "msp" / "node_keys.json", keys);
  write_json_file(root_ / "msp" / "roster.json", json(state.roster_subjects));
}

txflow::NetworkState DataDir::load_network_state() const {
  txflow::NetworkState state;
  state.msp = read_json_file(root_ / "msp" / "registry.json");
  for (const auto& ca : read_json_file(root_ / "msp" / "cas.json")) {
    state.cas.push_back(ca);
  }
  for (const auto& [subject, kp] :
       read_json_file(root_ / "msp" / "node_keys.json").items()) {
    state.node_keys[subject] = kp;
  }
  for (const auto& s : read_json_file(root_ / "msp" / "roster.json")) {
    state.roster_subjects.push_back(s.get<std::string>());
  }
  return state;
}

std::unique_ptr<txflow::Network> DataDir::load_network(
    txflow::NetworkOptions options) const {
  if (!initialized()) {
    raise(ErrorCode::config_error,
          "data directory " + root_.string() + " is not initialized (run network up)");
  }
  net::NetworkConfig config = load_config();
  options.backend = load_backend();
  auto network = std::make_unique<txflow::Network>(config, options,
                                                   load_network_state());
  for (const auto& channel_id : channel_ids()) {
    network->restore_channel(load_blocks(channel_id));
  }
  DataDir self = *this;
  network->set_commit_hook(
      [self](const std::string& channel_id, const ledger::Block& block) {
        self.write_block_file(channel_id, block);
      });
  return network;
}

void DataDir::write_cert_file(const identity::Certificate& cert) const {
  write_json_file(root_ / "certs" / (cert.subject + ".cert.json"), cert.to_json());
}

void DataDir::write_key_file(const std::string& subject,
                             const crypto::KeyPair& keys) const {
  write_json_file(root_ / "keys" / (subject + ".key.json"),
                  json{{"subject", subject},
                       {"public_key", to_base64(keys.public_key)},
                       {"private_key", to_base64(keys.private_key)}});
}

void DataDir::write_identity_files(const txflow::Network& network) const {
  txflow::NetworkState state = network.export_state();
  std::set<std::string> roster(state.roster_subjects.begin(),
                               state.roster_subjects.end());
  json members = state.msp.at("members");
  for (const auto& member : members) {
    identity::Certificate cert = identity::Certificate::from_json(member);
    write_cert_file(cert);
  }
  for (const auto& [subject, kp] : state.node_keys) {
    crypto::KeyPair keys;
    keys.public_key = from_base64(kp.at("public_key").get<std::string>());
    keys.private_key = from_base64(kp.at("private_key").get<std::string>());
    write_key_file(subject, keys);
  }
}

std::filesystem::path DataDir::channel_dir(const std::string& channel_id) const {
  return root_ / "channels" / channel_id;
}

std::filesystem::path DataDir::block_path(const std::string& channel_id,
                                          uint64_t number) const {
  return channel_dir(channel_id) / ("block_" + std::to_string(number) + ".json");
}

void DataDir::write_block_file(const std::string& channel_id,
                               const ledger::Block& block) const {
  fs::create_directories(channel_dir(channel_id));
  // canonical encoding, compact: the file bytes are the hashed representation
  std::ofstream out(block_path(channel_id, block.number), std::ios::trunc);
  if (!out) {
    raise(ErrorCode::io_error,
          "cannot write block file for channel " + channel_id);
  }
  out << canonical::dump(block.to_json());
}

std::vector<ledger::Block> DataDir::load_blocks(const std::string& channel_id) const {
  std::vector<ledger::Block> blocks;
  for (uint64_t number = 0;; ++number) {
    fs::path path = block_path(channel_id, number);
    if (!fs::exists(path)) break;
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_error, "cannot read " + path.string());
    json parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded()) {
      raise(ErrorCode::parse_error, "corrupt block file " + path.string());
    }
    try {
      blocks.push_back(ledger::Block::from_json(parsed));
    } catch (const Error& e) {
      raise(ErrorCode::parse_error,
            "corrupt block file " + path.string() + ": " + e.what());
    } catch (const json::exception& e) {
      raise(ErrorCode::parse_error,
            "corrupt block file " + path.string() + ": " + e.what());
    }
  }
  if (blocks.empty()) {
    raise(ErrorCode::unknown_channel,
          "no blocks stored for channel " + channel_id);
  }
  return blocks;
}

std::vector<std::string> DataDir::channel_ids() const {
  std::vector<std::string> out;
  fs::path dir = root_ / "channels";
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace iotchain::storage
