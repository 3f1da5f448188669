// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <filesystem>
#include <memory>

#include "iotchain/txflow.hpp"

namespace iotchain::storage {

// Data-directory layout shared by all CLI commands:
//   network.json                    topology config + state backend
//   msp/registry.json               roots, members, revocations
//   msp/cas.json                    CA signing states (operator secrets)
//   msp/node_keys.json              key pairs of issued identities
//   msp/roster.json                 topology node subjects
//   certs/<subject>.cert.json       certificate files
//   keys/<subject>.key.json         key pair files
//   channels/<id>/block_<n>.json    canonical block files
class DataDir {
public:
  explicit DataDir(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  bool initialized() const;

  void initialize(const net::NetworkConfig& config, ledger::Backend backend);

  net::NetworkConfig load_config() const;
  ledger::Backend load_backend() const;

  void save_network_state(const txflow::Network& network) const;
  txflow::NetworkState load_network_state() const;

  // Network with restored identities, replayed channels, and a commit hook
  // that appends every new block to disk.
  std::unique_ptr<txflow::Network> load_network(
      txflow::NetworkOptions options = {}) const;

  void write_cert_file(const identity::Certificate& cert) const;
  void write_key_file(const std::string& subject, const crypto::KeyPair& keys) const;
  void write_identity_files(const txflow::Network& network) const;

  void write_block_file(const std::string& channel_id,
                        const ledger::Block& block) const;
  // Loads block files in order; parse failures raise parse_error naming the
  // offending file.
  std::vector<ledger::Block> load_blocks(const std::string& channel_id) const;
  std::vector<std::string> channel_ids() const;

  std::filesystem::path channel_dir(const std::string& channel_id) const;
  std::filesystem::path block_path(const std::string& channel_id,
                                   uint64_t number) const;

private:
  std::filesystem::path root_;
};

json read_json_file(const std::filesystem::path& path);  // io_error / parse_error
void write_json_file(const std::filesystem::path& path, const json& value,
                     int indent = 2);

}  // namespace iotchain::storage
