// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "iotchain/linewire.hpp"
#include "iotchain/txflow.hpp"

namespace iotchain::net {

// Localhost port assignment in TCP mode, derived from config order:
// orderer at base, the i-th peer (flattened across orgs) at base+1+i,
// the broker at base+100.
struct PortMap {
  uint16_t base = 18520;

  uint16_t orderer() const { return base; }
  uint16_t peer(size_t flat_index) const {
    return static_cast<uint16_t>(base + 1 + flat_index);
  }
  uint16_t broker() const { return static_cast<uint16_t>(base + 100); }

  // (org, port) in config order, one endorsing peer per org.
  static std::vector<std::pair<std::string, uint16_t>> peer_ports(
      const NetworkConfig& config, uint16_t base);
};

// Socket endpoints for a running network: one endorse server per org peer and
// one orderer server accepting full submit-and-await round trips.
class RpcServers {
public:
  RpcServers(txflow::Network& network, uint16_t base_port);
  ~RpcServers();

  void start();
  void stop();
  uint16_t base_port() const { return base_port_; }

private:
  txflow::Network& network_;
  uint16_t base_port_;
  std::vector<std::unique_ptr<LineServer>> peer_servers_;
  std::unique_ptr<LineServer> orderer_server_;
};

// Client-side pipeline over sockets; mirrors Network::submit_and_await and
// Network::query for out-of-process callers.
class RpcPipeline {
public:
  RpcPipeline(const NetworkConfig& config, uint16_t base_port);

  txflow::CommitResult submit_and_await(const txflow::Proposal& proposal,
                                        uint64_t deadline_ms = 10'000);
  Bytes query(const txflow::Proposal& proposal);

private:
  struct PeerEndpoint {
    std::string org;
    uint16_t port;
  };

  NetworkConfig config_;
  uint16_t base_port_;
  std::vector<PeerEndpoint> peers_;
};

}  // namespace iotchain::net
