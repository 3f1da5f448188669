// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/netrpc.hpp"

#include "iotchain/errors.hpp"

namespace iotchain::net {

std::vector<std::pair<std::string, uint16_t>> PortMap::peer_ports(
    const NetworkConfig& config, uint16_t base) {
  PortMap map{base};
  std::vector<std::pair<std::string, uint16_t>> out;
  size_t flat = 0;
  for (const auto& org : config.orgs) {
    bool first = true;
    for (const auto& peer : org.peers) {
      (void)peer;
      if (first) out.emplace_back(org.name, map.peer(flat));
      first = false;
      ++flat;
    }
  }
  return out;
}

namespace {

json error_response(const Error& e) {
  return json{{"ok", false},
              {"code", error_code_name(e.code())},
              {"message", e.what()}};
}

}  // namespace

RpcServers::RpcServers(txflow::Network& network, uint16_t base_port)
    : network_(network), base_port_(base_port) {}

RpcServers::~RpcServers() {
  stop();
}

void RpcServers::start() {
  auto peer_ports = PortMap::peer_ports(network_.config(), base_port_);
  for (const auto& [org, port] : peer_ports) {
    auto server = std::make_unique<LineServer>();
    LineServer* raw = server.get();
    std::string org_name = org;
    server->start(
        port,
        [this, raw, org_name](uint64_t conn, const json& request) {
          json response;
          try {
            if (request.value("op", "") != "endorse") {
              raise(ErrorCode::bad_frame, "unknown peer op");
            }
            auto proposal = txflow::Proposal::from_json(request.at("proposal"));
            auto [endorsement, rw_set] =
                network_.peer_for_org(org_name).endorse(proposal);
            response = json{{"ok", true},
                            {"endorsement", endorsement.canonical_json()},
                            {"rw_set", rw_set.canonical_json()}};
          } catch (const Error& e) {
            response = error_response(e);
          } catch (const std::exception& e) {
            response = json{{"ok", false}, {"code", "INTERNAL"}, {"message", e.what()}};
          }
          raw->send(conn, response);
        },
        [](uint64_t) {});
    peer_servers_.push_back(std::move(server));
  }

  orderer_server_ = std::make_unique<LineServer>();
  LineServer* raw = orderer_server_.get();
  orderer_server_->start(
      PortMap{base_port_}.orderer(),
      [this, raw](uint64_t conn, const json& request) {
        json response;
        try {
          std::string op = request.value("op", "");
          if (op == "submit") {
            auto tx = ledger::Transaction::from_canonical_json(
                request.at("transaction"));
            network_.order_submit(std::move(tx));
            response = json{{"ok", true}};
          } else if (op == "submit_and_await") {
            auto tx = ledger::Transaction::from_canonical_json(
                request.at("transaction"));
            uint64_t deadline = request.value("deadline_ms", uint64_t{10'000});
            std::string tx_id = tx.tx_id;
            network_.register_waiter(tx_id);
            network_.order_submit(std::move(tx));
            auto result = network_.await_commit(tx_id, deadline);
            if (!result) {
              raise(ErrorCode::timeout,
                    "no commit notification for " + tx_id + " within " +
                        std::to_string(deadline) + " ms");
            }
            response = json{{"ok", true},
                            {"tx_id", result->tx_id},
                            {"block_number", result->block_number},
                            {"flag", ledger::tx_flag_name(result->flag)}};
          } else {
            raise(ErrorCode::bad_frame, "unknown orderer op");
          }
        } catch (const Error& e) {
          response = error_response(e);
        } catch (const std::exception& e) {
          response = json{{"ok", false}, {"code", "INTERNAL"}, {"message", e.what()}};
        }
        raw->send(conn, response);
      },
      [](uint64_t) {});
}

void RpcServers::stop() {
  for (auto& server : peer_servers_) {
    if (server) server->stop();
  }
  peer_servers_.clear();
  if (orderer_server_) {
    orderer_server_->stop();
    orderer_server_.reset();
  }
}

RpcPipeline::RpcPipeline(const NetworkConfig& config, uint16_t base_port)
    : config_(config), base_port_(base_port) {
  for (const auto& [org, port] : PortMap::peer_ports(config_, base_port_)) {
    peers_.push_back(PeerEndpoint{org, port});
  }
}

txflow::CommitResult RpcPipeline::submit_and_await(
    const txflow::Proposal& proposal, uint64_t deadline_ms) {
  auto t0 = std::chrono::steady_clock::now();

  const ChannelSpec* channel = config_.find_channel(proposal.channel_id);
  if (!channel) {
    raise(ErrorCode::unknown_channel,
          "channel " + proposal.channel_id + " is not in the config");
  }
  std::set<std::string> members(channel->members.begin(), channel->members.end());

  std::vector<ledger::Endorsement> endorsements;
  ledger::ReadWriteSet rw_set;
  std::optional<crypto::Digest> rw_hash;
  std::optional<Error> first_error;
  Bytes response_payload;

  for (const auto& peer : peers_) {
    if (!members.count(peer.org)) continue;
    try {
      LineClient client("127.0.0.1", peer.port);
      client.send(json{{"op", "endorse"}, {"proposal", proposal.to_json()}});
      auto reply = client.recv(deadline_ms);
      if (!reply) raise(ErrorCode::timeout, "peer endorse timed out");
      if (!reply->value("ok", false)) {
        raise(ErrorCode::auth_failure, reply->value("message", "endorse refused"));
      }
      auto endorsement =
          ledger::Endorsement::from_canonical_json(reply->at("endorsement"));
      if (!rw_hash) {
        rw_hash = endorsement.rw_set_hash;
        rw_set = ledger::ReadWriteSet::from_canonical_json(reply->at("rw_set"));
        response_payload = endorsement.response_payload;
      } else if (*rw_hash != endorsement.rw_set_hash) {
        raise(ErrorCode::mixed_read_write_sets,
              "peers returned different read/write sets");
      }
      endorsements.push_back(std::move(endorsement));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::mixed_read_write_sets) throw;
      if (!first_error) first_error = e;
    }
  }
  if (endorsements.empty()) {
    if (first_error) throw *first_error;
    raise(ErrorCode::policy_error, "no endorsements collected");
  }

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

  LineClient orderer("127.0.0.1", PortMap{base_port_}.orderer());
  orderer.send(json{{"op", "submit_and_await"},
                    {"transaction", tx.canonical_json()},
                    {"deadline_ms", deadline_ms}});
  auto reply = orderer.recv(deadline_ms + 1000);
  if (!reply) raise(ErrorCode::timeout, "orderer did not answer");
  if (!reply->value("ok", false)) {
    raise(ErrorCode::timeout, reply->value("message", "orderer refused"));
  }

  txflow::CommitResult result;
  result.tx_id = reply->at("tx_id").get<std::string>();
  result.block_number = reply->at("block_number").get<uint64_t>();
  result.flag = ledger::tx_flag_from_string(reply->at("flag").get<std::string>());
  result.latency_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  result.response = std::move(response_payload);
  return result;
}

Bytes RpcPipeline::query(const txflow::Proposal& proposal) {
  const ChannelSpec* channel = config_.find_channel(proposal.channel_id);
  if (!channel) {
    raise(ErrorCode::unknown_channel,
          "channel " + proposal.channel_id + " is not in the config");
  }
  std::set<std::string> members(channel->members.begin(), channel->members.end());

  // Prefer the creator org's peer, falling back to any member peer.
  const PeerEndpoint* chosen = nullptr;
  for (const auto& peer : peers_) {
    if (peer.org == proposal.creator.org && members.count(peer.org)) {
      chosen = &peer;
      break;
    }
  }
  if (!chosen) {
    for (const auto& peer : peers_) {
      if (members.count(peer.org)) {
        chosen = &peer;
        break;
      }
    }
  }
  if (!chosen) raise(ErrorCode::not_member, "no peer endpoint available");

  LineClient client("127.0.0.1", chosen->port);
  client.send(json{{"op", "endorse"}, {"proposal", proposal.to_json()}});
  auto reply = client.recv(10'000);
  if (!reply) raise(ErrorCode::timeout, "peer endorse timed out");
  if (!reply->value("ok", false)) {
    raise(ErrorCode::chaincode_error, reply->value("message", "endorse refused"));
  }
  auto endorsement =
      ledger::Endorsement::from_canonical_json(reply->at("endorsement"));
  return endorsement.response_payload;
}

}  // namespace iotchain::net
