// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "iotchain/canonical.hpp"
#include "iotchain/topics.hpp"

namespace iotchain::broker {

// Frames are JSON objects, one per line on the wire:
//   connect   {type, client_id, clean, challenge_id, signature_b64}
//   connack   {type, session_present, code}
//   publish   {type, topic, payload_b64, qos, retain, packet_id?, dup?}
//   puback / pubrec / pubrel / pubcomp  {type, packet_id}
//   subscribe {type, packet_id, filters:[{filter, max_qos}]}
//   suback    {type, packet_id, granted:[qos-or-"refused"]}
//   disconnect{type}

struct GrantView {
  std::string resource;  // topic pattern or device id
  std::set<std::string> rights;
  uint64_t expires = 0;  // 0: never

  bool live_at(uint64_t now_ms) const { return expires == 0 || now_ms <= expires; }
  static GrantView from_json(const json& j);
};

struct VerifyOutcome {
  bool ok = false;
  std::string error;  // error code token when !ok
  std::string subject;
  std::vector<GrantView> rights;
};

// The broker's view of the ledger: challenge verification at connect time and
// the asynchronous store_asset bridge for captured topics.
class LedgerAuth {
public:
  virtual ~LedgerAuth() = default;
  virtual VerifyOutcome verify_challenge(const std::string& challenge_id,
                                         const Bytes& signature,
                                         uint64_t now_ms) = 0;
  virtual void bridge_store_asset(const std::string& device_id,
                                  const std::string& topic, const Bytes& payload,
                                  uint64_t timestamp_ms) = 0;
};

struct QueuedMessage {
  std::string topic;
  Bytes payload;
  int qos = 0;
  bool retain = false;  // set on retained-message deliveries
};

struct BrokerOptions {
  size_t inflight_window = 32;
  uint64_t retransmit_ms = 200;
  std::vector<std::string> bridge_filters;  // publishes matching these go on-chain
};

using SendFn = std::function<void(uint64_t conn, const json& frame)>;
using CloseFn = std::function<void(uint64_t conn)>;
using ClockFn = std::function<uint64_t()>;

// Session state machine per client. QoS 1 redeliveries may duplicate; QoS 2
// sends are serialized per session (one outstanding message) so receivers see
// exactly-once delivery in publish order even when the transport duplicates
// or reorders frames.
struct Session {
  std::string client_id;
  bool clean = true;
  bool connected = false;
  uint64_t conn = 0;
  std::vector<GrantView> rights;
  std::map<std::string, int> subscriptions;  // filter -> max qos

  struct OutMessage {
    QueuedMessage msg;
    enum class State { await_puback, await_pubrec, await_pubcomp } state;
    uint64_t last_send = 0;
  };
  std::map<uint16_t, OutMessage> inflight_out;
  std::set<uint16_t> inflight_in;  // QoS 2 receive dedup until pubrel
  std::deque<QueuedMessage> offline_queue;
  std::deque<QueuedMessage> backlog;  // connected, waiting for window space
  uint16_t next_packet_id = 1;

  bool qos2_busy() const;
  uint16_t allocate_packet_id();
};

class Broker {
public:
  Broker(BrokerOptions options, LedgerAuth& ledger, SendFn send, CloseFn close,
         ClockFn clock);

  void handle_frame(uint64_t conn, const json& frame);
  void on_connection_closed(uint64_t conn);
  void tick(uint64_t now_ms);  // retransmissions

  // Introspection for tests and the admin surface.
  const Session* session(const std::string& client_id) const;
  size_t session_count() const { return sessions_.size(); }
  const std::map<std::string, QueuedMessage>& retained() const { return retained_; }
  // True while any connected session still has unacknowledged or backlogged
  // deliveries (i.e. tick() can still make progress).
  bool has_pending_deliveries() const;

private:
  void handle_connect(uint64_t conn, const json& frame);
  void handle_subscribe(Session& session, const json& frame);
  void handle_publish(Session& session, const json& frame);
  void handle_disconnect(Session& session, uint64_t conn);

  bool authorized_subscribe(const Session& session, const std::string& filter) const;
  bool authorized_publish(const Session& session, const std::string& topic) const;

  void route(const std::string& publisher, const std::string& topic,
             const Bytes& payload, int qos);
  void deliver(Session& session, QueuedMessage msg);
  void send_out(Session& session, QueuedMessage msg);
  void drain_backlog(Session& session);
  void resume_session(Session& session);

  Session* session_for_conn(uint64_t conn);

  BrokerOptions options_;
  LedgerAuth& ledger_;
  SendFn send_;
  CloseFn close_;
  ClockFn clock_;

  std::map<std::string, Session> sessions_;
  std::map<uint64_t, std::string> conn_to_client_;
  std::map<std::string, QueuedMessage> retained_;
};

// Client-side protocol engine: drives connect/subscribe/publish, acks inbound
// deliveries, retransmits unacknowledged sends, and deduplicates QoS 2.
class BrokerClient {
public:
  struct Options {
    std::string client_id;
    bool clean = true;
    size_t inflight_window = 32;
    uint64_t retransmit_ms = 200;
  };

  struct Delivery {
    std::string topic;
    Bytes payload;
    int qos = 0;
    bool retain = false;
    bool dup = false;
  };

  BrokerClient(Options options, SendFn send, ClockFn clock);

  void connect(const std::string& challenge_id, const Bytes& signature);
  void subscribe(const std::vector<std::pair<std::string, int>>& filters);
  void publish(const std::string& topic, const Bytes& payload, int qos,
               bool retain = false);
  void disconnect();

  void handle_frame(const json& frame);
  void tick(uint64_t now_ms);

  // Pre-flight authorization: optional, mirrors the caller's known grants so
  // misuse fails locally instead of being silently dropped by the broker.
  void set_local_rights(std::vector<GrantView> rights);

  bool connack_received() const { return connack_.has_value(); }
  bool connected() const { return connected_; }
  bool session_present() const;
  const std::string& connack_code() const;
  const std::vector<json>& suback_granted() const { return subacks_; }

  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  std::vector<Delivery>& deliveries() { return deliveries_; }

  bool idle() const;  // no outstanding outbound state
  size_t inflight_count() const { return inflight_out_.size(); }

  const Options& options() const { return options_; }
  // Called by the transport when the broker closes the connection.
  void on_closed();

private:
  struct OutMessage {
    json frame;
    enum class State { await_puback, await_pubrec, await_pubcomp } state;
    uint64_t last_send = 0;
  };

  void send_publish_frame(const json& frame, OutMessage::State state);
  void pump_pending();
  uint16_t allocate_packet_id();

  Options options_;
  SendFn send_;
  ClockFn clock_;

  bool connected_ = false;
  std::optional<json> connack_;
  std::vector<json> subacks_;
  std::optional<std::vector<GrantView>> local_rights_;

  std::map<uint16_t, OutMessage> inflight_out_;
  std::deque<json> pending_qos2_;  // serialized: one outstanding QoS 2 publish
  std::set<uint16_t> seen_qos2_;   // receive-side dedup
  uint16_t next_packet_id_ = 1;
  std::vector<Delivery> deliveries_;
};

}  // namespace iotchain::broker
