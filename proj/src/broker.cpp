// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/broker.hpp"

#include "iotchain/errors.hpp"

namespace iotchain::broker {

GrantView GrantView::from_json(const json& j) {
  GrantView g;
  g.resource = j.at("resource").get<std::string>();
  for (const auto& r : j.at("rights")) g.rights.insert(r.get<std::string>());
  const auto& expires = j.at("expires");
  g.expires = expires.is_string() ? std::stoull(expires.get<std::string>())
                                  : expires.get<uint64_t>();
  return g;
}

bool Session::qos2_busy() const {
  for (const auto& [_, out] : inflight_out) {
    if (out.msg.qos == 2) return true;
  }
  return false;
}

uint16_t Session::allocate_packet_id() {
  for (int attempts = 0; attempts < 65535; ++attempts) {
    uint16_t pid = next_packet_id;
    next_packet_id = next_packet_id == 65535 ? 1 : next_packet_id + 1;
    if (!inflight_out.count(pid)) return pid;
  }
  raise(ErrorCode::quota_exceeded, "no free packet ids");
}

Broker::Broker(BrokerOptions options, LedgerAuth& ledger, SendFn send,
               CloseFn close, ClockFn clock)
    : options_(std::move(options)),
      ledger_(ledger),
      send_(std::move(send)),
      close_(std::move(close)),
      clock_(std::move(clock)) {}

Session* Broker::session_for_conn(uint64_t conn) {
  auto it = conn_to_client_.find(conn);
  if (it == conn_to_client_.end()) return nullptr;
  auto sit = sessions_.find(it->second);
  if (sit == sessions_.end()) return nullptr;
  return &sit->second;
}

const Session* Broker::session(const std::string& client_id) const {
  auto it = sessions_.find(client_id);
  return it == sessions_.end() ? nullptr : &it->second;
}

bool Broker::has_pending_deliveries() const {
  for (const auto& [_, session] : sessions_) {
    if (!session.connected) continue;
    if (!session.inflight_out.empty() || !session.backlog.empty()) return true;
  }
  return false;
}

void Broker::handle_frame(uint64_t conn, const json& frame) {
  std::string type = frame.value("type", "");
  if (type == "connect") {
    handle_connect(conn, frame);
    return;
  }
  Session* session = session_for_conn(conn);
  if (!session) {
    close_(conn);  // frames before connect are a protocol violation
    return;
  }
  if (type == "subscribe") {
    handle_subscribe(*session, frame);
  } else if (type == "publish") {
    handle_publish(*session, frame);
  } else if (type == "puback") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = session->inflight_out.find(pid);
    if (it != session->inflight_out.end() &&
        it->second.state == Session::OutMessage::State::await_puback) {
      session->inflight_out.erase(it);
    }
    drain_backlog(*session);
  } else if (type == "pubrec") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = session->inflight_out.find(pid);
    if (it != session->inflight_out.end() &&
        it->second.state == Session::OutMessage::State::await_pubrec) {
      it->second.state = Session::OutMessage::State::await_pubcomp;
      it->second.last_send = clock_();
    }
    send_(conn, json{{"type", "pubrel"}, {"packet_id", pid}});
  } else if (type == "pubrel") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    session->inflight_in.erase(pid);
    send_(conn, json{{"type", "pubcomp"}, {"packet_id", pid}});
  } else if (type == "pubcomp") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = session->inflight_out.find(pid);
    if (it != session->inflight_out.end() &&
        it->second.state == Session::OutMessage::State::await_pubcomp) {
      session->inflight_out.erase(it);
    }
    drain_backlog(*session);
  } else if (type == "disconnect") {
    handle_disconnect(*session, conn);
  } else {
    close_(conn);
  }
}

void Broker::handle_connect(uint64_t conn, const json& frame) {
  std::string client_id = frame.value("client_id", "");
  bool clean = frame.value("clean", true);

  auto refuse = [&](const std::string& code) {
    send_(conn, json{{"type", "connack"}, {"session_present", false}, {"code", code}});
    close_(conn);
  };

  if (client_id.empty()) {
    refuse("BAD_FRAME");
    return;
  }

  VerifyOutcome outcome;
  try {
    outcome = ledger_.verify_challenge(
        frame.value("challenge_id", ""),
        from_base64(frame.value("signature_b64", "")), clock_());
  } catch (const Error& e) {
    refuse(error_code_name(e.code()));
    return;
  }
  if (!outcome.ok) {
    refuse(outcome.error.empty() ? "AUTH_FAILURE" : outcome.error);
    return;
  }
  if (outcome.subject != client_id) {
    refuse("NOT_AUTHORIZED");  // challenge belongs to a different identity
    return;
  }

  // Session takeover: an existing live connection for this client loses.
  auto existing = sessions_.find(client_id);
  if (existing != sessions_.end() && existing->second.connected) {
    uint64_t old_conn = existing->second.conn;
    existing->second.connected = false;
    conn_to_client_.erase(old_conn);
    close_(old_conn);
  }

  bool session_present = existing != sessions_.end() && !clean;
  if (!session_present) {
    sessions_[client_id] = Session{};
  }
  Session& session = sessions_[client_id];
  session.client_id = client_id;
  session.clean = clean;
  session.connected = true;
  session.conn = conn;
  session.rights = outcome.rights;
  conn_to_client_[conn] = client_id;

  send_(conn, json{{"type", "connack"},
                   {"session_present", session_present},
                   {"code", "ok"}});
  if (session_present) resume_session(session);
}

void Broker::resume_session(Session& session) {
  uint64_t now = clock_();
  // Unacknowledged deliveries first (they are older than anything queued).
  for (auto& [pid, out] : session.inflight_out) {
    if (out.state == Session::OutMessage::State::await_pubcomp) {
      send_(session.conn, json{{"type", "pubrel"}, {"packet_id", pid}});
    } else {
      json frame{{"type", "publish"},       {"topic", out.msg.topic},
                 {"payload_b64", to_base64(out.msg.payload)},
                 {"qos", out.msg.qos},      {"retain", out.msg.retain},
                 {"packet_id", pid},        {"dup", true}};
      send_(session.conn, frame);
    }
    out.last_send = now;
  }
  // Then everything that arrived while offline, in order.
  while (!session.offline_queue.empty()) {
    session.backlog.push_back(std::move(session.offline_queue.front()));
    session.offline_queue.pop_front();
  }
  drain_backlog(session);
}

void Broker::handle_subscribe(Session& session, const json& frame) {
  json granted = json::array();
  std::vector<std::pair<std::string, int>> accepted;
  for (const auto& f : frame.at("filters")) {
    std::string filter = f.at("filter").get<std::string>();
    int max_qos = f.at("max_qos").get<int>();
    if (max_qos < 0) max_qos = 0;
    if (max_qos > 2) max_qos = 2;
    if (!valid_topic_filter(filter) || !authorized_subscribe(session, filter)) {
      granted.push_back("refused");
      continue;
    }
    session.subscriptions[filter] = max_qos;
    granted.push_back(max_qos);
    accepted.emplace_back(filter, max_qos);
  }
  send_(session.conn, json{{"type", "suback"},
                           {"packet_id", frame.value("packet_id", 0)},
                           {"granted", granted}});

  // Retained messages for freshly granted filters.
  for (const auto& [filter, max_qos] : accepted) {
    for (const auto& [topic, msg] : retained_) {
      if (!topic_match(filter, topic)) continue;
      QueuedMessage delivery = msg;
      delivery.qos = std::min(msg.qos, max_qos);
      delivery.retain = true;
      deliver(session, std::move(delivery));
    }
  }
}

bool Broker::authorized_subscribe(const Session& session,
                                  const std::string& filter) const {
  uint64_t now = clock_();
  for (const auto& g : session.rights) {
    if (!g.live_at(now) || !g.rights.count("subscribe")) continue;
    if (filter_subsumes(g.resource, filter)) return true;
  }
  return false;
}

bool Broker::authorized_publish(const Session& session,
                                const std::string& topic) const {
  uint64_t now = clock_();
  for (const auto& g : session.rights) {
    if (!g.live_at(now) || !g.rights.count("publish")) continue;
    if (topic_match(g.resource, topic)) return true;
  }
  return false;
}

void Broker::handle_publish(Session& session, const json& frame) {
  std::string topic = frame.at("topic").get<std::string>();
  Bytes payload = from_base64(frame.at("payload_b64").get<std::string>());
  int qos = frame.value("qos", 0);
  bool retain = frame.value("retain", false);

  if (!valid_topic_name(topic)) {
    close_(session.conn);
    return;
  }

  // An unauthorized publish is acknowledged per the QoS contract but never
  // routed or retained.
  bool authorized = authorized_publish(session, topic);

  bool route_message = authorized;
  if (qos == 1) {
    send_(session.conn, json{{"type", "puback"},
                             {"packet_id", frame.at("packet_id").get<uint16_t>()}});
  } else if (qos == 2) {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    if (session.inflight_in.count(pid)) {
      route_message = false;  // duplicate of an open exchange
    } else {
      session.inflight_in.insert(pid);
    }
    send_(session.conn, json{{"type", "pubrec"}, {"packet_id", pid}});
  }

  if (!route_message) return;

  if (retain) {
    if (payload.empty()) {
      retained_.erase(topic);  // zero-length retained payload clears the slot
    } else {
      retained_[topic] = QueuedMessage{topic, payload, qos, true};
    }
  }
  route(session.client_id, topic, payload, qos);
}

void Broker::route(const std::string& publisher, const std::string& topic,
                   const Bytes& payload, int qos) {
  for (const auto& filter : options_.bridge_filters) {
    if (topic_match(filter, topic)) {
      ledger_.bridge_store_asset(publisher, topic, payload, clock_());
      break;
    }
  }

  for (auto& [client_id, session] : sessions_) {
    int best = -1;
    for (const auto& [filter, max_qos] : session.subscriptions) {
      if (!topic_match(filter, topic)) continue;
      best = std::max(best, std::min(qos, max_qos));
    }
    if (best < 0) continue;
    deliver(session, QueuedMessage{topic, payload, best, false});
  }
}

void Broker::deliver(Session& session, QueuedMessage msg) {
  if (!session.connected) {
    if (msg.qos == 0) return;  // at-most-once is not queued for offline sessions
    session.offline_queue.push_back(std::move(msg));
    return;
  }
  if (!session.backlog.empty()) {
    session.backlog.push_back(std::move(msg));
    drain_backlog(session);
    return;
  }
  send_out(session, std::move(msg));
}

void Broker::send_out(Session& session, QueuedMessage msg) {
  if (msg.qos == 0) {
    send_(session.conn, json{{"type", "publish"},
                             {"topic", msg.topic},
                             {"payload_b64", to_base64(msg.payload)},
                             {"qos", 0},
                             {"retain", msg.retain}});
    return;
  }
  bool window_full = session.inflight_out.size() >= options_.inflight_window;
  bool qos2_blocked = msg.qos == 2 && session.qos2_busy();
  if (window_full || qos2_blocked) {
    session.backlog.push_back(std::move(msg));
    return;
  }
  uint16_t pid = session.allocate_packet_id();
  json frame{{"type", "publish"},
             {"topic", msg.topic},
             {"payload_b64", to_base64(msg.payload)},
             {"qos", msg.qos},
             {"retain", msg.retain},
             {"packet_id", pid},
             {"dup", false}};
  Session::OutMessage out;
  out.msg = std::move(msg);
  out.state = out.msg.qos == 1 ? Session::OutMessage::State::await_puback
                               : Session::OutMessage::State::await_pubrec;
  out.last_send = clock_();
  session.inflight_out.emplace(pid, std::move(out));
  send_(session.conn, frame);
}

void Broker::drain_backlog(Session& session) {
  if (!session.connected) return;
  while (!session.backlog.empty()) {
    const QueuedMessage& head = session.backlog.front();
    if (session.inflight_out.size() >= options_.inflight_window) return;
    if (head.qos == 2 && session.qos2_busy()) return;
    QueuedMessage msg = std::move(session.backlog.front());
    session.backlog.pop_front();
    send_out(session, std::move(msg));
  }
}

void Broker::handle_disconnect(Session& session, uint64_t conn) {
  session.connected = false;
  conn_to_client_.erase(conn);
  std::string client_id = session.client_id;
  if (session.clean) sessions_.erase(client_id);
  close_(conn);
}

void Broker::on_connection_closed(uint64_t conn) {
  Session* session = session_for_conn(conn);
  conn_to_client_.erase(conn);
  if (!session) return;
  session->connected = false;
  if (session->clean) sessions_.erase(session->client_id);
}

void Broker::tick(uint64_t now_ms) {
  for (auto& [_, session] : sessions_) {
    if (!session.connected) continue;
    for (auto& [pid, out] : session.inflight_out) {
      if (now_ms - out.last_send < options_.retransmit_ms) continue;
      out.last_send = now_ms;
      if (out.state == Session::OutMessage::State::await_pubcomp) {
        send_(session.conn, json{{"type", "pubrel"}, {"packet_id", pid}});
      } else {
        send_(session.conn, json{{"type", "publish"},
                                 {"topic", out.msg.topic},
                                 {"payload_b64", to_base64(out.msg.payload)},
                                 {"qos", out.msg.qos},
                                 {"retain", out.msg.retain},
                                 {"packet_id", pid},
                                 {"dup", true}});
      }
    }
  }
}

BrokerClient::BrokerClient(Options options, SendFn send, ClockFn clock)
    : options_(std::move(options)), send_(std::move(send)), clock_(std::move(clock)) {}

void BrokerClient::connect(const std::string& challenge_id, const Bytes& signature) {
  connack_.reset();
  send_(0, json{{"type", "connect"},
                {"client_id", options_.client_id},
                {"clean", options_.clean},
                {"challenge_id", challenge_id},
                {"signature_b64", to_base64(signature)}});
}

void BrokerClient::subscribe(
    const std::vector<std::pair<std::string, int>>& filters) {
  if (!connected_) raise(ErrorCode::not_connected, "subscribe before connack");
  json jfilters = json::array();
  for (const auto& [filter, max_qos] : filters) {
    jfilters.push_back(json{{"filter", filter}, {"max_qos", max_qos}});
  }
  send_(0, json{{"type", "subscribe"},
                {"packet_id", allocate_packet_id()},
                {"filters", jfilters}});
}

void BrokerClient::publish(const std::string& topic, const Bytes& payload, int qos,
                           bool retain) {
  if (!connected_) raise(ErrorCode::not_connected, "publish before connack");
  if (!valid_topic_name(topic)) {
    raise(ErrorCode::bad_frame, "topic names may not contain wildcards");
  }
  if (local_rights_) {
    bool ok = false;
    uint64_t now = clock_();
    for (const auto& g : *local_rights_) {
      if (g.live_at(now) && g.rights.count("publish") &&
          topic_match(g.resource, topic)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      raise(ErrorCode::not_authorized, "no publish right covers " + topic);
    }
  }
  if (qos == 0) {
    send_(0, json{{"type", "publish"},
                  {"topic", topic},
                  {"payload_b64", to_base64(payload)},
                  {"qos", 0},
                  {"retain", retain}});
    return;
  }
  if (inflight_out_.size() >= options_.inflight_window) {
    raise(ErrorCode::quota_exceeded, "publish window full");
  }
  json frame{{"type", "publish"},
             {"topic", topic},
             {"payload_b64", to_base64(payload)},
             {"qos", qos},
             {"retain", retain},
             {"packet_id", 0},
             {"dup", false}};
  if (qos == 2) {
    // One QoS 2 exchange at a time keeps broker arrival order equal to
    // publish order even over a reordering transport.
    pending_qos2_.push_back(std::move(frame));
    pump_pending();
    return;
  }
  frame["packet_id"] = allocate_packet_id();
  send_publish_frame(frame, OutMessage::State::await_puback);
}

void BrokerClient::pump_pending() {
  if (pending_qos2_.empty()) return;
  for (const auto& [_, out] : inflight_out_) {
    (void)out;
    if (out.frame.value("qos", 0) == 2) return;  // previous exchange still open
  }
  json frame = std::move(pending_qos2_.front());
  pending_qos2_.pop_front();
  frame["packet_id"] = allocate_packet_id();
  send_publish_frame(frame, OutMessage::State::await_pubrec);
}

void BrokerClient::send_publish_frame(const json& frame, OutMessage::State state) {
  uint16_t pid = frame.at("packet_id").get<uint16_t>();
  OutMessage out;
  out.frame = frame;
  out.state = state;
  out.last_send = clock_();
  inflight_out_.emplace(pid, std::move(out));
  send_(0, frame);
}

void BrokerClient::disconnect() {
  send_(0, json{{"type", "disconnect"}});
  connected_ = false;
}

void BrokerClient::set_local_rights(std::vector<GrantView> rights) {
  local_rights_ = std::move(rights);
}

bool BrokerClient::session_present() const {
  return connack_ && connack_->value("session_present", false);
}

const std::string& BrokerClient::connack_code() const {
  static const std::string empty;
  if (!connack_) return empty;
  return connack_->at("code").get_ref<const std::string&>();
}

void BrokerClient::handle_frame(const json& frame) {
  std::string type = frame.value("type", "");
  if (type == "connack") {
    connack_ = frame;
    connected_ = frame.value("code", "") == "ok";
    return;
  }
  if (type == "suback") {
    subacks_.push_back(frame.at("granted"));
    return;
  }
  if (type == "publish") {
    int qos = frame.value("qos", 0);
    Delivery delivery;
    delivery.topic = frame.at("topic").get<std::string>();
    delivery.payload = from_base64(frame.at("payload_b64").get<std::string>());
    delivery.qos = qos;
    delivery.retain = frame.value("retain", false);
    delivery.dup = frame.value("dup", false);
    if (qos == 0) {
      deliveries_.push_back(std::move(delivery));
      return;
    }
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    if (qos == 1) {
      deliveries_.push_back(std::move(delivery));  // duplicates surface to the app
      send_(0, json{{"type", "puback"}, {"packet_id", pid}});
      return;
    }
    if (!seen_qos2_.count(pid)) {
      seen_qos2_.insert(pid);
      deliveries_.push_back(std::move(delivery));
    }
    send_(0, json{{"type", "pubrec"}, {"packet_id", pid}});
    return;
  }
  if (type == "pubrel") {
    send_(0, json{{"type", "pubcomp"},
                  {"packet_id", frame.at("packet_id").get<uint16_t>()}});
    return;
  }
  if (type == "puback") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = inflight_out_.find(pid);
    if (it != inflight_out_.end() && it->second.state == OutMessage::State::await_puback) {
      inflight_out_.erase(it);
    }
    return;
  }
  if (type == "pubrec") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = inflight_out_.find(pid);
    if (it != inflight_out_.end() && it->second.state == OutMessage::State::await_pubrec) {
      it->second.state = OutMessage::State::await_pubcomp;
      it->second.last_send = clock_();
    }
    send_(0, json{{"type", "pubrel"}, {"packet_id", pid}});
    return;
  }
  if (type == "pubcomp") {
    uint16_t pid = frame.at("packet_id").get<uint16_t>();
    auto it = inflight_out_.find(pid);
    if (it != inflight_out_.end() &&
        it->second.state == OutMessage::State::await_pubcomp) {
      inflight_out_.erase(it);
    }
    pump_pending();
    return;
  }
}

void BrokerClient::tick(uint64_t now_ms) {
  if (!connected_) return;
  for (auto& [pid, out] : inflight_out_) {
    if (now_ms - out.last_send < options_.retransmit_ms) continue;
    out.last_send = now_ms;
    if (out.state == OutMessage::State::await_pubcomp) {
      send_(0, json{{"type", "pubrel"}, {"packet_id", pid}});
    } else {
      json frame = out.frame;
      frame["dup"] = true;
      send_(0, frame);
    }
  }
}

bool BrokerClient::idle() const {
  return inflight_out_.empty() && pending_qos2_.empty();
}

uint16_t BrokerClient::allocate_packet_id() {
  for (int attempts = 0; attempts < 65535; ++attempts) {
    uint16_t pid = next_packet_id_;
    next_packet_id_ = next_packet_id_ == 65535 ? 1 : next_packet_id_ + 1;
    if (!inflight_out_.count(pid)) return pid;
  }
  raise(ErrorCode::quota_exceeded, "no free packet ids");
}

void BrokerClient::on_closed() {
  connected_ = false;
}

}  // namespace iotchain::broker
