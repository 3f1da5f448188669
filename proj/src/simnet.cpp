// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/simnet.hpp"

namespace iotchain::broker {

SimNet::SimNet(FaultConfig faults) : faults_(faults), rng_(faults.seed) {}

uint64_t SimNet::open_connection() {
  uint64_t conn = next_conn_++;
  clients_[conn] = nullptr;
  open_[conn] = true;
  return conn;
}

void SimNet::bind_client(uint64_t conn, BrokerClient* client) {
  clients_[conn] = client;
}

void SimNet::drop_connection(uint64_t conn) {
  if (!open_[conn]) return;
  open_[conn] = false;
  if (broker_) broker_->on_connection_closed(conn);
  auto it = clients_.find(conn);
  if (it != clients_.end() && it->second) it->second->on_closed();
}

SendFn SimNet::broker_send_fn() {
  return [this](uint64_t conn, const json& frame) {
    enqueue(Event{conn, false, frame});
  };
}

CloseFn SimNet::broker_close_fn() {
  // Close is ordered behind already-queued frames so a CONNACK refusal still
  // reaches the client, like a TCP FIN after a flushed write.
  return [this](uint64_t conn) {
    queue_.push_back(Event{conn, false, json{{"type", "_close"}}});
  };
}

SendFn SimNet::client_send_fn(uint64_t conn) {
  return [this, conn](uint64_t, const json& frame) {
    enqueue(Event{conn, true, frame});
  };
}

ClockFn SimNet::clock_fn() {
  return [this] { return now_ms_; };
}

bool SimNet::faultable(const json& frame) const {
  std::string type = frame.value("type", "");
  return type == "publish" || type == "puback" || type == "pubrec" ||
         type == "pubrel" || type == "pubcomp";
}

void SimNet::enqueue(Event event) {
  if (faultable(event.frame)) {
    if (rng_.uniform_real() < faults_.drop) return;
    bool dup = rng_.uniform_real() < faults_.duplicate;
    bool reorder = rng_.uniform_real() < faults_.reorder;
    if (reorder && !queue_.empty()) {
      size_t pos = rng_.uniform(queue_.size() + 1);
      queue_.insert(queue_.begin() + pos, event);
    } else {
      queue_.push_back(event);
    }
    if (dup) {
      size_t pos = rng_.uniform(queue_.size() + 1);
      queue_.insert(queue_.begin() + pos, event);
    }
    return;
  }
  queue_.push_back(std::move(event));
}

bool SimNet::step() {
  if (queue_.empty()) return false;
  Event event = std::move(queue_.front());
  queue_.pop_front();
  now_ms_ += 1;
  if (!open_[event.conn]) return true;  // connection gone, frame lost
  if (event.frame.value("type", "") == "_close") {
    open_[event.conn] = false;
    auto it = clients_.find(event.conn);
    if (it != clients_.end() && it->second) it->second->on_closed();
    return true;
  }
  ++delivered_;
  if (event.to_broker) {
    if (broker_) broker_->handle_frame(event.conn, event.frame);
  } else {
    auto it = clients_.find(event.conn);
    if (it != clients_.end() && it->second) it->second->handle_frame(event.frame);
  }
  return true;
}

bool SimNet::anyone_busy() const {
  for (const auto& [conn, client] : clients_) {
    if (!open_.at(conn) || !client) continue;
    if (!client->idle()) return true;
  }
  return broker_ && broker_->has_pending_deliveries();
}

void SimNet::run(size_t max_steps) {
  for (size_t i = 0; i < max_steps; ++i) {
    if (step()) continue;
    // Queue drained: done only when no endpoint still holds in-flight state;
    // otherwise advance time past the retransmit threshold and keep going
    // (a retransmission itself may be dropped, so emptiness alone proves
    // nothing).
    if (!anyone_busy()) return;
    now_ms_ += 250;
    if (broker_) broker_->tick(now_ms_);
    for (auto& [conn, client] : clients_) {
      if (open_[conn] && client) client->tick(now_ms_);
    }
  }
}

}  // namespace iotchain::broker
