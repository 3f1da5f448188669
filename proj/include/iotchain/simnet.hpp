// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <deque>
#include <map>
#include <memory>

#include "iotchain/broker.hpp"
#include "iotchain/rng.hpp"

namespace iotchain::broker {

// Deterministic in-memory transport between one broker and its clients.
// Frames are queued as events; each step delivers one, applying seeded drop /
// duplicate / reorder faults to the message-path frames. Connection-lifecycle
// frames (connect, connack, subscribe, suback, disconnect) are exempt: over a
// real stream transport those either complete or the whole connection retries.
struct FaultConfig {
  double drop = 0.0;
  double duplicate = 0.0;
  double reorder = 0.0;
  uint64_t seed = 1;
};

class SimNet {
public:
  explicit SimNet(FaultConfig faults = {});

  // Wire up the broker after construction (the broker needs our send/close).
  void attach_broker(Broker* broker) { broker_ = broker; }

  // Connection setup is two-phase because the client's send function needs
  // the connection id: open, construct the client with client_send_fn(conn),
  // then bind.
  uint64_t open_connection();
  void bind_client(uint64_t conn, BrokerClient* client);
  void drop_connection(uint64_t conn);  // simulates a network cut, no disconnect frame

  SendFn broker_send_fn();
  CloseFn broker_close_fn();
  SendFn client_send_fn(uint64_t conn);
  ClockFn clock_fn();

  bool step();                       // deliver one event; false when queue empty
  bool anyone_busy() const;
  void run(size_t max_steps = 200000);  // step + tick until idle
  uint64_t now_ms() const { return now_ms_; }
  void advance(uint64_t ms) { now_ms_ += ms; }

  size_t delivered_frames() const { return delivered_; }

private:
  struct Event {
    uint64_t conn;
    bool to_broker;
    json frame;
  };

  bool faultable(const json& frame) const;
  void enqueue(Event event);

  FaultConfig faults_;
  Rng rng_;
  Broker* broker_ = nullptr;
  std::map<uint64_t, BrokerClient*> clients_;
  std::map<uint64_t, bool> open_;
  std::deque<Event> queue_;
  uint64_t next_conn_ = 1;
  uint64_t now_ms_ = 1'000'000;  // virtual clock
  size_t delivered_ = 0;
};

}  // namespace iotchain::broker
