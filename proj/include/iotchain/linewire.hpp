// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "iotchain/canonical.hpp"

namespace iotchain::net {

// Newline-delimited JSON over TCP. One object per line, UTF-8. Used by the
// broker's socket transport and the peer/orderer RPC endpoints.
class LineServer {
public:
  using FrameHandler = std::function<void(uint64_t conn, const json& frame)>;
  using CloseHandler = std::function<void(uint64_t conn)>;

  LineServer() = default;
  ~LineServer();

  // Binds localhost:port (port 0 picks a free one) and starts accepting.
  void start(uint16_t port, FrameHandler on_frame, CloseHandler on_close);
  void stop();

  void send(uint64_t conn, const json& frame);
  void close_connection(uint64_t conn);
  uint16_t port() const { return port_; }

private:
  void accept_loop();
  void reader_loop(uint64_t conn, int fd);

  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;

  struct Conn {
    int fd = -1;
    std::thread reader;
    std::mutex write_mutex;
  };
  std::mutex conns_mutex_;
  std::map<uint64_t, std::shared_ptr<Conn>> conns_;
  uint64_t next_conn_ = 1;

  FrameHandler on_frame_;
  CloseHandler on_close_;
};

class LineClient {
public:
  LineClient(const std::string& host, uint16_t port);  // io_error on failure
  ~LineClient();

  void send(const json& frame);
  // Next inbound frame, or nullopt on timeout / closed connection.
  std::optional<json> recv(uint64_t timeout_ms);
  void close();
  bool open() const { return fd_ >= 0 && !closed_; }

private:
  void reader_loop();

  int fd_ = -1;
  std::atomic<bool> closed_{false};
  std::thread reader_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<json> inbox_;
  std::mutex write_mutex_;
};

}  // namespace iotchain::net
