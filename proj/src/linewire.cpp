// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/linewire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "iotchain/errors.hpp"

namespace iotchain::net {

namespace {

void send_line(int fd, std::mutex& write_mutex, const json& frame) {
  std::string line = frame.dump();
  line.push_back('\n');
  std::lock_guard lock(write_mutex);
  size_t sent = 0;
  while (sent < line.size()) {
    ssize_t n = ::send(fd, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return;  // connection is gone; reader notices and cleans up
    sent += static_cast<size_t>(n);
  }
}

// Reads lines from fd, invoking cb per parsed frame; returns on EOF/error.
void read_lines(int fd, const std::function<void(const json&)>& cb) {
  std::string buffer;
  char chunk[4096];
  while (true) {
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (line.empty()) continue;
      json frame = json::parse(line, nullptr, false);
      if (frame.is_discarded()) continue;  // skip malformed lines
      cb(frame);
    }
  }
}

}  // namespace

LineServer::~LineServer() {
  stop();
}

void LineServer::start(uint16_t port, FrameHandler on_frame, CloseHandler on_close) {
  on_frame_ = std::move(on_frame);
  on_close_ = std::move(on_close);

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) raise(ErrorCode::io_error, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    raise(ErrorCode::io_error,
          "cannot bind 127.0.0.1:" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 64) != 0) {
    raise(ErrorCode::io_error, "listen() failed");
  }

  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void LineServer::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    uint64_t id;
    {
      std::lock_guard lock(conns_mutex_);
      id = next_conn_++;
      conns_[id] = conn;
    }
    conn->reader = std::thread([this, id, fd] { reader_loop(id, fd); });
  }
}

void LineServer::reader_loop(uint64_t conn, int fd) {
  read_lines(fd, [this, conn](const json& frame) {
    if (on_frame_) on_frame_(conn, frame);
  });
  bool was_tracked = false;
  {
    std::lock_guard lock(conns_mutex_);
    auto it = conns_.find(conn);
    if (it != conns_.end()) {
      was_tracked = true;
      ::close(it->second->fd);
      it->second->reader.detach();
      conns_.erase(it);
    }
  }
  if (was_tracked && on_close_) on_close_(conn);
}

void LineServer::send(uint64_t conn, const json& frame) {
  std::shared_ptr<Conn> c;
  {
    std::lock_guard lock(conns_mutex_);
    auto it = conns_.find(conn);
    if (it == conns_.end()) return;
    c = it->second;
  }
  send_line(c->fd, c->write_mutex, frame);
}

void LineServer::close_connection(uint64_t conn) {
  std::lock_guard lock(conns_mutex_);
  auto it = conns_.find(conn);
  if (it == conns_.end()) return;
  ::shutdown(it->second->fd, SHUT_RDWR);  // reader thread finishes the cleanup
}

void LineServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::shared_ptr<Conn>> open;
  {
    std::lock_guard lock(conns_mutex_);
    for (auto& [_, conn] : conns_) open.push_back(conn);
  }
  for (auto& conn : open) ::shutdown(conn->fd, SHUT_RDWR);
  // readers detach themselves; give them a beat to drain
  for (int i = 0; i < 100; ++i) {
    std::lock_guard lock(conns_mutex_);
    if (conns_.empty()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

LineClient::LineClient(const std::string& host, uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) raise(ErrorCode::io_error, "socket() failed");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    fd_ = -1;
    raise(ErrorCode::io_error,
          "cannot connect to " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  reader_ = std::thread([this] { reader_loop(); });
}

LineClient::~LineClient() {
  close();
  if (reader_.joinable()) reader_.join();
}

void LineClient::reader_loop() {
  read_lines(fd_, [this](const json& frame) {
    {
      std::lock_guard lock(mutex_);
      inbox_.push_back(frame);
    }
    cv_.notify_all();
  });
  closed_ = true;
  cv_.notify_all();
}

void LineClient::send(const json& frame) {
  if (fd_ < 0 || closed_) raise(ErrorCode::io_error, "connection closed");
  send_line(fd_, write_mutex_, frame);
}

std::optional<json> LineClient::recv(uint64_t timeout_ms) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
               [this] { return !inbox_.empty() || closed_.load(); });
  if (inbox_.empty()) return std::nullopt;
  json frame = std::move(inbox_.front());
  inbox_.pop_front();
  return frame;
}

void LineClient::close() {
  if (fd_ >= 0 && !closed_.exchange(true)) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
  }
}

}  // namespace iotchain::net
