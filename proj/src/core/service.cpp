// Copyright 2025 The rlbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <string>

#include "core/error.hpp"
#include "core/jsonio.hpp"

namespace rlbf {

using nlohmann::json;

json wire_event_to_json(const StreamEvent& ev) {
  switch (ev.kind) {
    case StreamEvent::Kind::kEmit:
      return json{{"emit", token_to_json(ev.token)}};
    case StreamEvent::Kind::kRetract:
      return json{{"retract", ev.retract_n}};
    case StreamEvent::Kind::kNote: {
      json cats = json::array();
      for (SafetyCategory c : ev.categories) cats.push_back(category_name(c));
      return json{{"note", json{{"categories", cats},
                                {"span_len", ev.retracted_span.size()},
                                {"clamped", ev.clamped}}}};
    }
    case StreamEvent::Kind::kFault:
      return json{{"fault", json{{"kind", fault_kind_name(ev.fault)}}}};
  }
  throw Error(ErrorCode::kState, "bad event kind");
}

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool send_line(int fd, const json& j) { return send_all(fd, j.dump() + "\n"); }

}  // namespace

StreamService::StreamService(TransducerConfig default_cfg)
    : default_cfg_(default_cfg) {
  default_cfg_.validate();
}

StreamService::~StreamService() { stop(); }

void StreamService::start(const std::string& host, int port) {
  if (running_.load()) throw Error(ErrorCode::kState, "already running");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kTransport, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kTransport, "bad listen address: " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
          0 ||
      ::listen(listen_fd_, 128) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kTransport,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  running_.store(true);
  acceptor_ = std::thread([this] { accept_loop(); });
}

void StreamService::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    workers.swap(workers_);
  }
  for (std::thread& t : workers) {
    if (t.joinable()) t.join();
  }
}

json StreamService::stats() const {
  return json{
      {"sessions_opened", sessions_opened_.load()},
      {"sessions_closed", sessions_closed_.load()},
      {"tokens_in", tokens_in_.load()},
      {"events_out", events_out_.load()},
      {"protocol_faults", protocol_faults_.load()},
  };
}

void StreamService::track(int fd, bool add) {
  std::lock_guard<std::mutex> lock(mu_);
  if (add) {
    live_fds_.insert(fd);
  } else {
    live_fds_.erase(fd);
  }
}

void StreamService::accept_loop() {
  while (running_.load()) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_.load()) break;
      continue;
    }
    ++sessions_opened_;
    track(fd, true);
    std::lock_guard<std::mutex> lock(mu_);
    workers_.emplace_back([this, fd] {
      run_session(fd);
      track(fd, false);
      ::close(fd);
      ++sessions_closed_;
    });
  }
}

void StreamService::run_session(int fd) {
  Transducer transducer(default_cfg_);
  bool configured = false;
  bool first_line = true;
  bool ended = false;

  auto write_events = [&](const std::vector<StreamEvent>& events) {
    for (const StreamEvent& ev : events) {
      if (!send_line(fd, wire_event_to_json(ev))) return false;
      ++events_out_;
    }
    return true;
  };

  std::string buf;
  char chunk[4096];
  while (!ended) {
    std::size_t nl = buf.find('\n');
    if (nl == std::string::npos) {
      ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) break;  // peer closed; flush below
      buf.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    std::string line = buf.substr(0, nl);
    buf.erase(0, nl + 1);
    if (line.empty()) continue;

    try {
      json msg = json::parse(line);
      if (!msg.is_object()) throw Error(ErrorCode::kParse, "not an object");
      if (msg.contains("config")) {
        if (!first_line || configured) {
          throw Error(ErrorCode::kState, "config after first line");
        }
        TransducerConfig cfg = transducer_config_from_json(msg["config"]);
        cfg.validate();
        transducer = Transducer(cfg);
        configured = true;
      } else if (msg.contains("token")) {
        ++tokens_in_;
        if (!write_events(transducer.feed(token_from_json(msg["token"])))) {
          return;
        }
      } else if (msg.contains("end") && msg["end"].get<bool>()) {
        ended = true;
        if (!write_events(transducer.finish())) return;
        send_line(fd, json{{"done", true}});
        ++events_out_;
      } else {
        throw Error(ErrorCode::kParse, "unknown message shape");
      }
    } catch (const std::exception&) {
      // Protocol violations terminate this session only.
      ++protocol_faults_;
      send_line(fd, json{{"fault", json{{"kind", "protocol"}}}});
      ++events_out_;
      return;
    }
    first_line = false;
  }
  if (!ended) {
    // Peer closed without {"end": true}: flush what the transducer holds.
    try {
      if (!transducer.finished()) {
        if (!write_events(transducer.finish())) return;
      }
      send_line(fd, json{{"done", true}});
      ++events_out_;
    } catch (const std::exception&) {
      ++protocol_faults_;
    }
  }
}

}  // namespace rlbf
