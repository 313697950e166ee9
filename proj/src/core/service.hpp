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

#ifndef RLBF_CORE_SERVICE_HPP_
#define RLBF_CORE_SERVICE_HPP_

#include <atomic>
#include <cstdint>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core/transducer.hpp"

namespace rlbf {

// Newline-delimited JSON transducer service over TCP. One connection is one
// session with its own transducer; sessions share nothing but the listen
// socket and atomic counters.
//
// Inbound lines:  {"config": ...} (optional, first line only)
//                 {"token": ...} | {"end": true}
// Outbound lines: {"emit": ...} | {"retract": n}
//                 | {"note": {"categories": [...], "span_len": n,
//                             "clamped": bool}}
//                 | {"fault": {"kind": ...}} | {"done": true}

/// Service wire form of one transducer event.
nlohmann::json wire_event_to_json(const StreamEvent& ev);

class StreamService {
 public:
  explicit StreamService(TransducerConfig default_cfg = {});
  ~StreamService();

  StreamService(const StreamService&) = delete;
  StreamService& operator=(const StreamService&) = delete;

  /// Binds and starts the accept loop; port 0 picks an ephemeral port.
  /// Error(kTransport) on bind failure.
  void start(const std::string& host, int port);
  void stop();

  int port() const { return port_; }

  /// Aggregated counters; reads are individually atomic.
  nlohmann::json stats() const;

 private:
  void accept_loop();
  void run_session(int fd);
  void track(int fd, bool add);

  TransducerConfig default_cfg_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::vector<std::thread> workers_;
  std::mutex mu_;                 // guards workers_ and live_fds_
  std::set<int> live_fds_;

  std::atomic<std::uint64_t> sessions_opened_{0};
  std::atomic<std::uint64_t> sessions_closed_{0};
  std::atomic<std::uint64_t> tokens_in_{0};
  std::atomic<std::uint64_t> events_out_{0};
  std::atomic<std::uint64_t> protocol_faults_{0};
};

}  // namespace rlbf

#endif  // RLBF_CORE_SERVICE_HPP_
