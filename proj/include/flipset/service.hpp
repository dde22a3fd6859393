// Copyright 2026 The Flipset Authors
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

#ifndef FLIPSET_SERVICE_HPP_
#define FLIPSET_SERVICE_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "flipset/artifact.hpp"

namespace flipset {

inline constexpr int kDefaultWhatifWorkers = 2;

struct ServiceOptions {
  // Models and sessions persist under this directory across restarts.
  std::filesystem::path store_dir = "flipset-store";
  // Built UI bundle served under "/"; empty disables static serving.
  std::filesystem::path ui_dir;
  int whatif_workers = kDefaultWhatifWorkers;
  // Test seams: run inside a held what-if slot / a registered flipset job.
  std::function<void()> on_whatif_slot;
  std::function<void()> on_flipset_job;
};

// HTTP JSON API for the contestation loop: models, predictions, flipsets,
// sessions with a disputed set, and exact what-if retrains. Errors carry a
// body of the form {code, message, detail}.
class ContestService {
 public:
  explicit ContestService(ServiceOptions options);
  ~ContestService();
  ContestService(const ContestService&) = delete;
  ContestService& operator=(const ContestService&) = delete;

  // Registers and persists an already trained bundle; returns its id.
  std::string add_model(ModelBundle bundle);

  // Returns the bound port, or -1 on failure.
  int bind_to_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace flipset

#endif  // FLIPSET_SERVICE_HPP_
