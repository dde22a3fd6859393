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

#include "flipset/service.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <semaphore>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "flipset/error.hpp"
#include "flipset/flipset.hpp"
#include "flipset/reports.hpp"
#include "flipset/verification.hpp"

namespace flipset {

namespace {

using json = nlohmann::json;

// Largest what-if pool the service accepts.
constexpr int kMaxWhatifWorkers = 64;

struct HttpError : std::runtime_error {
  HttpError(int status, std::string code, const std::string& message, json detail = json::object())
      : std::runtime_error(message), status(status), code(std::move(code)), detail(std::move(detail)) {}
  int status;
  std::string code;
  json detail;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message, json detail = json::object()) {
  send_json(res, status, {{"code", code}, {"message", message}, {"detail", std::move(detail)}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw HttpError(400, "bad_request", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError(400, "bad_json", "request body is not valid JSON", {{"parser", e.what()}});
  }
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.contains(key)) {
    throw HttpError(400, "bad_request", std::string("missing field '") + key + "'");
  }
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw HttpError(400, "bad_request", std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& body, const char* key, T fallback) {
  return body.contains(key) ? field<T>(body, key) : fallback;
}

Index parse_index(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return static_cast<Index>(v);
  } catch (const std::exception&) {
  }
  throw HttpError(404, "not_found", std::string("invalid ") + what + " '" + text + "'");
}

struct ModelEntry {
  std::string id;
  ModelBundle bundle;
  Eigen::VectorXd test_probs;
  std::unique_ptr<FlipsetSearcher> searcher;

  const Dataset& train() const { return bundle.data.splits.train; }
  const Dataset& test() const { return bundle.data.splits.test; }
  double tau() const { return bundle.model.hyper.tau; }
};

struct Session {
  std::mutex mu;
  std::string id;
  std::string model_id;
  Index test_index = 0;
  std::set<Index> disputed;
  json history = json::array();
};

json session_json(const Session& s, const ModelEntry& model) {
  const double p = model.test_probs[s.test_index];
  return {{"id", s.id},
          {"model_id", s.model_id},
          {"test_index", s.test_index},
          {"original_prob", p},
          {"original_label", predicted_label(p, model.tau())},
          {"disputed", std::vector<Index>(s.disputed.begin(), s.disputed.end())},
          {"history", s.history}};
}

json prediction_json(const ModelEntry& m, Index t) {
  const double p = m.test_probs[t];
  json j = {{"test_index", t},
            {"prob", p},
            {"label", predicted_label(p, m.tau())},
            {"margin", std::abs(p - 0.5)},
            {"true_label", m.test().label(t)}};
  if (auto text = m.test().text(t)) j["text"] = *text;
  return j;
}

json train_point_json(const ModelEntry& m, Index i) {
  json j = {{"index", i}, {"label", m.train().label(i)}};
  const auto text = m.train().text(i);
  j["text"] = text ? json(*text) : json();
  return j;
}

int id_number(const std::string& id, char prefix) {
  if (id.size() < 2 || id[0] != prefix) return 0;
  try {
    return std::stoi(id.substr(1));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

struct ContestService::Impl {
  explicit Impl(ServiceOptions opts)
      : options(std::move(opts)),
        pool(std::clamp(options.whatif_workers, 1, kMaxWhatifWorkers)) {}

  ServiceOptions options;
  httplib::Server server;

  std::mutex registry_mu;
  std::map<std::string, std::shared_ptr<ModelEntry>> models;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  int next_model = 1;
  int next_session = 1;

  std::mutex jobs_mu;
  std::set<std::tuple<std::string, Index, Algorithm>> running_jobs;

  std::counting_semaphore<kMaxWhatifWorkers> pool;

  std::filesystem::path models_dir() const { return options.store_dir / "models"; }
  std::filesystem::path sessions_dir() const { return options.store_dir / "sessions"; }

  std::shared_ptr<ModelEntry> make_entry(std::string id, ModelBundle bundle) {
    auto entry = std::make_shared<ModelEntry>();
    entry->id = std::move(id);
    entry->bundle = std::move(bundle);
    const auto& model = entry->bundle.model;
    entry->test_probs = sigmoid(margins(entry->test(), model.theta));
    entry->searcher = std::make_unique<FlipsetSearcher>(model, entry->train());
    return entry;
  }

  std::string register_model(ModelBundle bundle) {
    std::string id;
    {
      std::lock_guard lock(registry_mu);
      id = "m" + std::to_string(next_model++);
    }
    save_bundle(bundle, models_dir() / id);
    auto entry = make_entry(id, std::move(bundle));
    std::lock_guard lock(registry_mu);
    models[id] = std::move(entry);
    return id;
  }

  std::shared_ptr<ModelEntry> model(const std::string& id) {
    std::lock_guard lock(registry_mu);
    auto it = models.find(id);
    if (it == models.end()) throw HttpError(404, "not_found", "unknown model '" + id + "'");
    return it->second;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(registry_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError(404, "not_found", "unknown session '" + id + "'");
    return it->second;
  }

  // Caller holds s.mu.
  void persist(const Session& s) {
    json j = {{"id", s.id},
              {"model_id", s.model_id},
              {"test_index", s.test_index},
              {"disputed", std::vector<Index>(s.disputed.begin(), s.disputed.end())},
              {"history", s.history}};
    std::filesystem::create_directories(sessions_dir());
    write_atomic(sessions_dir() / (s.id + ".json"), j.dump(2) + "\n");
  }

  void load_store() {
    namespace fs = std::filesystem;
    if (fs::is_directory(models_dir())) {
      for (const auto& dir : fs::directory_iterator(models_dir())) {
        const std::string id = dir.path().filename().string();
        if (id_number(id, 'm') == 0) continue;
        try {
          models[id] = make_entry(id, load_bundle(dir.path()));
          next_model = std::max(next_model, id_number(id, 'm') + 1);
        } catch (const std::exception& e) {
          spdlog::warn("skipping stored model {}: {}", id, e.what());
        }
      }
    }
    if (fs::is_directory(sessions_dir())) {
      for (const auto& file : fs::directory_iterator(sessions_dir())) {
        if (file.path().extension() != ".json") continue;
        try {
          const json j = json::parse(read_file(file.path()));
          auto s = std::make_shared<Session>();
          s->id = j.at("id").get<std::string>();
          s->model_id = j.at("model_id").get<std::string>();
          s->test_index = j.at("test_index").get<Index>();
          for (Index i : j.at("disputed").get<std::vector<Index>>()) s->disputed.insert(i);
          s->history = j.at("history");
          if (!models.count(s->model_id)) throw DataError("refers to unknown model " + s->model_id);
          next_session = std::max(next_session, id_number(s->id, 's') + 1);
          sessions[s->id] = std::move(s);
        } catch (const std::exception& e) {
          spdlog::warn("skipping stored session {}: {}", file.path().string(), e.what());
        }
      }
    }
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler guarded(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.what(), e.detail);
      } catch (const InputError& e) {
        send_error(res, 400, "invalid_input", e.what());
      } catch (const DataError& e) {
        send_error(res, 422, "data_error", e.what());
      } catch (const NumericalError& e) {
        send_error(res, 500, "numerical_error", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal_error", e.what());
      }
    };
  }

  void post_models(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    RunConfig config = run_config_from_json(body);
    config.validate(/*check_paths=*/true);
    ModelBundle bundle = train_bundle(std::move(config));
    const json metrics = to_json(bundle.metrics);
    const std::string id = register_model(std::move(bundle));
    send_json(res, 201, {{"id", id}, {"metrics", metrics}});
  }

  void get_model(const httplib::Request& req, httplib::Response& res) {
    const auto m = model(req.path_params.at("id"));
    json j = model_json(m->bundle);
    j["id"] = m->id;
    send_json(res, 200, j);
  }

  void list_models(const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    std::lock_guard lock(registry_mu);
    for (const auto& [id, m] : models) {
      out.push_back({{"id", id},
                     {"dataset", m->bundle.config.dataset.name},
                     {"metrics", to_json(m->bundle.metrics)}});
    }
    send_json(res, 200, {{"models", out}});
  }

  void list_predictions(const httplib::Request& req, httplib::Response& res) {
    const auto m = model(req.path_params.at("id"));
    json out = json::array();
    for (Index t = 0; t < m->test().size(); ++t) out.push_back(prediction_json(*m, t));
    send_json(res, 200, {{"predictions", out}});
  }

  void get_prediction(const httplib::Request& req, httplib::Response& res) {
    const auto m = model(req.path_params.at("id"));
    const Index t = parse_index(req.path_params.at("index"), "test index");
    if (t < 0 || t >= m->test().size()) {
      throw HttpError(404, "not_found", "test index out of range",
                      {{"test_index", t}, {"n_test", m->test().size()}});
    }
    send_json(res, 200, prediction_json(*m, t));
  }

  void get_train_point(const httplib::Request& req, httplib::Response& res) {
    const auto m = model(req.path_params.at("id"));
    const Index i = parse_index(req.path_params.at("index"), "train index");
    if (i < 0 || i >= m->train().size()) {
      throw HttpError(404, "not_found", "train index out of range",
                      {{"index", i}, {"n_train", m->train().size()}});
    }
    send_json(res, 200, train_point_json(*m, i));
  }

  void post_flipset(const httplib::Request& req, httplib::Response& res) {
    const auto m = model(req.path_params.at("id"));
    const json body = parse_body(req);
    const Index t = field<Index>(body, "test_index");
    if (t < 0 || t >= m->test().size()) {
      throw HttpError(422, "invalid_index", "test index out of range",
                      {{"test_index", t}, {"n_test", m->test().size()}});
    }
    const Algorithm algorithm =
        parse_algorithm(field_or<std::string>(body, "algorithm", "iterative"));
    const int max_passes = field_or<int>(body, "max_passes", kDefaultMaxPasses);
    const bool verify = field_or<bool>(body, "verify", false);

    const auto key = std::make_tuple(m->id, t, algorithm);
    {
      std::lock_guard lock(jobs_mu);
      if (!running_jobs.insert(key).second) {
        throw HttpError(409, "job_running", "a flipset job for this test point is already running",
                        {{"model_id", m->id},
                         {"test_index", t},
                         {"algorithm", std::string(to_string(algorithm))}});
      }
    }
    struct Release {
      Impl* self;
      decltype(key) k;
      ~Release() {
        std::lock_guard lock(self->jobs_mu);
        self->running_jobs.erase(k);
      }
    } release{this, key};
    if (options.on_flipset_job) options.on_flipset_job();

    const Eigen::VectorXd x_t = dense_column<double>(m->test().row(t));
    FlipsetResult result = m->searcher->run(algorithm, x_t, m->tau(), max_passes, t);
    if (verify && result.found()) {
      result = verify_flip(std::move(result), m->train(), x_t, m->bundle.model.hyper);
    }
    json j = to_json(result);
    json members = json::array();
    for (std::size_t r = 0; r < result.members.size(); ++r) {
      json member = train_point_json(*m, result.members[r]);
      member["delta"] = result.member_deltas[r];
      members.push_back(std::move(member));
    }
    j["members"] = std::move(members);
    j.erase("member_deltas");
    j["tau"] = m->tau();
    send_json(res, 200, j);
  }

  void post_session(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto m = model(field<std::string>(body, "model_id"));
    const Index t = field<Index>(body, "test_index");
    if (t < 0 || t >= m->test().size()) {
      throw HttpError(422, "invalid_index", "test index out of range",
                      {{"test_index", t}, {"n_test", m->test().size()}});
    }
    auto s = std::make_shared<Session>();
    s->model_id = m->id;
    s->test_index = t;
    {
      std::lock_guard lock(registry_mu);
      s->id = "s" + std::to_string(next_session++);
      sessions[s->id] = s;
    }
    std::lock_guard lock(s->mu);
    persist(*s);
    send_json(res, 201, session_json(*s, *m));
  }

  void get_session(const httplib::Request& req, httplib::Response& res) {
    const auto s = session(req.path_params.at("id"));
    const auto m = model(s->model_id);
    std::lock_guard lock(s->mu);
    send_json(res, 200, session_json(*s, *m));
  }

  void patch_disputed(const httplib::Request& req, httplib::Response& res) {
    const auto s = session(req.path_params.at("id"));
    const auto m = model(s->model_id);
    const json body = parse_body(req);
    const auto add = field_or<std::vector<Index>>(body, "add", {});
    const auto remove = field_or<std::vector<Index>>(body, "remove", {});
    std::vector<Index> invalid;
    for (const auto* list : {&add, &remove}) {
      for (Index i : *list) {
        if (i < 0 || i >= m->train().size()) invalid.push_back(i);
      }
    }
    if (!invalid.empty()) {
      throw HttpError(422, "invalid_index", "disputed indices must be training indices",
                      {{"invalid", invalid}, {"n_train", m->train().size()}});
    }
    std::lock_guard lock(s->mu);
    for (Index i : add) s->disputed.insert(i);
    for (Index i : remove) s->disputed.erase(i);
    persist(*s);
    send_json(res, 200, session_json(*s, *m));
  }

  void post_whatif(const httplib::Request& req, httplib::Response& res) {
    const auto s = session(req.path_params.at("id"));
    const auto m = model(s->model_id);
    std::vector<Index> disputed;
    {
      std::lock_guard lock(s->mu);
      disputed.assign(s->disputed.begin(), s->disputed.end());
    }
    if (disputed.empty()) {
      throw HttpError(422, "empty_disputed", "the disputed set is empty");
    }
    if (!pool.try_acquire()) {
      throw HttpError(503, "pool_saturated", "all what-if workers are busy; retry later",
                      {{"workers", options.whatif_workers}});
    }
    struct Slot {
      std::counting_semaphore<kMaxWhatifWorkers>& sem;
      ~Slot() { sem.release(); }
    } slot{pool};
    if (options.on_whatif_slot) options.on_whatif_slot();

    const double original = m->test_probs[s->test_index];
    const int original_label = predicted_label(original, m->tau());
    const Eigen::VectorXd x_t = dense_column<double>(m->test().row(s->test_index));
    TrainedModel retrained;
    try {
      retrained = retrain_without(m->train(), disputed, m->bundle.model.hyper);
    } catch (const DataError& e) {
      throw HttpError(422, "degenerate_remainder", e.what(),
                      {{"disputed", disputed.size()}, {"n_train", m->train().size()}});
    }
    const double prob = predict_proba(retrained, x_t);
    const int label = predicted_label(prob, m->tau());

    json entry;
    {
      std::lock_guard lock(s->mu);
      entry = {{"seq", s->history.size() + 1},
               {"disputed", disputed},
               {"original_prob", original},
               {"original_label", original_label},
               {"retrained_prob", prob},
               {"retrained_label", label},
               {"flipped", label != original_label}};
      s->history.push_back(entry);
      persist(*s);
    }
    send_json(res, 200,
              {{"retrained_prob", prob}, {"flipped", label != original_label}, {"history_entry", entry}});
  }

  void routes() {
    auto bind = [this](void (Impl::*fn)(const httplib::Request&, httplib::Response&)) {
      return guarded([this, fn](const httplib::Request& req, httplib::Response& res) {
        (this->*fn)(req, res);
      });
    };
    server.Post("/models", bind(&Impl::post_models));
    server.Get("/models", bind(&Impl::list_models));
    server.Get("/models/:id", bind(&Impl::get_model));
    server.Get("/models/:id/predictions", bind(&Impl::list_predictions));
    server.Get("/models/:id/predictions/:index", bind(&Impl::get_prediction));
    server.Get("/models/:id/train/:index", bind(&Impl::get_train_point));
    server.Post("/models/:id/flipset", bind(&Impl::post_flipset));
    server.Post("/sessions", bind(&Impl::post_session));
    server.Get("/sessions/:id", bind(&Impl::get_session));
    server.Patch("/sessions/:id/disputed", bind(&Impl::patch_disputed));
    server.Post("/sessions/:id/whatif", bind(&Impl::post_whatif));
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "not_found" : "error",
                   "no route for " + req.method + " " + req.path);
      }
    });
    if (!options.ui_dir.empty()) {
      if (!server.set_mount_point("/", options.ui_dir.string())) {
        spdlog::warn("UI directory {} not found; static serving disabled", options.ui_dir.string());
      }
    }
  }
};

ContestService::ContestService(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.whatif_workers < 1 || impl_->options.whatif_workers > kMaxWhatifWorkers) {
    throw InputError("whatif_workers must be in [1, " + std::to_string(kMaxWhatifWorkers) + "]");
  }
  std::filesystem::create_directories(impl_->models_dir());
  std::filesystem::create_directories(impl_->sessions_dir());
  impl_->load_store();
  impl_->routes();
}

ContestService::~ContestService() { stop(); }

std::string ContestService::add_model(ModelBundle bundle) {
  return impl_->register_model(std::move(bundle));
}

int ContestService::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool ContestService::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool ContestService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ContestService::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ContestService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace flipset
