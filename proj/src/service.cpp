#include "culturesim/service.hpp"

#include "culturesim/error.hpp"
#include "culturesim/io.hpp"
#include "culturesim/results.hpp"

#include <httplib.h>

#include <ctime>

namespace culturesim {

namespace {

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int parse_positive(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ServiceError(400, what + " must be an integer, got '" + text + "'");
}

}  // namespace

std::string to_string(JobState state) {
  switch (state) {
    case JobState::Pending:
      return "pending";
    case JobState::Running:
      return "running";
    case JobState::Done:
      return "done";
    case JobState::Failed:
      return "failed";
  }
  return "unknown";
}

nlohmann::json to_json(const JobRecord& job) {
  nlohmann::json j{{"id", job.id},
                   {"name", job.config.name},
                   {"state", to_string(job.state)},
                   {"queued", job.queued},
                   {"created_at", job.created_at},
                   {"results", job.results.string()},
                   {"n_seeds", job.config.n_seeds},
                   {"n_generations", job.config.grid().generations}};
  if (job.state == JobState::Running) {
    j["seed"] = job.current_seed;
    j["generation"] = job.current_generation;
  }
  if (job.state == JobState::Failed) j["reason"] = job.reason;
  if (!job.started_at.empty()) j["started_at"] = job.started_at;
  if (!job.finished_at.empty()) j["finished_at"] = job.finished_at;
  return j;
}

nlohmann::json topology_preview(const std::string& kind, const std::string& agents, const std::string& cliques) {
  try {
    TopologyKind k{parse_network_kind(kind), 0};
    if (k.network == NetworkKind::Caveman) k.n_cliques = cliques.empty() ? 0 : parse_positive(cliques, "cliques");
    const int n = parse_positive(agents, "agents");
    auto j = to_json(build_topology(k, n));
    auto nodes = nlohmann::json::array();
    for (int i = 0; i < n; ++i) nodes.push_back(i);
    j["nodes"] = nodes;
    return j;
  } catch (const InvalidConfig& e) {
    throw ServiceError(400, e.what());
  }
}

SimulationService::SimulationService(ServiceOptions options)
    : options_(std::move(options)),
      prompts_(TextRegistry::Kind::Prompts,
               options_.registry_dir ? std::optional(*options_.registry_dir / "prompts") : std::nullopt),
      personalities_(TextRegistry::Kind::Personalities,
                     options_.registry_dir ? std::optional(*options_.registry_dir / "personalities") : std::nullopt),
      limiter_(std::make_shared<RequestLimiter>(options_.parallelism)) {
  const int n = std::max(1, options_.max_concurrent_jobs);
  for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

SimulationService::~SimulationService() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  for (auto& w : workers_) w.join();
}

std::string SimulationService::create(const nlohmann::json& body) {
  if (!body.is_object()) throw ServiceError(400, "request body must be a JSON object");
  nlohmann::json resolved = body;
  try {
    if (resolved.contains("prompts") && resolved["prompts"].is_object()) {
      auto& p = resolved["prompts"];
      if (!p.contains("name") && p.contains("initialization_name") && p.contains("transformation_name")) {
        p["name"] = p["initialization_name"].get<std::string>() + "+" + p["transformation_name"].get<std::string>();
      }
      for (const char* field : {"initialization", "transformation"}) {
        const std::string ref = std::string(field) + "_name";
        if (p.contains(ref)) {
          p[field] = prompts_.resolve(p[ref].get<std::string>());
          p.erase(ref);
        }
      }
    }
    if (resolved.contains("personalities") && resolved["personalities"].is_object()) {
      auto& p = resolved["personalities"];
      if (p.contains("name")) {
        p["text"] = personalities_.resolve(p["name"].get<std::string>());
        p.erase("name");
      }
      if (p.contains("names")) {
        std::vector<std::string> texts;
        for (const auto& n : p["names"]) texts.push_back(personalities_.resolve(n.get<std::string>()));
        p["texts"] = texts;
        p["mode"] = "per_agent";
        p.erase("names");
      }
    }
    SimulationConfig config = config_from_json(resolved);
    config.validate();

    std::lock_guard lock(mutex_);
    JobRecord job;
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "%04d", ++counter_);
    job.id = config.name + "-" + suffix;
    job.config = std::move(config);
    job.created_at = now_iso8601();
    job.results = options_.results_root / job.id;
    const auto id = job.id;
    jobs_.emplace(id, std::move(job));
    return id;
  } catch (const InvalidConfig& e) {
    throw ServiceError(400, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, std::string("malformed configuration: ") + e.what());
  }
}

const JobRecord& SimulationService::find(const std::string& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw ServiceError(404, "unknown job '" + id + "'");
  return it->second;
}

void SimulationService::run(const std::string& id) {
  {
    std::lock_guard lock(mutex_);
    auto& job = const_cast<JobRecord&>(find(id));
    if (job.state != JobState::Pending || job.queued) {
      throw ServiceError(409, "job '" + id + "' is " + (job.queued ? "already queued" : to_string(job.state)));
    }
    job.queued = true;
    queue_.push_back(id);
  }
  changed_.notify_all();
}

JobRecord SimulationService::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return find(id);
}

std::vector<JobRecord> SimulationService::jobs() const {
  std::lock_guard lock(mutex_);
  std::vector<JobRecord> out;
  for (const auto& [id, job] : jobs_) out.push_back(job);
  return out;
}

bool SimulationService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return changed_.wait_for(lock, timeout, [&] {
    const auto& job = find(id);
    return job.state == JobState::Done || job.state == JobState::Failed;
  });
}

void SimulationService::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      auto& job = jobs_.at(id);
      job.queued = false;
      job.state = JobState::Running;
      job.started_at = now_iso8601();
    }
    changed_.notify_all();
    execute(id);
    changed_.notify_all();
  }
}

void SimulationService::execute(const std::string& id) {
  SimulationConfig config;
  std::filesystem::path out;
  {
    std::lock_guard lock(mutex_);
    config = jobs_.at(id).config;
    out = jobs_.at(id).results;
  }
  ExperimentOptions opts;
  opts.limiter = limiter_;
  opts.progress = [this, &id](const Progress& p) {
    std::lock_guard lock(mutex_);
    auto& job = jobs_.at(id);
    job.current_seed = p.seed_index;
    job.current_generation = p.generation;
  };

  JobState final_state = JobState::Done;
  std::string reason;
  try {
    const auto result = run_experiment(config, out, opts);
    if (!result.all_complete()) {
      final_state = JobState::Failed;
      for (const auto& s : result.seeds) {
        if (!s.complete) reason += (reason.empty() ? "" : "; ") + s.error;
      }
    }
  } catch (const std::exception& e) {
    final_state = JobState::Failed;
    reason = e.what();
  }
  std::lock_guard lock(mutex_);
  auto& job = jobs_.at(id);
  job.state = final_state;
  job.reason = reason;
  job.finished_at = now_iso8601();
}

std::string SimulationService::metrics(const std::string& id) const {
  std::filesystem::path path;
  {
    std::lock_guard lock(mutex_);
    path = results::summary_path(find(id).results);
  }
  if (!std::filesystem::is_regular_file(path)) throw ServiceError(404, "metrics for '" + id + "' are not available yet");
  return read_file(path);
}

nlohmann::json SimulationService::seed_file(const std::string& id, int seed, const std::string& kind) const {
  std::filesystem::path dir;
  int n_seeds = 0;
  {
    std::lock_guard lock(mutex_);
    const auto& job = find(id);
    dir = results::seed_dir(job.results, seed);
    n_seeds = job.config.n_seeds;
  }
  if (seed < 0 || seed >= n_seeds) throw ServiceError(404, "seed " + std::to_string(seed) + " out of range");
  static const std::map<std::string, std::string> files{{"matrix", "similarity_matrix.csv"},
                                                        {"stories", "stories.json"},
                                                        {"keywords", "keywords.json"},
                                                        {"layout", "layout.json"},
                                                        {"metrics", "metrics.json"},
                                                        {"word_chains", "word_chains.json"}};
  auto it = files.find(kind);
  if (it == files.end()) throw ServiceError(404, "unknown seed resource '" + kind + "'");
  const auto path = dir / it->second;
  if (!std::filesystem::is_regular_file(path)) throw ServiceError(404, kind + " for seed " + std::to_string(seed) + " not available");
  if (kind == "matrix") {
    const auto m = matrix_from_csv(read_file(path));
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      auto row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  }
  return nlohmann::json::parse(read_file(path));
}

void SimulationService::mount(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;

  auto reply = [](Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
  };
  // Wraps a handler so ServiceError and malformed input map onto HTTP statuses.
  auto guarded = [reply](auto handler) {
    return [reply, handler](const Request& req, Response& res) {
      try {
        handler(req, res);
      } catch (const ServiceError& e) {
        reply(res, e.status(), {{"error", e.what()}});
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", std::string("invalid JSON: ") + e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  };
  auto parse_body = [](const Request& req) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw ServiceError(400, "request body is not valid JSON");
    return body;
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(".*", [](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/simulations", guarded([=, this](const Request& req, Response& res) {
                const auto id = create(parse_body(req));
                reply(res, 201, {{"id", id}});
              }));
  server.Get("/simulations", guarded([=, this](const Request&, Response& res) {
               auto list = nlohmann::json::array();
               for (const auto& job : jobs()) list.push_back(to_json(job));
               reply(res, 200, list);
             }));
  server.Post(R"(/simulations/([^/]+)/run)", guarded([=, this](const Request& req, Response& res) {
                const std::string id = req.matches[1];
                run(id);
                reply(res, 202, to_json(status(id)));
              }));
  server.Get(R"(/simulations/([^/]+)/status)", guarded([=, this](const Request& req, Response& res) {
               reply(res, 200, to_json(status(req.matches[1])));
             }));
  server.Get(R"(/simulations/([^/]+)/config)", guarded([=, this](const Request& req, Response& res) {
               reply(res, 200, to_json(status(req.matches[1]).config));
             }));
  server.Get(R"(/simulations/([^/]+)/metrics)", guarded([=, this](const Request& req, Response& res) {
               res.set_content(metrics(req.matches[1]), "application/json; charset=utf-8");
             }));
  server.Get(R"(/simulations/([^/]+)/seeds/(\d+)/([a-z_]+))", guarded([=, this](const Request& req, Response& res) {
               const int seed = parse_positive(req.matches[2], "seed");
               reply(res, 200, seed_file(req.matches[1], seed, req.matches[3]));
             }));
  server.Get("/topology/preview", guarded([=](const Request& req, Response& res) {
               reply(res, 200,
                     topology_preview(req.get_param_value("kind"), req.get_param_value("agents"),
                                      req.get_param_value("cliques")));
             }));

  auto registry_routes = [&](const std::string& path, TextRegistry& registry) {
    server.Get(path, guarded([=, &registry](const Request&, Response& res) {
                 reply(res, 200, nlohmann::json(registry.entries()));
               }));
    server.Post(path, guarded([=, &registry](const Request& req, Response& res) {
                  const auto body = parse_body(req);
                  if (!body.is_object() || !body.contains("name") || !body.contains("text") ||
                      !body["name"].is_string() || !body["text"].is_string()) {
                    throw ServiceError(400, "expected {\"name\": string, \"text\": string}");
                  }
                  try {
                    registry.add(body["name"].get<std::string>(), body["text"].get<std::string>());
                  } catch (const InvalidConfig& e) {
                    throw ServiceError(400, e.what());
                  }
                  reply(res, 201, {{"name", body["name"]}});
                }));
  };
  registry_routes("/prompts", prompts_);
  registry_routes("/personalities", personalities_);

  if (options_.static_dir) server.set_mount_point("/", options_.static_dir->string());
}

}  // namespace culturesim
