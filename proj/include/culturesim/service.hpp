#pragma once

#include "culturesim/agents.hpp"
#include "culturesim/backend.hpp"
#include "culturesim/engine.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace culturesim {

enum class JobState { Pending, Running, Done, Failed };
std::string to_string(JobState state);

struct JobRecord {
  std::string id;
  SimulationConfig config;
  JobState state = JobState::Pending;
  bool queued = false;  // run requested, waiting for a worker
  int current_seed = 0;
  int current_generation = 0;
  std::string reason;  // Failed
  std::string created_at;
  std::string started_at;
  std::string finished_at;
  std::filesystem::path results;
};

nlohmann::json to_json(const JobRecord& job);

struct ServiceOptions {
  std::filesystem::path results_root = "results";
  std::optional<std::filesystem::path> registry_dir;  // holds prompts/ and personalities/
  int max_concurrent_jobs = 1;
  int parallelism = 4;  // global cap on in-flight backend requests across jobs
  std::optional<std::filesystem::path> static_dir;
};

/// HTTP status carried by service errors.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Job lifecycle and result access behind the HTTP API. Jobs run on a bounded worker pool.
class SimulationService {
 public:
  explicit SimulationService(ServiceOptions options);
  ~SimulationService();
  SimulationService(const SimulationService&) = delete;
  SimulationService& operator=(const SimulationService&) = delete;

  /// Config JSON, with optional registry references (`prompts.initialization_name`,
  /// `prompts.transformation_name`, `personalities.name`, `personalities.names`).
  /// Throws ServiceError(400).
  std::string create(const nlohmann::json& body);
  /// Throws ServiceError(404) / ServiceError(409) when the job is not pending.
  void run(const std::string& id);
  JobRecord status(const std::string& id) const;
  std::vector<JobRecord> jobs() const;
  /// Blocks until the job is Done or Failed, or the timeout expires.
  bool wait(const std::string& id, std::chrono::milliseconds timeout) const;

  /// summary_metrics.json exactly as written. Throws ServiceError(404) before it exists.
  std::string metrics(const std::string& id) const;
  /// kind: matrix | stories | keywords | layout | metrics | word_chains
  nlohmann::json seed_file(const std::string& id, int seed, const std::string& kind) const;

  const TextRegistry& prompts() const noexcept { return prompts_; }
  const TextRegistry& personalities() const noexcept { return personalities_; }
  TextRegistry& prompts() noexcept { return prompts_; }
  TextRegistry& personalities() noexcept { return personalities_; }

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server);

 private:
  void worker_loop();
  void execute(const std::string& id);
  const JobRecord& find(const std::string& id) const;  // caller holds mutex_

  ServiceOptions options_;
  TextRegistry prompts_;
  TextRegistry personalities_;
  std::shared_ptr<RequestLimiter> limiter_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, JobRecord> jobs_;
  std::deque<std::string> queue_;
  int counter_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Topology preview from query parameters kind, agents and (for caveman) cliques.
/// Throws ServiceError(400).
nlohmann::json topology_preview(const std::string& kind, const std::string& agents, const std::string& cliques);

}  // namespace culturesim
