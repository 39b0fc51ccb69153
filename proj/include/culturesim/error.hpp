#pragma once

#include <stdexcept>
#include <string>

namespace culturesim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a documented precondition.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Agent count incompatible with the requested network kind.
class InvalidPopulation : public InvalidConfig {
 public:
  using InvalidConfig::InvalidConfig;
};

class AgentOutOfRange : public Error {
 public:
  using Error::Error;
};

class GenerationOutOfRange : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public InvalidConfig {
 public:
  using InvalidConfig::InvalidConfig;
};

/// A transformation prompt was requested for an agent with nothing to read.
class NoNeighborStories : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class MissingEmbeddings : public Error {
 public:
  using Error::Error;
};

/// Results folder is missing files or holds unparseable data.
class CorruptResults : public Error {
 public:
  using Error::Error;
};

/// Failure of a text-generation call. Carries the agent and generation that failed
/// once the engine has annotated it; both are -1 before that.
class BackendError : public Error {
 public:
  enum class Kind { Unreachable, MalformedResponse, EmptyGeneration };

  BackendError(Kind kind, std::string detail, int agent = -1, int generation = -1)
      : Error(format(kind, detail, agent, generation)),
        kind_(kind),
        detail_(std::move(detail)),
        agent_(agent),
        generation_(generation) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  int agent() const noexcept { return agent_; }
  int generation() const noexcept { return generation_; }

  BackendError annotated(int agent, int generation) const {
    return BackendError(kind_, detail_, agent, generation);
  }

  static const char* kind_name(Kind kind) {
    switch (kind) {
      case Kind::Unreachable:
        return "BackendUnreachable";
      case Kind::MalformedResponse:
        return "MalformedResponse";
      case Kind::EmptyGeneration:
        return "EmptyGeneration";
    }
    return "BackendError";
  }

 private:
  static std::string format(Kind kind, const std::string& detail, int agent, int generation) {
    std::string msg = kind_name(kind);
    if (agent >= 0) {
      msg += " (agent " + std::to_string(agent) + ", generation " + std::to_string(generation) + ")";
    }
    return msg + ": " + detail;
  }

  Kind kind_;
  std::string detail_;
  int agent_;
  int generation_;
};

}  // namespace culturesim
