#pragma once

#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <sys/types.h>

#include "json.hpp"

#include "subtrack/affordance.hpp"

namespace subtrack {

// One request/response exchange with an out-of-process provider.
// Implementations throw Error(kProviderUnreachable) on transport failure
// and Error(kMalformedResponse) when the reply is not a JSON object.
class ProviderTransport {
 public:
  virtual ~ProviderTransport() = default;
  virtual nlohmann::json request(const nlohmann::json& message) = 0;
};

// Line-delimited JSON over the stdin/stdout of a child process started
// with /bin/sh -c. Requests are serialized on the single pipe pair.
class StdioTransport : public ProviderTransport {
 public:
  explicit StdioTransport(const std::string& command);
  ~StdioTransport() override;
  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  nlohmann::json request(const nlohmann::json& message) override;

 private:
  pid_t child_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
};

// JSON POST to http://host:port/path.
class HttpTransport : public ProviderTransport {
 public:
  explicit HttpTransport(const std::string& url);
  nlohmann::json request(const nlohmann::json& message) override;

 private:
  std::string base_;
  std::string path_;
};

// In-process transport, mostly for tests.
class CallbackTransport : public ProviderTransport {
 public:
  explicit CallbackTransport(std::function<nlohmann::json(const nlohmann::json&)> fn) : fn_(std::move(fn)) {}
  nlohmann::json request(const nlohmann::json& message) override { return fn_(message); }

 private:
  std::function<nlohmann::json(const nlohmann::json&)> fn_;
};

// "http://..." selects HTTP, "stdio:<command>" a child process.
// Throws Error(kConfig) for anything else.
std::unique_ptr<ProviderTransport> make_transport(const std::string& endpoint);

nlohmann::json frame_message(const TrackFrame& frame);

// Forwards every affordance evaluation to the transport. Billing follows the
// base class: one generation per (subgoal, polarity) per episode.
class ExternalAffordanceProvider : public AffordanceProvider {
 public:
  explicit ExternalAffordanceProvider(std::shared_ptr<ProviderTransport> transport)
      : transport_(std::move(transport)) {}

 protected:
  AffordanceSampleSet evaluate(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                               RandomSource& rng) override;

 private:
  std::shared_ptr<ProviderTransport> transport_;
};

// Parses {"points":[[x,y],...]}; throws Error(kMalformedResponse).
AffordanceSampleSet parse_points(const nlohmann::json& response, ImageSize image);

}  // namespace subtrack
