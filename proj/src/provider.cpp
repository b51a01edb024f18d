#include "subtrack/provider.hpp"

#include <csignal>
#include <cstring>
#include <string_view>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"

#include "subtrack/error.hpp"
#include "subtrack/perception.hpp"

namespace subtrack {

using nlohmann::json;

namespace {

json parse_reply(const std::string& body) {
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("provider reply is not JSON: ") + e.what());
  }
  if (!reply.is_object()) throw Error(ErrorCode::kMalformedResponse, "provider reply must be a JSON object");
  return reply;
}

}  // namespace

StdioTransport::StdioTransport(const std::string& command) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorCode::kProviderUnreachable, "pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::kProviderUnreachable, "pipe() failed");
  }
  child_ = fork();
  if (child_ < 0) throw Error(ErrorCode::kProviderUnreachable, "fork() failed");
  if (child_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
}

StdioTransport::~StdioTransport() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (child_ > 0) {
    int status = 0;
    waitpid(child_, &status, 0);
  }
}

json StdioTransport::request(const json& message) {
  const std::string line = message.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) throw Error(ErrorCode::kProviderUnreachable, "provider process is not accepting input");
    written += static_cast<std::size_t>(n);
  }
  std::string reply;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, from_child_)) {
    reply += buf;
    if (!reply.empty() && reply.back() == '\n') break;
  }
  if (reply.empty()) throw Error(ErrorCode::kProviderUnreachable, "provider process closed its output");
  return parse_reply(reply);
}

HttpTransport::HttpTransport(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw Error(ErrorCode::kConfig, "HTTP endpoint must start with http://");
  const std::size_t slash = url.find('/', scheme.size());
  base_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

json HttpTransport::request(const json& message) {
  httplib::Client client(base_);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  auto res = client.Post(path_, message.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnreachable,
                "cannot reach provider at " + base_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kMalformedResponse, "provider answered HTTP " + std::to_string(res->status));
  }
  return parse_reply(res->body);
}

std::unique_ptr<ProviderTransport> make_transport(const std::string& endpoint) {
  if (endpoint.rfind("http://", 0) == 0) return std::make_unique<HttpTransport>(endpoint);
  if (endpoint.rfind("stdio:", 0) == 0) return std::make_unique<StdioTransport>(endpoint.substr(6));
  throw Error(ErrorCode::kConfig, "provider endpoint must be http://... or stdio:<command>");
}

json frame_message(const TrackFrame& frame) {
  json j = frame_to_json(frame);
  j["image_size"] = {frame.image_size.width, frame.image_size.height};
  return j;
}

AffordanceSampleSet parse_points(const json& response, ImageSize image) {
  if (!response.contains("points") || !response["points"].is_array()) {
    throw Error(ErrorCode::kMalformedResponse, "affordance reply needs a 'points' array");
  }
  AffordanceSampleSet set;
  for (const json& p : response["points"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::kMalformedResponse, "each point must be [x, y]");
    }
    set.points.push_back(Point{p[0].get<double>(), p[1].get<double>()});
  }
  validate_sample_set(set, image);
  return set;
}

AffordanceSampleSet ExternalAffordanceProvider::evaluate(const SubgoalSpec& subgoal, Polarity polarity,
                                                         const TrackFrame& frame, RandomSource& /*rng*/) {
  json message;
  message["type"] = "affordance";
  message["episode"] = episode_id();
  message["subgoal_id"] = subgoal.id;
  message["polarity"] = static_cast<int>(polarity);
  message["frame"] = frame_message(frame);
  return parse_points(transport_->request(message), frame.image_size);
}

}  // namespace subtrack
