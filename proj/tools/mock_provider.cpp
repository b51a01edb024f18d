// Scripted stand-in for an external provider. Answers "init" and
// "affordance" requests over stdio (one JSON object per line) or HTTP.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "subtrack/affordance.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/sim.hpp"
#include "subtrack/task.hpp"

using nlohmann::json;
using namespace subtrack;

namespace {

class Responder {
 public:
  Responder(const std::string& task_id, std::string fault, std::uint64_t seed)
      : sim_(Simulator::load(task_id)), provider_(sim_.geometry()), fault_(std::move(fault)), rng_(seed) {}

  json handle(const json& req) {
    if (fault_ == "garbage") return json("not an object");
    const std::string type = req.value("type", "");
    if (type == "init") return init();
    if (type == "affordance") return affordance(req);
    return json{{"error", "unknown request type"}};
  }

 private:
  json init() const {
    json subgoals = json::array();
    for (const auto& s : sim_.subgoals()) subgoals.push_back(subgoal_to_json(s));
    if (fault_ == "bad_relation") subgoals[0]["relation"] = "floating_above";
    std::vector<int> h0 = sim_.ground_truth(sim_.canonical_state());
    if (fault_ == "short_h0") h0.pop_back();
    return json{{"subgoals", subgoals}, {"h0", h0}, {"queries", sim_.subgoals().size()}};
  }

  json affordance(const json& req) {
    if (fault_ == "empty") return json{{"points", json::array()}};
    const int id = req.at("subgoal_id").get<int>();
    const auto& subgoals = sim_.subgoals();
    if (id < 1 || id > static_cast<int>(subgoals.size())) return json{{"error", "unknown subgoal"}};
    const json& fj = req.at("frame");
    const auto size = fj.at("image_size").get<std::vector<int>>();
    const TrackFrame frame = frame_from_json(fj, ImageSize{size.at(0), size.at(1)});
    const Polarity polarity = req.at("polarity").get<int>() == 1 ? Polarity::kSatisfied : Polarity::kUnsatisfied;
    const auto set = provider_.sample(subgoals[static_cast<std::size_t>(id - 1)], polarity, frame, rng_);
    json points = json::array();
    for (const auto& p : set.points) points.push_back({p.x, p.y});
    return json{{"points", points}};
  }

  Simulator sim_;
  ScriptedAffordanceProvider provider_;
  std::string fault_;
  RandomSource rng_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scripted provider speaking the line-delimited JSON protocol"};
  std::string task = "place-same-color";
  std::string fault = "none";
  std::optional<int> port;
  std::uint64_t seed = 0;
  app.add_option("--task", task, "Task whose subgoals and geometry are served");
  app.add_option("--fault", fault, "Injected fault")
      ->check(CLI::IsMember({"none", "empty", "short_h0", "bad_relation", "garbage"}));
  app.add_option("--http", port, "Serve HTTP POST on this port instead of stdio");
  app.add_option("--seed", seed, "Seed for sampled affordance points");
  CLI11_PARSE(app, argc, argv);

  try {
    Responder responder(task, fault, seed);
    if (port) {
      httplib::Server server;
      server.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
        json reply;
        try {
          reply = responder.handle(json::parse(req.body));
        } catch (const std::exception& e) {
          res.status = 400;
          reply = json{{"error", e.what()}};
        }
        res.set_content(reply.dump(), "application/json");
      });
      return server.listen("127.0.0.1", *port) ? 0 : 3;
    }
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      json reply;
      try {
        reply = responder.handle(json::parse(line));
      } catch (const std::exception& e) {
        reply = json{{"error", e.what()}};
      }
      std::cout << reply.dump() << '\n' << std::flush;
    }
  } catch (const std::exception& e) {
    std::cerr << "mock_provider: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
