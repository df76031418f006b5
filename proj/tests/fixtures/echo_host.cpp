// Scripted model host for bridge tests. Usage: echo_host MODE [DUMP_FILE]
//   echo      DX rows get (1,0,0); regression rows get x[0] (the horizon)
//   mean      regression rows get the mean training target
//   reject    refuses the session
//   malformed answers the first prediction with a non-JSON line
//   short     omits the last prediction
//   extra     sends one prediction too many
//   shuffled  answers in reverse order
//   badnorm   DX probabilities that do not sum to 1
//   error     emits an error record and exits 1
//   crash     writes to stderr and exits 3 after the handshake
//   sleep     never answers
//   quiet     reads everything, then exits 0 without predictions
// With DUMP_FILE every received line is copied there verbatim.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

using json = nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  std::ofstream dump;
  if (argc > 2) dump.open(argv[2]);

  std::string line;
  auto read_line = [&]() -> bool {
    if (!std::getline(std::cin, line)) return false;
    if (dump) dump << line << '\n';
    return true;
  };

  if (!read_line()) return 2;
  const json hello = json::parse(line);
  const std::string task = hello.value("task", "");
  if (mode == "reject" || (task != "DX" && task != "ADAS" && task != "VENT")) {
    std::cout << json{{"ok", false}, {"msg", "unsupported task " + task}}.dump() << std::endl;
    return 0;
  }
  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "crash") {
    std::cerr << "boom: model failed to load" << std::endl;
    return 3;
  }
  std::cout << R"({"ok":true})" << std::endl;

  double sum = 0;
  std::size_t count = 0;
  std::vector<json> tests;
  bool in_test = false;
  while (read_line()) {
    const json msg = json::parse(line);
    if (msg.contains("end")) {
      if (msg["end"] == "test") break;
      in_test = true;
      continue;
    }
    if (in_test) {
      tests.push_back(msg);
    } else if (msg["y"].is_number()) {
      sum += msg["y"].get<double>();
      ++count;
    }
  }
  if (mode == "quiet") return 0;
  if (mode == "error") {
    std::cout << R"({"error":"inference failed"})" << std::endl;
    return 1;
  }

  std::vector<json> out;
  for (const auto& t : tests) {
    json p;
    p["id"] = t["id"];
    if (task == "DX") {
      p["p"] = mode == "badnorm" ? json::array({0.5, 0.5, 0.5}) : json::array({1.0, 0.0, 0.0});
    } else if (mode == "mean") {
      p["yhat"] = count ? sum / static_cast<double>(count) : 0.0;
    } else {
      p["yhat"] = t["x"][0];
    }
    out.push_back(p);
  }
  if (mode == "short" && !out.empty()) out.pop_back();
  if (mode == "extra") out.push_back(json{{"id", out.size()}, {"yhat", 0.0}});
  if (mode == "shuffled") std::reverse(out.begin(), out.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mode == "malformed" && i == 0) {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    std::cout << out[i].dump() << '\n';
  }
  std::cout << R"({"done":true})" << std::endl;
  return 0;
}
