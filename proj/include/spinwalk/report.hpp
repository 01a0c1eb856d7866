#pragma once

// TestReport: the outcome of one named check, serialised as
//   {name, statistic, threshold, p, pass, n, provenance}
// with that key order. `p` is null when the check has no p-value.

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace spinwalk {

using Json = nlohmann::ordered_json;

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p;
  bool pass = false;
  std::size_t n = 0;
  std::string provenance;
};

/// statistic <= threshold passes.
inline TestReport at_most(std::string name, double statistic, double threshold, std::size_t n,
                          std::string provenance) {
  return {std::move(name), statistic, threshold, std::nullopt, statistic <= threshold, n, std::move(provenance)};
}

/// statistic >= threshold passes.
inline TestReport at_least(std::string name, double statistic, double threshold, std::size_t n,
                           std::string provenance) {
  return {std::move(name), statistic, threshold, std::nullopt, statistic >= threshold, n, std::move(provenance)};
}

inline Json to_json(const TestReport& r) {
  Json j;
  j["name"] = r.name;
  j["statistic"] = r.statistic;
  j["threshold"] = r.threshold;
  j["p"] = r.p ? Json(*r.p) : Json(nullptr);
  j["pass"] = r.pass;
  j["n"] = r.n;
  j["provenance"] = r.provenance;
  return j;
}

inline Json to_json(const std::vector<TestReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

inline TestReport report_from_json(const Json& j) {
  TestReport r;
  r.name = j.at("name").get<std::string>();
  r.statistic = j.at("statistic").get<double>();
  r.threshold = j.at("threshold").get<double>();
  if (!j.at("p").is_null()) r.p = j.at("p").get<double>();
  r.pass = j.at("pass").get<bool>();
  r.n = j.at("n").get<std::size_t>();
  r.provenance = j.at("provenance").get<std::string>();
  return r;
}

inline bool all_pass(const std::vector<TestReport>& reports) {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

}  // namespace spinwalk
