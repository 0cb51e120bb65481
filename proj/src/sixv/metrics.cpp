#include "sixv/metrics.hpp"

#include <sstream>

#include <json.hpp>

#include "sixv/error.hpp"

namespace sixv::metrics {

double hit_rate(const std::set<addr::Address>& candidates,
                const std::set<addr::Address>& actives,
                const std::set<addr::Address>& seeds) {
  if (candidates.empty())
    throw Error(ErrorCode::EmptyCandidates, "hit_rate of empty candidate set");
  uint64_t hits = 0;
  for (const auto& c : candidates)
    if (actives.count(c) && !seeds.count(c)) ++hits;
  return double(hits) / double(candidates.size());
}

uint64_t cover_num(const std::set<addr::Address>& actives,
                   const std::vector<addr::Prefix>& prefix_table) {
  std::set<addr::Prefix> covered;
  for (const auto& a : actives)
    covered.insert(addr::SeedSet::longest_match(prefix_table, a));
  return covered.size();
}

double conversion_gain(double p_pct, double hr_pre2, double hr_tau2, double hr_tau1) {
  if (p_pct <= 0.0 || p_pct >= 100.0)
    throw Error(ErrorCode::InvalidArgument, "p percentage must be in (0,100)");
  if (hr_tau1 <= 0.0)
    throw Error(ErrorCode::ZeroBaseline, "baseline hit rate must be positive");
  return (p_pct * hr_pre2 + (100.0 - p_pct) * hr_tau2) / (100.0 * hr_tau1) - 1.0;
}

double conversion_rate(const std::map<addr::Prefix, uint64_t>& prefix_counts) {
  if (prefix_counts.empty())
    throw Error(ErrorCode::EmptySet, "conversion_rate over empty prefix map");
  uint64_t converted = 0;
  for (const auto& [p, count] : prefix_counts)
    if (count > 10) ++converted;  // strictly greater, 10 itself is not converted
  return double(converted) / double(prefix_counts.size());
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["hit_rate"] = hit_rate;
  j["cover_num"] = cover_num;
  j["budget"] = budget;
  j["actives_found"] = actives_found;
  j["rounds"] = nlohmann::json::array();
  for (const auto& r : rounds) {
    j["rounds"].push_back({{"round", r.round},
                           {"budget_spent", r.budget_spent},
                           {"actives_found", r.actives_found},
                           {"hit_rate", r.hit_rate},
                           {"cover_num", r.cover_num}});
  }
  return j.dump(2);
}

std::string EvalReport::rounds_csv() const {
  std::ostringstream out;
  out << "round,budget_spent,actives_found,hit_rate,cover_num\n";
  for (const auto& r : rounds)
    out << r.round << ',' << r.budget_spent << ',' << r.actives_found << ','
        << r.hit_rate << ',' << r.cover_num << '\n';
  return out.str();
}

}  // namespace sixv::metrics
