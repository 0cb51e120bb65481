#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sixv/addr.hpp"

namespace sixv::metrics {

struct RoundStats {
  int round = 0;
  uint64_t budget_spent = 0;
  uint64_t actives_found = 0;
  double hit_rate = 0.0;
  uint64_t cover_num = 0;
};

struct EvalReport {
  double hit_rate = 0.0;
  uint64_t cover_num = 0;
  uint64_t budget = 0;
  uint64_t actives_found = 0;
  std::vector<RoundStats> rounds;

  std::string to_json() const;
  std::string rounds_csv() const;
};

// |C ∩ T − C ∩ S| / |C|
double hit_rate(const std::set<addr::Address>& candidates,
                const std::set<addr::Address>& actives,
                const std::set<addr::Address>& seeds);

// Distinct longest-match prefixes over the actives.
uint64_t cover_num(const std::set<addr::Address>& actives,
                   const std::vector<addr::Prefix>& prefix_table);

// (p*hr_pre2 + (100-p)*hr_tau2) / (100*hr_tau1) - 1
double conversion_gain(double p_pct, double hr_pre2, double hr_tau2, double hr_tau1);

// Fraction of prefixes whose count is strictly greater than 10.
double conversion_rate(const std::map<addr::Prefix, uint64_t>& prefix_counts);

}  // namespace sixv::metrics
