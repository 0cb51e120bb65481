#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sixv/addr.hpp"
#include "sixv/rng.hpp"

namespace sixv::oracle {

struct ProbeVerdict {
  addr::Address address;
  bool active = false;
  int rtt_ticks = 0;
};

enum class Scheme { CounterLow64, RandomSparse, WordPattern, Aliased };

struct PrefixSpec {
  addr::Prefix prefix;
  Scheme scheme = Scheme::CounterLow64;
  uint64_t count = 0;          // counter-low64: actives are base+0 .. base+count-1
  double density = 0.0;        // random-sparse
  std::string pattern;         // word-pattern: 32 chars, hex or '*'
  size_t seeds = 0;            // how many actives the bias rule reveals
};

// Deterministic stand-in for the live network: activity is a pure function of
// (address, universe_seed).
class SyntheticUniverse {
public:
  SyntheticUniverse(std::vector<PrefixSpec> prefixes, uint64_t seed);

  bool is_active(const addr::Address& a) const;
  const std::vector<PrefixSpec>& prefixes() const { return prefixes_; }
  uint64_t seed() const { return seed_; }
  std::vector<addr::Prefix> prefix_table() const;

  // The biased seed sample the spec's rule reveals (per-prefix "first m").
  addr::SeedSet sample_seeds() const;

  // Exact active count for enumerable schemes; nullopt for random-sparse.
  std::optional<uint64_t> ground_truth_count(const PrefixSpec& p) const;
  // Expected in-prefix hit probability of a uniform random draw over the
  // prefix's free bits (analytic baseline for hit-rate comparisons).
  double uniform_random_hit_probability(const PrefixSpec& p) const;

  const PrefixSpec* owning_spec(const addr::Address& a) const;

private:
  std::vector<PrefixSpec> prefixes_;
  uint64_t seed_;
};

// Parses the JSON universe spec document.
SyntheticUniverse build_universe(const std::string& spec_json, uint64_t seed_override = 0,
                                 bool have_override = false);
SyntheticUniverse build_universe_file(const std::string& path);

struct ProbeLedger {
  std::map<addr::Address, ProbeVerdict> probed;
  uint64_t budget_spent = 0;
  std::set<addr::Prefix> aliased_prefixes;

  bool under_known_alias(const addr::Address& a) const {
    for (const auto& p : aliased_prefixes)
      if (p.contains(a)) return true;
    return false;
  }
};

struct ProbeResult {
  std::vector<ProbeVerdict> verdicts;
  bool budget_exhausted = false;  // hard cap hit; verdicts are partial
};

// budget_cap == 0 means unlimited. Known addresses and addresses under
// detected aliased prefixes answer for free.
ProbeResult probe(const SyntheticUniverse& u, const std::vector<addr::Address>& batch,
                  ProbeLedger& ledger, uint64_t budget_cap = 0);

bool detect_alias(const SyntheticUniverse& u, const addr::Prefix& prefix,
                  int probes = 16, int check_len = 96);

struct ExternalScanConfig {
  bool enabled = false;
  std::string scanner_path;
  int rate_mbps = 10;
};

// Optional operator-controlled adapter: shells out to a scanner binary whose
// contract is newline addresses on stdin, newline responders on stdout.
std::vector<ProbeVerdict> external_scan(const std::vector<addr::Address>& batch,
                                        const ExternalScanConfig& config);

// Builds an address whose first `prefix.length` bits come from the prefix and
// whose remaining bits hold `suffix` (low bits last).
addr::Address address_with_suffix(const addr::Prefix& prefix, uint64_t suffix);

}  // namespace sixv::oracle
