#include "sixv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "sixv/error.hpp"

namespace sixv::oracle {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Bits [length, 128) as an integer, or nullopt if they exceed 64 bits.
std::optional<uint64_t> suffix_of(const addr::Address& a, const addr::Prefix& p) {
  uint64_t v = 0;
  for (int i = p.length(); i < 128; ++i) {
    if (128 - i > 64) {
      if (a.bit(i)) return std::nullopt;
      continue;
    }
    v = (v << 1) | uint64_t(a.bit(i));
  }
  return v;
}

std::vector<int> free_positions(const std::string& pattern) {
  std::vector<int> pos;
  for (int i = 0; i < 32; ++i)
    if (pattern[size_t(i)] == '*') pos.push_back(i);
  return pos;
}

bool matches_pattern(const addr::Address& a, const std::string& pattern) {
  for (int i = 0; i < 32; ++i) {
    const char c = pattern[size_t(i)];
    if (c == '*') continue;
    if (a.nybble(i) != hex_value(c)) return false;
  }
  return true;
}

addr::Address pattern_address(const std::string& pattern, uint64_t free_index) {
  addr::Address a;
  for (int i = 0; i < 32; ++i) {
    const char c = pattern[size_t(i)];
    if (c != '*') a.set_nybble(i, hex_value(c));
  }
  auto frees = free_positions(pattern);
  for (auto it = frees.rbegin(); it != frees.rend(); ++it) {
    a.set_nybble(*it, int(free_index & 0xf));
    free_index >>= 4;
  }
  return a;
}

uint64_t prefix_stream_id(const addr::Prefix& p) {
  return hash_mix(p.base().high64() ^ p.base().low64(), uint64_t(p.length()));
}

}  // namespace

addr::Address address_with_suffix(const addr::Prefix& prefix, uint64_t suffix) {
  addr::Address a = prefix.base();
  for (int i = 127; i >= prefix.length() && suffix; --i) {
    a.set_bit(i, int(suffix & 1));
    suffix >>= 1;
  }
  return a;
}

SyntheticUniverse::SyntheticUniverse(std::vector<PrefixSpec> prefixes, uint64_t seed)
    : prefixes_(std::move(prefixes)), seed_(seed) {
  for (const auto& p : prefixes_) {
    if (p.scheme == Scheme::WordPattern) {
      if (p.pattern.size() != 32)
        throw Error(ErrorCode::InvalidSpec,
                    "word-pattern template must have 32 characters");
      for (char c : p.pattern)
        if (c != '*' && hex_value(c) < 0)
          throw Error(ErrorCode::InvalidSpec, "bad template character");
      addr::Address fixed = pattern_address(p.pattern, 0);
      if (!p.prefix.contains(fixed))
        throw Error(ErrorCode::InvalidSpec,
                    "template disagrees with prefix " + p.prefix.to_string());
    }
    if (p.scheme == Scheme::CounterLow64 && p.count == 0)
      throw Error(ErrorCode::InvalidSpec,
                  "counter-low64 needs count > 0 for " + p.prefix.to_string());
    if (p.scheme == Scheme::RandomSparse &&
        (p.density <= 0.0 || p.density > 1.0))
      throw Error(ErrorCode::InvalidSpec,
                  "random-sparse density must be in (0,1]");
  }
}

const PrefixSpec* SyntheticUniverse::owning_spec(const addr::Address& a) const {
  const PrefixSpec* best = nullptr;
  for (const auto& p : prefixes_) {
    if (p.prefix.contains(a) &&
        (!best || p.prefix.length() > best->prefix.length()))
      best = &p;
  }
  return best;
}

bool SyntheticUniverse::is_active(const addr::Address& a) const {
  const PrefixSpec* spec = owning_spec(a);
  if (!spec) return false;
  switch (spec->scheme) {
    case Scheme::Aliased:
      return true;
    case Scheme::CounterLow64: {
      auto s = suffix_of(a, spec->prefix);
      return s.has_value() && *s < spec->count;
    }
    case Scheme::WordPattern:
      return matches_pattern(a, spec->pattern);
    case Scheme::RandomSparse: {
      uint64_t h = hash_mix(hash_mix(a.high64(), seed_), a.low64());
      return (double(h >> 11) * 0x1.0p-53) < spec->density;
    }
  }
  return false;
}

std::vector<addr::Prefix> SyntheticUniverse::prefix_table() const {
  std::vector<addr::Prefix> table;
  table.reserve(prefixes_.size());
  for (const auto& p : prefixes_) table.push_back(p.prefix);
  return table;
}

addr::SeedSet SyntheticUniverse::sample_seeds() const {
  std::vector<addr::Address> seeds;
  for (const auto& p : prefixes_) {
    switch (p.scheme) {
      case Scheme::CounterLow64:
        for (uint64_t i = 0; i < std::min<uint64_t>(p.seeds, p.count); ++i)
          seeds.push_back(address_with_suffix(p.prefix, i));
        break;
      case Scheme::Aliased:
        for (uint64_t i = 0; i < p.seeds; ++i)
          seeds.push_back(address_with_suffix(p.prefix, i));
        break;
      case Scheme::WordPattern: {
        const uint64_t space = 1ULL << (4 * free_positions(p.pattern).size());
        for (uint64_t i = 0; i < std::min<uint64_t>(p.seeds, space); ++i)
          seeds.push_back(pattern_address(p.pattern, i));
        break;
      }
      case Scheme::RandomSparse: {
        // Scan suffixes upward and reveal the first actives found; bounded so
        // a far-too-low density cannot loop forever.
        uint64_t found = 0;
        const uint64_t limit =
            uint64_t(std::min(1e9, double(p.seeds) / p.density * 50.0)) + 1;
        for (uint64_t i = 0; i < limit && found < p.seeds; ++i) {
          addr::Address a = address_with_suffix(p.prefix, i);
          if (is_active(a)) {
            seeds.push_back(a);
            ++found;
          }
        }
        break;
      }
    }
  }
  return addr::SeedSet(seeds, prefix_table());
}

std::optional<uint64_t> SyntheticUniverse::ground_truth_count(const PrefixSpec& p) const {
  switch (p.scheme) {
    case Scheme::CounterLow64:
      return p.count;
    case Scheme::WordPattern: {
      size_t f = free_positions(p.pattern).size();
      if (f > 15) return std::nullopt;
      return 1ULL << (4 * f);
    }
    case Scheme::Aliased: {
      int free_bits = 128 - p.prefix.length();
      if (free_bits > 62) return std::nullopt;
      return 1ULL << free_bits;
    }
    case Scheme::RandomSparse:
      return std::nullopt;
  }
  return std::nullopt;
}

double SyntheticUniverse::uniform_random_hit_probability(const PrefixSpec& p) const {
  const double free_bits = double(128 - p.prefix.length());
  switch (p.scheme) {
    case Scheme::Aliased:
      return 1.0;
    case Scheme::RandomSparse:
      return p.density;
    case Scheme::CounterLow64:
      return double(p.count) * std::pow(2.0, -free_bits);
    case Scheme::WordPattern: {
      const double f = double(free_positions(p.pattern).size());
      return std::pow(2.0, 4.0 * f - free_bits);
    }
  }
  return 0.0;
}

SyntheticUniverse build_universe(const std::string& spec_json, uint64_t seed_override,
                                 bool have_override) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec_json);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("bad universe JSON: ") + e.what());
  }
  uint64_t seed = j.value("universe_seed", uint64_t(1));
  if (have_override) seed = seed_override;
  if (!j.contains("prefixes") || !j["prefixes"].is_array() || j["prefixes"].empty())
    throw Error(ErrorCode::InvalidSpec, "universe spec needs a non-empty 'prefixes' array");

  std::vector<PrefixSpec> specs;
  for (const auto& e : j["prefixes"]) {
    PrefixSpec s;
    s.prefix = addr::parse_prefix(e.at("prefix").get<std::string>());
    const std::string scheme = e.at("scheme").get<std::string>();
    if (scheme == "counter-low64") s.scheme = Scheme::CounterLow64;
    else if (scheme == "random-sparse") s.scheme = Scheme::RandomSparse;
    else if (scheme == "word-pattern") s.scheme = Scheme::WordPattern;
    else if (scheme == "aliased") s.scheme = Scheme::Aliased;
    else throw Error(ErrorCode::InvalidSpec, "unknown scheme: " + scheme);
    s.count = e.value("count", uint64_t(0));
    s.density = e.value("density", 0.0);
    s.pattern = e.value("template", std::string());
    s.seeds = e.value("seeds", size_t(0));
    specs.push_back(std::move(s));
  }
  return SyntheticUniverse(std::move(specs), seed);
}

SyntheticUniverse build_universe_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return build_universe(ss.str());
}

ProbeResult probe(const SyntheticUniverse& u, const std::vector<addr::Address>& batch,
                  ProbeLedger& ledger, uint64_t budget_cap) {
  ProbeResult result;
  for (const auto& a : batch) {
    auto it = ledger.probed.find(a);
    if (it != ledger.probed.end()) {
      result.verdicts.push_back(it->second);
      continue;
    }
    if (ledger.under_known_alias(a)) {
      result.verdicts.push_back(ProbeVerdict{a, true, 1});
      continue;
    }
    if (budget_cap > 0 && ledger.budget_spent >= budget_cap) {
      result.budget_exhausted = true;
      break;
    }
    ProbeVerdict v;
    v.address = a;
    v.active = u.is_active(a);
    v.rtt_ticks = v.active
        ? 1 + int(hash_mix(a.low64(), u.seed()) % 16)
        : 0;
    ledger.probed.emplace(a, v);
    ledger.budget_spent++;
    result.verdicts.push_back(v);
  }
  return result;
}

bool detect_alias(const SyntheticUniverse& u, const addr::Prefix& prefix,
                  int probes, int check_len) {
  if (check_len <= prefix.length())
    throw Error(ErrorCode::InvalidArgument, "check_len must exceed prefix length");
  Rng rng(u.seed() ^ prefix_stream_id(prefix));
  for (int i = 0; i < probes; ++i) {
    addr::Address a = prefix.base();
    for (int b = prefix.length(); b < check_len; ++b)
      a.set_bit(b, int(rng.next_u64() & 1));
    if (!u.is_active(a)) return false;
  }
  return true;
}

std::vector<ProbeVerdict> external_scan(const std::vector<addr::Address>& batch,
                                        const ExternalScanConfig& config) {
  if (!config.enabled || config.scanner_path.empty())
    throw Error(ErrorCode::ScannerUnavailable,
                "external scanning is disabled; enable it explicitly in the "
                "config and point scanner_path at an operator-supplied binary "
                "(stdin: newline address list, stdout: responding addresses)");

  const std::string in_path = "/tmp/sixv_scan_in_" + std::to_string(::getpid());
  const std::string out_path = "/tmp/sixv_scan_out_" + std::to_string(::getpid());
  {
    std::ofstream in(in_path);
    for (const auto& a : batch) in << addr::format_address(a) << "\n";
  }
  std::string cmd = "'" + config.scanner_path + "' --rate-mbps " +
                    std::to_string(config.rate_mbps) + " < '" + in_path + "' > '" +
                    out_path + "'";
  int rc = std::system(cmd.c_str());
  std::remove(in_path.c_str());
  if (rc != 0) {
    std::remove(out_path.c_str());
    throw Error(ErrorCode::ScannerUnavailable,
                "scanner exited with status " + std::to_string(rc));
  }

  std::set<addr::Address> responders;
  std::ifstream out(out_path);
  std::string line;
  while (std::getline(out, line)) {
    if (line.empty()) continue;
    try {
      responders.insert(addr::parse_address(line));
    } catch (const Error& e) {
      std::remove(out_path.c_str());
      throw Error(ErrorCode::ScannerParseError,
                  std::string("bad scanner output line: ") + e.what());
    }
  }
  std::remove(out_path.c_str());

  std::vector<ProbeVerdict> verdicts;
  verdicts.reserve(batch.size());
  for (const auto& a : batch)
    verdicts.push_back(ProbeVerdict{a, responders.count(a) > 0, 0});
  return verdicts;
}

}  // namespace sixv::oracle
