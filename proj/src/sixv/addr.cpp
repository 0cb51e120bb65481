#include "sixv/addr.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace sixv::addr {

namespace {

[[noreturn]] void bad_address(size_t pos, const std::string& reason) {
  throw Error(ErrorCode::MalformedAddress,
              "malformed address at position " + std::to_string(pos) + ": " + reason);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses a dotted-quad IPv4 suffix into two 16-bit groups.
bool parse_v4_suffix(const std::string& s, size_t pos, uint16_t out[2]) {
  int parts[4];
  int np = 0;
  size_t i = pos;
  while (i < s.size() && np < 4) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    int v = 0;
    size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + (s[i] - '0');
      if (v > 255 || i - start >= 3) return false;
      ++i;
    }
    parts[np++] = v;
    if (np < 4) {
      if (i >= s.size() || s[i] != '.') return false;
      ++i;
    }
  }
  if (np != 4 || i != s.size()) return false;
  out[0] = uint16_t((parts[0] << 8) | parts[1]);
  out[1] = uint16_t((parts[2] << 8) | parts[3]);
  return true;
}

}  // namespace

Address parse_address(const std::string& text) {
  if (text.empty()) bad_address(0, "empty string");

  std::vector<uint16_t> head, tail;
  bool seen_gap = false;
  size_t i = 0;
  const size_t n = text.size();

  if (text[0] == ':') {
    if (n < 2 || text[1] != ':') bad_address(0, "leading single ':'");
    seen_gap = true;
    i = 2;
  }

  while (i < n) {
    // Embedded IPv4 suffix? Only when the current token itself holds a dot.
    size_t dot = text.find('.', i);
    size_t colon = text.find(':', i);
    if (dot != std::string::npos && (colon == std::string::npos || dot < colon)) {
      uint16_t v4[2];
      if (!parse_v4_suffix(text, i, v4)) bad_address(i, "bad embedded IPv4 suffix");
      auto& dst = seen_gap ? tail : head;
      dst.push_back(v4[0]);
      dst.push_back(v4[1]);
      i = n;
      break;
    }
    int v = 0;
    size_t start = i;
    while (i < n && hex_value(text[i]) >= 0) {
      v = (v << 4) | hex_value(text[i]);
      if (i - start >= 4) bad_address(start, "group longer than 4 hex digits");
      ++i;
    }
    if (i == start) bad_address(i, i < n ? std::string("unexpected character '") + text[i] + "'"
                                         : "trailing ':'");
    (seen_gap ? tail : head).push_back(uint16_t(v));
    if (i == n) break;
    if (text[i] != ':') bad_address(i, std::string("unexpected character '") + text[i] + "'");
    ++i;
    if (i < n && text[i] == ':') {
      if (seen_gap) bad_address(i, "second '::'");
      seen_gap = true;
      ++i;
      if (i == n) break;  // trailing "::"
    } else if (i == n) {
      bad_address(i, "trailing ':'");
    }
  }

  size_t groups = head.size() + tail.size();
  if (seen_gap) {
    if (groups >= 8) bad_address(0, "too many groups for '::'");
  } else if (groups != 8) {
    bad_address(0, "expected 8 groups, got " + std::to_string(groups));
  }

  Address a;
  for (size_t g = 0; g < head.size(); ++g) a.set_group(int(g), head[g]);
  for (size_t g = 0; g < tail.size(); ++g)
    a.set_group(int(8 - tail.size() + g), tail[g]);
  return a;
}

std::string format_address(const Address& a) {
  uint16_t g[8];
  for (int i = 0; i < 8; ++i) g[i] = a.group(i);

  // Longest run of zero groups (leftmost on ties); compress only runs >= 2.
  int best_start = -1, best_len = 0;
  for (int i = 0; i < 8;) {
    if (g[i] != 0) { ++i; continue; }
    int j = i;
    while (j < 8 && g[j] == 0) ++j;
    if (j - i > best_len) { best_len = j - i; best_start = i; }
    i = j;
  }
  if (best_len < 2) best_start = -1;

  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 8;) {
    if (i == best_start) {
      out << "::";
      i += best_len;
      continue;
    }
    if (i > 0 && i != best_start + best_len) out << ':';
    out << g[i];
    ++i;
  }
  std::string s = out.str();
  if (s.empty()) s = "::";
  return s;
}

Prefix::Prefix(const Address& base, int length) : base_(base), length_(length) {
  if (length < 0 || length > 128)
    throw Error(ErrorCode::MalformedPrefix, "prefix length out of range");
  for (int i = length; i < 128; ++i) base_.set_bit(i, 0);
}

bool Prefix::contains(const Address& a) const {
  int full = length_ / 8;
  for (int i = 0; i < full; ++i)
    if (a.bytes()[i] != base_.bytes()[i]) return false;
  int rem = length_ % 8;
  if (rem) {
    uint8_t mask = uint8_t(0xff << (8 - rem));
    if ((a.bytes()[full] & mask) != (base_.bytes()[full] & mask)) return false;
  }
  return true;
}

std::string Prefix::to_string() const {
  return format_address(base_) + "/" + std::to_string(length_);
}

Prefix parse_prefix(const std::string& text) {
  auto slash = text.rfind('/');
  if (slash == std::string::npos)
    throw Error(ErrorCode::MalformedPrefix, "missing '/': " + text);
  int len;
  try {
    len = std::stoi(text.substr(slash + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedPrefix, "bad length: " + text);
  }
  return Prefix(parse_address(text.substr(0, slash)), len);
}

Prefix SeedSet::longest_match(const std::vector<Prefix>& table, const Address& a) {
  const Prefix* best = nullptr;
  for (const auto& p : table) {
    if (p.contains(a) && (!best || p.length() > best->length())) best = &p;
  }
  if (best) return *best;
  return Prefix();  // ::/0
}

SeedSet::SeedSet(std::vector<Address> addresses, std::vector<Prefix> table)
    : table_(std::move(table)) {
  bool has_catch_all = std::any_of(table_.begin(), table_.end(),
                                   [](const Prefix& p) { return p.length() == 0; });
  if (!has_catch_all) table_.push_back(Prefix());
  std::set<Address> seen;
  for (const auto& a : addresses) {
    if (!seen.insert(a).second) continue;
    addresses_.push_back(a);
    owner_.emplace(a, longest_match(table_, a));
  }
  if (addresses_.empty())
    throw Error(ErrorCode::EmptySeedSet, "seed set is empty");
}

const Prefix& SeedSet::prefix_of(const Address& a) const {
  auto it = owner_.find(a);
  if (it == owner_.end())
    throw Error(ErrorCode::InvalidArgument, "address not in seed set: " + format_address(a));
  return it->second;
}

bool SeedSet::contains(const Address& a) const { return owner_.count(a) > 0; }

namespace {
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

std::vector<Address> parse_hitlist_lines(const std::vector<std::string>& lines,
                                         LoadReport* report) {
  std::vector<Address> out;
  size_t lineno = 0;
  for (const auto& raw : lines) {
    ++lineno;
    std::string s = strip(raw);
    if (s.empty() || s[0] == '#') continue;
    if (report) report->lines++;
    try {
      out.push_back(parse_address(s));
      if (report) report->parsed++;
    } catch (const Error& e) {
      if (report)
        report->errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prefix> load_prefix_table(const std::string& path) {
  std::vector<Prefix> table;
  for (const auto& raw : read_lines(path)) {
    std::string s = strip(raw);
    if (s.empty() || s[0] == '#') continue;
    table.push_back(parse_prefix(s));
  }
  return table;
}

SeedSet load_hitlist(const std::string& hitlist_path,
                     const std::string& prefix_table_path,
                     LoadReport* report) {
  LoadReport local;
  LoadReport* rep = report ? report : &local;
  auto addrs = parse_hitlist_lines(read_lines(hitlist_path), rep);
  if (addrs.empty())
    throw Error(ErrorCode::EmptySeedSet, "no valid addresses in " + hitlist_path);
  auto table = prefix_table_path.empty() ? std::vector<Prefix>{}
                                         : load_prefix_table(prefix_table_path);
  SeedSet set(addrs, table);
  std::set<Address> uniq(addrs.begin(), addrs.end());
  rep->duplicates = addrs.size() - uniq.size();
  for (const auto& a : set.addresses())
    if (set.prefix_of(a).length() == 0) rep->unmatched++;
  return set;
}

CensusReport few_seed_census(const SeedSet& s, size_t threshold) {
  if (threshold < 1)
    throw Error(ErrorCode::InvalidArgument, "census threshold must be >= 1");
  std::map<Prefix, size_t> counts;
  for (const auto& a : s.addresses()) counts[s.prefix_of(a)]++;
  CensusReport rep;
  for (const auto& [p, c] : counts) {
    rep.counts.emplace_back(p, c);
    if (c < threshold) rep.few_seed++;
  }
  rep.prefixes = counts.size();
  rep.ratio = rep.prefixes ? double(rep.few_seed) / double(rep.prefixes) : 0.0;
  return rep;
}

}  // namespace sixv::addr
