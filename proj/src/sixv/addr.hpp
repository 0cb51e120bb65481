#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sixv/error.hpp"

namespace sixv::addr {

// A 128-bit IPv6 address, most-significant byte first.
class Address {
public:
  Address() : bytes_{} {}
  explicit Address(const std::array<uint8_t, 16>& b) : bytes_(b) {}

  const std::array<uint8_t, 16>& bytes() const { return bytes_; }

  // Bit index 0..127, most-significant first.
  int bit(int i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1; }
  void set_bit(int i, int v) {
    uint8_t m = uint8_t(1u << (7 - (i & 7)));
    if (v) bytes_[i >> 3] |= m; else bytes_[i >> 3] &= uint8_t(~m);
  }

  // Group g in 0..7 (16 bits each).
  uint16_t group(int g) const {
    return uint16_t((bytes_[2 * g] << 8) | bytes_[2 * g + 1]);
  }
  void set_group(int g, uint16_t v) {
    bytes_[2 * g] = uint8_t(v >> 8);
    bytes_[2 * g + 1] = uint8_t(v & 0xff);
  }

  // Nybble index 0..31, most-significant first.
  int nybble(int i) const {
    uint8_t b = bytes_[i >> 1];
    return (i & 1) ? (b & 0xf) : (b >> 4);
  }
  void set_nybble(int i, int v) {
    uint8_t& b = bytes_[i >> 1];
    if (i & 1) b = uint8_t((b & 0xf0) | (v & 0xf));
    else b = uint8_t((b & 0x0f) | ((v & 0xf) << 4));
  }

  uint64_t high64() const { return load64(0); }
  uint64_t low64() const { return load64(8); }
  static Address from_halves(uint64_t hi, uint64_t lo) {
    Address a;
    a.store64(0, hi);
    a.store64(8, lo);
    return a;
  }

  auto operator<=>(const Address&) const = default;

private:
  uint64_t load64(int off) const {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[off + i];
    return v;
  }
  void store64(int off, uint64_t v) {
    for (int i = 7; i >= 0; --i) {
      bytes_[off + i] = uint8_t(v & 0xff);
      v >>= 8;
    }
  }

  std::array<uint8_t, 16> bytes_;
};

// A routed address block. Bits of `base` beyond `length` are zero.
class Prefix {
public:
  Prefix() : base_{}, length_(0) {}
  Prefix(const Address& base, int length);

  const Address& base() const { return base_; }
  int length() const { return length_; }

  bool contains(const Address& a) const;
  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;

private:
  Address base_;
  int length_;
};

// Throws Error(MalformedAddress) with a character position in the message.
Address parse_address(const std::string& text);

// Canonical lowercase fully-compressed form (RFC 5952 style).
std::string format_address(const Address& a);

// "addr/len" form.
Prefix parse_prefix(const std::string& text);

struct LoadReport {
  size_t lines = 0;
  size_t parsed = 0;
  size_t duplicates = 0;
  size_t unmatched = 0;  // assigned to the ::/0 catch-all
  std::vector<std::string> errors;
};

class SeedSet {
public:
  SeedSet() = default;
  SeedSet(std::vector<Address> addresses, std::vector<Prefix> table);

  const std::vector<Address>& addresses() const { return addresses_; }
  const std::vector<Prefix>& prefix_table() const { return table_; }
  const Prefix& prefix_of(const Address& a) const;
  bool contains(const Address& a) const;
  size_t size() const { return addresses_.size(); }

  // Longest-match against the table; falls back to ::/0.
  static Prefix longest_match(const std::vector<Prefix>& table, const Address& a);

private:
  std::vector<Address> addresses_;   // deduplicated, insertion order
  std::vector<Prefix> table_;        // includes ::/0 catch-all
  std::map<Address, Prefix> owner_;
};

SeedSet load_hitlist(const std::string& hitlist_path,
                     const std::string& prefix_table_path,
                     LoadReport* report = nullptr);

// Parse in-memory lines (hitlist format: one address per line, '#' comments).
std::vector<Address> parse_hitlist_lines(const std::vector<std::string>& lines,
                                         LoadReport* report = nullptr);
std::vector<Prefix> load_prefix_table(const std::string& path);

struct CensusReport {
  std::vector<std::pair<Prefix, size_t>> counts;  // per prefix seed count
  size_t prefixes = 0;
  size_t few_seed = 0;  // count < threshold
  double ratio = 0.0;
};

CensusReport few_seed_census(const SeedSet& s, size_t threshold = 10);

}  // namespace sixv::addr
