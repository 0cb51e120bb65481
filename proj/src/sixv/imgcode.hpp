#pragma once

#include <array>
#include <string>
#include <vector>

#include "sixv/addr.hpp"
#include "sixv/rng.hpp"

namespace sixv::imgcode {

// 8x16 binary image of a single address: row i = group i, column j = bit j
// within the group, most-significant bit in column 0.
struct AddressImage {
  std::array<uint8_t, 128> pixels{};  // row-major

  uint8_t at(int row, int col) const { return pixels[row * 16 + col]; }
  void set(int row, int col, uint8_t v) { pixels[row * 16 + col] = v; }
  bool operator==(const AddressImage&) const = default;
};

// 16x16: rows 0-7 are the first address's image, rows 8-15 the second's.
struct StitchedImage {
  std::array<uint8_t, 256> pixels{};

  static StitchedImage from(const AddressImage& top, const AddressImage& bottom);
  AddressImage top() const;
  AddressImage bottom() const;
  bool operator==(const StitchedImage&) const = default;
};

enum class EntropyMode {
  Standard,      // -sum p log2 p, per-bit max 1.0
  QuarterScaled,  // extra 1/4 factor, per-bit max 0.25
};

struct EntropyImage {
  std::array<double, 128> values{};
  double ce = 0.0;  // mean of the 128 per-bit values
};

AddressImage encode(const addr::Address& a);
addr::Address decode(const AddressImage& img);

EntropyImage set_entropy(const std::vector<addr::Address>& s,
                         EntropyMode mode = EntropyMode::Standard);

// Deterministic pairing: for each index t, pair with the next `fanout`
// neighbours in dictionary order of canonical text, wrapping cyclically and
// skipping wrap distances that fold back onto t itself. A singleton subclass
// yields one self-pair.
std::vector<StitchedImage> stitch_pairs(const std::vector<AddressImage>& subclass,
                                        int fanout = 5);

// Seeded random pairing over the same subclass, one pair per (t, draw).
std::vector<StitchedImage> stitch_pairs_random(const std::vector<AddressImage>& subclass,
                                               int fanout, Rng& rng);

// Sorts addresses by canonical text and returns their images in that order.
std::vector<AddressImage> sorted_images(std::vector<addr::Address> addrs);

// P2 PGM, values scaled to 0-255 (binary image: 0 or 255).
std::string to_pgm(const AddressImage& img);
std::string to_pgm(const EntropyImage& img, EntropyMode mode = EntropyMode::Standard);
std::string to_csv(const AddressImage& img);
std::string to_csv(const EntropyImage& img);

}  // namespace sixv::imgcode
