#include "sixv/imgcode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sixv/error.hpp"

namespace sixv::imgcode {

AddressImage encode(const addr::Address& a) {
  AddressImage img;
  for (int i = 0; i < 128; ++i) img.pixels[i] = uint8_t(a.bit(i));
  return img;
}

addr::Address decode(const AddressImage& img) {
  addr::Address a;
  for (int i = 0; i < 128; ++i) a.set_bit(i, img.pixels[i]);
  return a;
}

StitchedImage StitchedImage::from(const AddressImage& top, const AddressImage& bottom) {
  StitchedImage s;
  std::copy(top.pixels.begin(), top.pixels.end(), s.pixels.begin());
  std::copy(bottom.pixels.begin(), bottom.pixels.end(), s.pixels.begin() + 128);
  return s;
}

AddressImage StitchedImage::top() const {
  AddressImage img;
  std::copy(pixels.begin(), pixels.begin() + 128, img.pixels.begin());
  return img;
}

AddressImage StitchedImage::bottom() const {
  AddressImage img;
  std::copy(pixels.begin() + 128, pixels.end(), img.pixels.begin());
  return img;
}

EntropyImage set_entropy(const std::vector<addr::Address>& s, EntropyMode mode) {
  if (s.empty()) throw Error(ErrorCode::EmptySet, "entropy of empty address set");
  EntropyImage out;
  const double n = double(s.size());
  for (int i = 0; i < 128; ++i) {
    size_t ones = 0;
    for (const auto& a : s) ones += size_t(a.bit(i));
    double p1 = double(ones) / n;
    double h = 0.0;
    for (double p : {p1, 1.0 - p1})
      if (p > 0.0) h -= p * std::log2(p);
    if (mode == EntropyMode::QuarterScaled) h *= 0.25;
    out.values[i] = h;
  }
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.ce = sum / 128.0;
  return out;
}

std::vector<AddressImage> sorted_images(std::vector<addr::Address> addrs) {
  std::sort(addrs.begin(), addrs.end(), [](const auto& a, const auto& b) {
    return addr::format_address(a) < addr::format_address(b);
  });
  std::vector<AddressImage> imgs;
  imgs.reserve(addrs.size());
  for (const auto& a : addrs) imgs.push_back(encode(a));
  return imgs;
}

std::vector<StitchedImage> stitch_pairs(const std::vector<AddressImage>& subclass,
                                        int fanout) {
  if (subclass.empty())
    throw Error(ErrorCode::EmptySubclass, "stitch_pairs on empty subclass");
  if (fanout < 1)
    throw Error(ErrorCode::InvalidArgument, "stitch fanout must be >= 1");
  const size_t n = subclass.size();
  std::vector<StitchedImage> out;
  if (n == 1) {
    out.push_back(StitchedImage::from(subclass[0], subclass[0]));
    return out;
  }
  for (size_t t = 0; t < n; ++t) {
    for (int d = 1; d <= fanout; ++d) {
      size_t wrap = size_t(d) % n;
      if (wrap == 0) continue;  // would self-pair
      if (size_t(d) >= n && wrap <= size_t(std::min<size_t>(fanout, n - 1)))
        continue;  // distance already emitted once around the cycle
      out.push_back(StitchedImage::from(subclass[t], subclass[(t + wrap) % n]));
    }
  }
  return out;
}

std::vector<StitchedImage> stitch_pairs_random(const std::vector<AddressImage>& subclass,
                                               int fanout, Rng& rng) {
  if (subclass.empty())
    throw Error(ErrorCode::EmptySubclass, "stitch_pairs_random on empty subclass");
  const size_t n = subclass.size();
  std::vector<StitchedImage> out;
  if (n == 1) {
    out.push_back(StitchedImage::from(subclass[0], subclass[0]));
    return out;
  }
  for (size_t t = 0; t < n; ++t) {
    for (int d = 0; d < fanout; ++d) {
      size_t other = rng.next_below(n - 1);
      if (other >= t) ++other;
      out.push_back(StitchedImage::from(subclass[t], subclass[other]));
    }
  }
  return out;
}

std::string to_pgm(const AddressImage& img) {
  std::ostringstream out;
  out << "P2\n16 8\n255\n";
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 16; ++c) out << (img.at(r, c) ? 255 : 0) << (c == 15 ? '\n' : ' ');
  }
  return out.str();
}

std::string to_pgm(const EntropyImage& img, EntropyMode mode) {
  const double scale = mode == EntropyMode::QuarterScaled ? 4.0 : 1.0;
  std::ostringstream out;
  out << "P2\n16 8\n255\n";
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 16; ++c) {
      int v = int(std::lround(std::clamp(img.values[r * 16 + c] * scale, 0.0, 1.0) * 255.0));
      out << v << (c == 15 ? '\n' : ' ');
    }
  }
  return out.str();
}

std::string to_csv(const AddressImage& img) {
  std::ostringstream out;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 16; ++c) out << int(img.at(r, c)) << (c == 15 ? '\n' : ',');
  return out.str();
}

std::string to_csv(const EntropyImage& img) {
  std::ostringstream out;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 16; ++c) out << img.values[r * 16 + c] << (c == 15 ? '\n' : ',');
  return out.str();
}

}  // namespace sixv::imgcode
