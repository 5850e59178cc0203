#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace flexbus {

enum class Errc {
  invalid_argument,
  invalid_route,
  unreachable_od,
  invalid_reliability,
  invalid_curve,
  invalid_distribution,
  dimension_mismatch,
  enumeration_too_large,
  bound_too_small,
  infeasible_at_rho,
  io_error,
  parse_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Counter-based splittable generator. Streams derived from the same master
// seed but different stream ids are independent, and draws depend only on
// (seed, stream, counter), never on generation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1); safe for inverse-CDF transforms
  double next_open() {
    double u = next_double();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  RngStream split(std::uint64_t child) const {
    RngStream s(0);
    s.key_ = mix(key_ ^ mix(child + 0xbf58476d1ce4e5b9ull));
    s.counter_ = 0;
    return s;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace flexbus
