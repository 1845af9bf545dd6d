#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "typpert/error.hpp"

namespace typpert {

using Bitstring = std::uint64_t;

/// Product states of `num_spins` spin-1/2 sites with a fixed number of up
/// spins, ordered by increasing integer value of the up-spin bitmask.
/// Bit k set means site k points up.
class SectorBasis {
 public:
  /// Sector with total Sz = twice_sz / 2.
  static SectorBasis with_total_sz(int num_spins, int twice_sz) {
    require(num_spins >= 1 && num_spins <= 40, ErrorKind::size,
            "num_spins must lie in [1, 40], got " + std::to_string(num_spins));
    const int twice_up = num_spins + twice_sz;
    require(twice_up % 2 == 0 && twice_up >= 0 && twice_up <= 2 * num_spins,
            ErrorKind::empty_sector,
            "no sector with 2*Sz = " + std::to_string(twice_sz) + " for " +
                std::to_string(num_spins) + " spins");
    return SectorBasis(num_spins, twice_up / 2);
  }

  /// Smallest-magnitude magnetization sector: Sz = 0 for even counts, 1/2 otherwise.
  static SectorBasis smallest(int num_spins) {
    return with_total_sz(num_spins, num_spins % 2 == 0 ? 0 : 1);
  }

  /// The full 2^N-dimensional product space (no magnetization constraint).
  static SectorBasis full(int num_spins) {
    require(num_spins >= 1 && num_spins <= 24, ErrorKind::size,
            "full basis limited to 24 spins");
    SectorBasis b;
    b.num_spins_ = num_spins;
    b.n_up_.reset();
    b.states_.resize(std::size_t{1} << num_spins);
    for (std::size_t i = 0; i < b.states_.size(); ++i) b.states_[i] = i;
    return b;
  }

  int num_spins() const { return num_spins_; }
  std::size_t dim() const { return states_.size(); }
  bool is_sector() const { return n_up_.has_value(); }

  /// Number of up spins; only defined for a fixed-magnetization sector.
  int n_up() const {
    require(n_up_.has_value(), ErrorKind::input, "full basis has no fixed n_up");
    return *n_up_;
  }
  /// Twice the total magnetization (an integer).
  int twice_total_sz() const { return 2 * n_up() - num_spins_; }
  double total_sz() const { return 0.5 * twice_total_sz(); }

  Bitstring state(std::size_t index) const { return states_[index]; }
  const std::vector<Bitstring>& states() const { return states_; }

  /// Index of `s`, or nullopt when `s` is outside this basis.
  std::optional<std::size_t> lookup(Bitstring s) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), s);
    if (it == states_.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
  }

  static bool spin_up(Bitstring s, int site) { return (s >> site) & 1U; }

  bool operator==(const SectorBasis& other) const {
    return num_spins_ == other.num_spins_ && n_up_ == other.n_up_;
  }

 private:
  SectorBasis() = default;

  SectorBasis(int num_spins, int n_up) : num_spins_(num_spins), n_up_(n_up) {
    if (n_up == 0) {
      states_.push_back(0);
      return;
    }
    // Gosper's hack walks all n_up-subsets in increasing order.
    Bitstring s = (Bitstring{1} << n_up) - 1;
    const Bitstring limit = Bitstring{1} << num_spins;
    while (s < limit) {
      states_.push_back(s);
      const Bitstring c = s & (~s + 1);
      const Bitstring r = s + c;
      s = (((r ^ s) >> 2) / c) | r;
    }
  }

  int num_spins_ = 0;
  std::optional<int> n_up_;
  std::vector<Bitstring> states_;
};

}  // namespace typpert
