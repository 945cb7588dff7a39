#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace clothrl::experience {

/// Complete binary tree of partial sums over a fixed number of leaves.
/// Every internal node equals the sum of its two children at all times, so
/// prefix sampling is O(log n).
class SumTree {
 public:
  explicit SumTree(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::invalid_argument("SumTree: capacity must be positive");
    base_ = 1;
    while (base_ < cap_) base_ <<= 1;
    node_.assign(2 * base_, 0.0);
  }

  std::size_t capacity() const { return cap_; }
  double total() const { return node_[1]; }
  double get(std::size_t i) const { return node_[base_ + check(i)]; }

  void set(std::size_t i, double v) {
    std::size_t idx = base_ + check(i);
    node_[idx] = v;
    for (idx >>= 1; idx >= 1; idx >>= 1) node_[idx] = node_[2 * idx] + node_[2 * idx + 1];
  }

  /// Index of the leaf containing cumulative mass `mass`. Requires a
  /// positive total; `mass` is clamped into [0, total).
  std::size_t find_prefix(double mass) const {
    const double t = total();
    if (!(t > 0.0)) throw std::logic_error("SumTree: find_prefix on empty tree");
    if (mass < 0.0) mass = 0.0;
    if (mass >= t) mass = std::nextafter(t, 0.0);
    std::size_t idx = 1;
    while (idx < base_) {
      const std::size_t left = 2 * idx;
      if (mass < node_[left]) {
        idx = left;
      } else {
        mass -= node_[left];
        idx = left + 1;
      }
    }
    return idx - base_;
  }

 private:
  std::size_t check(std::size_t i) const {
    if (i >= cap_) throw std::out_of_range("SumTree: leaf index out of range");
    return i;
  }

  std::size_t cap_ = 0;
  std::size_t base_ = 0;
  std::vector<double> node_;
};

}  // namespace clothrl::experience
