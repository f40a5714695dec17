#pragma once

#include <vector>

namespace nlborn {

// Calls fn(parts) for every ordered tuple of `count` integers, each at least
// `min_part`, summing to `total`. Tuples are visited in lexicographic order.
template <class Fn>
void for_each_composition(int total, int count, int min_part, Fn&& fn) {
  if (count <= 0) return;
  std::vector<int> parts(static_cast<std::size_t>(count), min_part);
  auto rec = [&](auto&& self, int slot, int remaining) -> void {
    if (slot == count - 1) {
      if (remaining >= min_part) {
        parts[slot] = remaining;
        fn(static_cast<const std::vector<int>&>(parts));
      }
      return;
    }
    const int reserve = min_part * (count - slot - 1);
    for (int v = min_part; v <= remaining - reserve; ++v) {
      parts[slot] = v;
      self(self, slot + 1, remaining - v);
    }
  };
  rec(rec, 0, total);
}

}  // namespace nlborn
