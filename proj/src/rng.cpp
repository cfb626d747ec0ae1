#include "autosmart/rng.hpp"

#include <algorithm>
#include <numeric>

namespace autosmart {

std::vector<int64_t> sample_without_replacement(std::mt19937_64& rng, int64_t n,
                                                int64_t k) {
  if (k >= n) {
    std::vector<int64_t> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), int64_t{0});
    return all;
  }
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  for (int64_t i = 0; i < k; ++i)
    std::swap(idx[static_cast<size_t>(i)],
              idx[static_cast<size_t>(i + uniform_below(rng, n - i))]);
  idx.resize(static_cast<size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace autosmart
