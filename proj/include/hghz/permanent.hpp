#pragma once

#include "hghz/error.hpp"
#include "hghz/linalg.hpp"

#include <bit>
#include <cstdint>
#include <vector>

namespace hghz {

inline constexpr int max_permanent_size = 12;

/// Matrix permanent by Ryser's inclusion-exclusion formula, visiting column
/// subsets in Gray-code order so each step updates the row sums with one
/// column: O(2^n n). The visiting order is fixed, so the result is
/// bit-for-bit reproducible for a given input.
template <typename Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols())
    fail(ErrorCode::dimension, "permanent: matrix must be square, got " +
                                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  const int n = static_cast<int>(m.rows());
  if (n > max_permanent_size)
    fail(ErrorCode::dimension, "permanent: size " + std::to_string(n) + " exceeds limit " +
                                   std::to_string(max_permanent_size));
  if (n == 0) return Scalar(1);

  std::vector<Scalar> row_sums(n, Scalar(0));
  Scalar total(0);
  std::uint32_t gray = 0;
  const std::uint32_t count = 1u << n;
  for (std::uint32_t k = 1; k < count; ++k) {
    const int col = std::countr_zero(k);
    const std::uint32_t bit = 1u << col;
    gray ^= bit;
    const bool added = (gray & bit) != 0;
    for (int i = 0; i < n; ++i) row_sums[i] += added ? m(i, col) : -m(i, col);
    Scalar prod(1);
    for (int i = 0; i < n; ++i) prod *= row_sums[i];
    // sign (-1)^(n - |S|)
    total += ((n - std::popcount(gray)) % 2 == 0) ? prod : -prod;
  }
  return total;
}

}  // namespace hghz
