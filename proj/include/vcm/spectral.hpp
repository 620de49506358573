#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace vcm {

struct SpectralRow {
  int index = 0;          // frequency index j
  double frequency = 0.0; // 2*pi*j/n
  double sum_squares = 0.0;
  int df = 0;             // 2 per interior frequency, 1 at Nyquist
};

// Decomposition of the centered total sum of squares by Fourier frequency.
// The rows sum to the total (Parseval) and the degrees of freedom to n - 1.
struct SpectralTable {
  std::vector<SpectralRow> rows;
  double total_ss = 0.0;
  int n = 0;
};

// Direct O(n^2) evaluation, with a radix-2 fast path when n is a power of
// two. The mean (frequency 0) is excluded; the series must have n >= 2.
SpectralTable periodogram_anova(const Eigen::VectorXd& y);

enum class YatesDivisor { totals, effects };

struct YatesResult {
  Eigen::VectorXd values;          // standard order: total, A, B, AB, C, ...
  std::vector<std::string> labels;
  int n_factors = 0;
  YatesDivisor divisor = YatesDivisor::totals;
};

// Yates' n-pass sum/difference transform of 2^n responses given in standard
// order ((1), a, b, ab, c, ...), differences taken second minus first.
// Under `effects`, entry 0 is divided by 2^n and the rest by 2^(n-1).
YatesResult yates_transform(const Eigen::VectorXd& y, int n_factors,
                            YatesDivisor divisor = YatesDivisor::totals);

}  // namespace vcm
