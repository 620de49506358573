#include "vcm/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "vcm/errors.hpp"

namespace vcm {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey, n a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Fourier coefficients a_j = (2/n) sum y_t cos(2*pi*j*t/n) and the sine
// analogue, for 1 <= j < n/2, via either path.
void fourier_coefficients(const Eigen::VectorXd& y, std::vector<double>& aj,
                          std::vector<double>& bj) {
  const int n = static_cast<int>(y.size());
  const int m = (n - 1) / 2;  // frequencies with two degrees of freedom
  aj.assign(m + 1, 0.0);
  bj.assign(m + 1, 0.0);
  if (power_of_two(n)) {
    std::vector<std::complex<double>> work(n);
    for (int t = 0; t < n; ++t) work[t] = y[t];
    fft_radix2(work);
    for (int j = 1; j <= m; ++j) {
      aj[j] = 2.0 * work[j].real() / n;
      bj[j] = -2.0 * work[j].imag() / n;
    }
    return;
  }
  for (int j = 1; j <= m; ++j) {
    double ca = 0.0, cb = 0.0;
    for (int t = 0; t < n; ++t) {
      const double angle = 2.0 * std::numbers::pi * j * t / n;
      ca += y[t] * std::cos(angle);
      cb += y[t] * std::sin(angle);
    }
    aj[j] = 2.0 * ca / n;
    bj[j] = 2.0 * cb / n;
  }
}

}  // namespace

SpectralTable periodogram_anova(const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n < 2) throw DataError("periodogram needs at least two observations");
  if (!y.allFinite()) throw DataError("series contains non-finite values");

  SpectralTable table;
  table.n = n;
  const double mean = y.mean();
  table.total_ss = (y.array() - mean).square().sum();

  std::vector<double> aj, bj;
  fourier_coefficients(y, aj, bj);
  for (int j = 1; j <= (n - 1) / 2; ++j) {
    SpectralRow row;
    row.index = j;
    row.frequency = 2.0 * std::numbers::pi * j / n;
    row.sum_squares = 0.5 * n * (aj[j] * aj[j] + bj[j] * bj[j]);
    row.df = 2;
    table.rows.push_back(row);
  }
  if (n % 2 == 0) {
    double alternating = 0.0;
    for (int t = 0; t < n; ++t) alternating += (t % 2 == 0 ? y[t] : -y[t]);
    alternating /= n;
    SpectralRow row;
    row.index = n / 2;
    row.frequency = std::numbers::pi;
    row.sum_squares = n * alternating * alternating;
    row.df = 1;
    table.rows.push_back(row);
  }
  return table;
}

YatesResult yates_transform(const Eigen::VectorXd& y, int n_factors,
                            YatesDivisor divisor) {
  if (n_factors < 1 || n_factors > 30) {
    throw ModelError("n_factors must be between 1 and 30");
  }
  const Eigen::Index size = Eigen::Index{1} << n_factors;
  if (y.size() != size) {
    throw DataError("response length " + std::to_string(y.size()) +
                    " is not 2^" + std::to_string(n_factors));
  }

  Eigen::VectorXd current = y;
  Eigen::VectorXd next(size);
  for (int pass = 0; pass < n_factors; ++pass) {
    const Eigen::Index half = size / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      next[i] = current[2 * i] + current[2 * i + 1];
      next[half + i] = current[2 * i + 1] - current[2 * i];
    }
    std::swap(current, next);
  }

  YatesResult result;
  result.n_factors = n_factors;
  result.divisor = divisor;
  if (divisor == YatesDivisor::effects) {
    const double full = static_cast<double>(size);
    current[0] /= full;
    current.tail(size - 1) /= full / 2.0;
  }
  result.values = current;
  result.labels.reserve(static_cast<std::size_t>(size));
  for (Eigen::Index k = 0; k < size; ++k) {
    if (k == 0) {
      result.labels.emplace_back("total");
      continue;
    }
    std::string label;
    for (int bit = 0; bit < n_factors; ++bit) {
      if (k & (Eigen::Index{1} << bit)) label += static_cast<char>('A' + bit);
    }
    result.labels.push_back(std::move(label));
  }
  return result;
}

}  // namespace vcm
