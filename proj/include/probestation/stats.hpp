#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "probestation/error.hpp"

namespace probestation {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_std = 0.0;  // sqrt(SSE / (n - 2)), zero for n == 2
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = slope * x + intercept. Centred sums for accuracy.
inline LineFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AnalysisError("ols: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw AnalysisError("ols: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw AnalysisError("ols: degenerate x spread");
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.slope * x[i] + f.intercept);
      sse += r * r;
    }
    f.residual_std = std::sqrt(sse / static_cast<double>(n - 2));
    f.slope_stderr = f.residual_std / std::sqrt(sxx);
  }
  return f;
}

/// Linear least squares y ~ sum_j c_j * columns[j](x); returns c. Column-pivoted QR.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& columns, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto m = static_cast<Eigen::Index>(columns.size());
  if (n < m) throw AnalysisError("least_squares: fewer points than unknowns");
  Eigen::MatrixXd a(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (static_cast<Eigen::Index>(columns[static_cast<std::size_t>(j)].size()) != n)
      throw AnalysisError("least_squares: column length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
  const Eigen::Map<const Eigen::VectorXd> b(y.data(), n);
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < m) throw AnalysisError("least_squares: rank-deficient design");
  const Eigen::VectorXd c = qr.solve(b);
  return {c.data(), c.data() + m};
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace probestation
