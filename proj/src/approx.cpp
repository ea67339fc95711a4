#include "fheprotect/approx.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "fheprotect/error.hpp"

namespace fheprotect {

namespace {

double rel_err(double x, double px) { return std::abs(px - 1.0 / std::sqrt(x)) * std::sqrt(x); }

}  // namespace

PolyApprox fit_inv_sqrt(int degree, Interval domain, std::size_t n_nodes) {
  if (degree < 0) raise(ErrorKind::InvalidArgument, "degree must be >= 0");
  if (!(domain.lo > 0.0) || !(domain.lo <= domain.hi) || !(domain.hi <= 1.0)) {
    raise(ErrorKind::InvalidArgument, "domain must satisfy 0 < lo <= hi <= 1");
  }
  const auto cols = static_cast<Eigen::Index>(degree) + 1;
  if (n_nodes < static_cast<std::size_t>(cols)) {
    raise(ErrorKind::InvalidArgument, "need at least degree + 1 nodes");
  }

  const auto rows = static_cast<Eigen::Index>(n_nodes);
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  const double mid = 0.5 * (domain.lo + domain.hi);
  const double half = 0.5 * (domain.hi - domain.lo);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double t = std::cos((2.0 * static_cast<double>(k) + 1.0) * std::numbers::pi /
                              (2.0 * static_cast<double>(n_nodes)));
    const double x = mid + half * t;
    const double w = std::sqrt(x);
    double xp = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      a(k, j) = xp * w;
      xp *= x;
    }
    b(k) = 1.0;  // (1/sqrt(x)) * sqrt(x)
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-13);
  if (qr.rank() < cols) {
    raise(ErrorKind::IllConditioned, "weighted Vandermonde system has rank " +
                                         std::to_string(qr.rank()) + " < " + std::to_string(cols));
  }
  const Eigen::VectorXd c = qr.solve(b);

  PolyApprox approx;
  approx.degree = degree;
  approx.coeffs.assign(c.data(), c.data() + c.size());
  approx.domain = domain;
  approx.fit_report = rel_error_report(approx, kDefaultReportSamples, kDefaultReportSeed);
  return approx;
}

double eval_poly_plain(double x, const PolyApprox& approx) {
  double acc = 0.0;
  for (auto it = approx.coeffs.rbegin(); it != approx.coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

SlotVector eval_poly_encrypted(const SlotVector& x, const PolyApprox& approx) {
  const auto& c = approx.coeffs;
  if (c.empty()) raise(ErrorKind::InvalidArgument, "empty polynomial");
  const int d = static_cast<int>(c.size()) - 1;
  if (d == 0) return add_plain(sub(x, x), std::vector<double>{c[0]});

  SlotVector acc = add_plain(mult_plain(x, std::vector<double>{c[d]}), std::vector<double>{c[d - 1]});
  for (int j = d - 2; j >= 0; --j) {
    acc = add_plain(mult(acc, x), std::vector<double>{c[static_cast<std::size_t>(j)]});
  }
  return acc;
}

FitReport rel_error_report(const PolyApprox& approx, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) raise(ErrorKind::InvalidArgument, "n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(approx.domain.lo, approx.domain.hi);
  FitReport r;
  r.n_samples = n_samples;
  r.seed = seed;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    // uniform_real_distribution is half-open; a degenerate domain yields lo.
    const double x = approx.domain.lo == approx.domain.hi ? approx.domain.lo : dist(rng);
    const double e = rel_err(x, eval_poly_plain(x, approx));
    r.max_rel_err = std::max(r.max_rel_err, e);
    sum += e;
  }
  r.mean_rel_err = sum / static_cast<double>(n_samples);
  return r;
}

std::vector<ApproxCurvePoint> approx_curve(const PolyApprox& approx, std::size_t n_points) {
  std::vector<ApproxCurvePoint> pts;
  if (n_points == 0) return pts;
  const double lo = approx.domain.lo, hi = approx.domain.hi;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x =
        n_points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    const double px = eval_poly_plain(x, approx);
    pts.push_back({x, px, rel_err(x, px)});
  }
  return pts;
}

}  // namespace fheprotect
