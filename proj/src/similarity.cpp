#include "fheprotect/similarity.hpp"

#include <cmath>
#include <vector>

#include "fheprotect/error.hpp"
#include "fheprotect/summation.hpp"

namespace fheprotect {

double cosine_plain(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) raise(ErrorKind::DimensionMismatch, "cosine of vectors of unequal length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) raise(ErrorKind::ZeroVector, "cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

NormalizationPlan NormalizationPlan::from_norm_bound(double norm_bound) {
  return from_norm_bounds(norm_bound, norm_bound);
}

NormalizationPlan NormalizationPlan::from_norm_bounds(double bound_a, double bound_b) {
  if (!(bound_a > 0.0) || !(bound_b > 0.0)) raise(ErrorKind::InvalidArgument, "norm bounds must be positive");
  NormalizationPlan p;
  p.c_bound = bound_a * bound_b;
  p.d_bound = p.c_bound * p.c_bound;
  p.correction = p.c_bound / std::sqrt(p.d_bound);
  return p;
}

double octave_norm_bound(double norm) {
  if (!(norm > 0.0) || !std::isfinite(norm)) raise(ErrorKind::InvalidArgument, "norm must be positive and finite");
  return std::exp2(std::ceil(std::log2(norm)));
}

NormalizationPlan make_normalization_plan(double templates_bound, std::size_t n) {
  if (!(templates_bound > 0.0) || n == 0) {
    raise(ErrorKind::InvalidArgument, "element bound and length must be positive");
  }
  // n B^2 bounds |a|^2, so sqrt(n) B bounds the norm.
  return NormalizationPlan::from_norm_bound(std::sqrt(static_cast<double>(n)) * templates_bound);
}

double scaled_denominator(std::span<const double> a, std::span<const double> b,
                          const NormalizationPlan& plan) {
  double na = 0.0, nb = 0.0;
  for (double v : a) na += v * v;
  for (double v : b) nb += v * v;
  return na * nb / plan.d_bound;
}

void check_denominator_domain(std::span<const double> a, std::span<const double> b,
                              const NormalizationPlan& plan, const PolyApprox& approx) {
  const double d = scaled_denominator(a, b, plan);
  if (d < approx.domain.lo || d > approx.domain.hi) {
    raise(ErrorKind::DomainViolation, "scaled denominator " + std::to_string(d) +
                                          " outside approximation domain [" +
                                          std::to_string(approx.domain.lo) + ", " +
                                          std::to_string(approx.domain.hi) + "]");
  }
}

double cosine_tolerance(const PolyApprox& approx) { return 2.0 * approx.fit_report.max_rel_err + 1e-6; }

SlotVector cosine_encrypted(const SlotVector& c1, const SlotVector& c2, std::size_t n,
                            const NormalizationPlan& plan, const PolyApprox& approx) {
  SlotVector num = fold_add_all(mult(c1, c2), n);
  const SlotVector d1 = fold_add_all(mult(c1, c1), n);
  const SlotVector d2 = fold_add_all(mult(c2, c2), n);
  SlotVector den = mult(d1, d2);

  num = mult_plain(num, std::vector<double>{1.0 / plan.c_bound});
  den = mult_plain(den, std::vector<double>{1.0 / plan.d_bound});
  den = eval_poly_encrypted(den, approx);

  SlotVector score = mult(num, den);
  return mult_plain(score, std::vector<double>{plan.correction});
}

}  // namespace fheprotect
