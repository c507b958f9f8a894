#pragma once

#include <cstddef>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"
#include "treesel/model.hpp"
#include "treesel/riccati.hpp"

namespace treesel {

// Deterministic lower bound on E P_k: the random sensor indicators are
// replaced by their means p_i, giving
//   L(X, p) = [(A X A' + Q)^{-1} + sum_i p_i C_i' C_i / r_i]^{-1}.

inline void check_schedule(const LinearSystem& sys, const MarginalSchedule& p) {
  if (p.size() != sys.m()) throw Error(ErrorKind::DimensionMismatch, "schedule length differs from sensor count");
  if (!in_unit_box(p)) throw Error(ErrorKind::InvalidArgument, "marginal probabilities must lie in [0, 1]");
}

inline Matrix lower_bound_step(const LinearSystem& sys, const Matrix& x, const MarginalSchedule& p) {
  check_schedule(sys, p);
  return riccati_step(sys, x, information_matrix(sys, p), (p.array() == 0.0).all());
}

/// Rows sqrt(p_i) C_i; whether (C_p, A) is detectable decides if L^(k) converges.
inline Matrix scaled_observation(const LinearSystem& sys, const MarginalSchedule& p) {
  return p.array().sqrt().matrix().asDiagonal() * sys.C;
}

struct FixedPointOptions {
  double tolerance = 1e-10;  ///< relative Frobenius step size
  std::size_t max_iterations = 100000;
};

struct FixedPointResult {
  Matrix value;
  std::size_t iterations = 0;
};

namespace detail {

/// Iterates X <- riccati_step(X, info) until ||X_{j+1} - X_j||_F <= tol (1 + ||X_j||_F).
inline FixedPointResult iterate_to_fixed_point(const LinearSystem& sys, const Matrix& x0, const Matrix& info,
                                               bool info_is_zero, const FixedPointOptions& opt) {
  Matrix x = x0;
  for (std::size_t j = 1; j <= opt.max_iterations; ++j) {
    Matrix next = riccati_step(sys, x, info, info_is_zero);
    const double step = (next - x).norm();
    const double scale = 1.0 + x.norm();
    x = std::move(next);
    if (!std::isfinite(step)) throw Error(ErrorKind::Diverged, "Riccati iteration produced non-finite values");
    if (step <= opt.tolerance * scale) return {x, j};
  }
  throw Error(ErrorKind::MaxIterations, "fixed-point tolerance not met; detectability may be marginal");
}

}  // namespace detail

/// L^infinity(X0, p). Throws Diverged without iterating when (C_p, A) is not
/// detectable and MaxIterations when the tolerance is not met within the cap.
inline FixedPointResult lower_bound_limit_detailed(const LinearSystem& sys, const Matrix& x0,
                                                   const MarginalSchedule& p, const FixedPointOptions& opt = {}) {
  check_schedule(sys, p);
  if (!is_detectable(sys.A, scaled_observation(sys, p)))
    throw Error(ErrorKind::Diverged, "(C_p, A) is not detectable");
  return detail::iterate_to_fixed_point(sys, x0, information_matrix(sys, p), (p.array() == 0.0).all(), opt);
}

inline Matrix lower_bound_limit(const LinearSystem& sys, const Matrix& x0, const MarginalSchedule& p,
                                const FixedPointOptions& opt = {}) {
  return lower_bound_limit_detailed(sys, x0, p, opt).value;
}

/// L_0 = Sigma0, L_k = L(L_{k-1}, p_k) for a possibly time-varying schedule.
inline std::vector<Matrix> bound_sequence(const LinearSystem& sys, const std::vector<MarginalSchedule>& schedules) {
  std::vector<Matrix> out;
  out.reserve(schedules.size() + 1);
  out.push_back(sys.Sigma0);
  for (const auto& p : schedules) out.push_back(lower_bound_step(sys, out.back(), p));
  return out;
}

}  // namespace treesel
