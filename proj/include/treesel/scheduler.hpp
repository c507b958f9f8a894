#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"
#include "treesel/lowerbound.hpp"
#include "treesel/model.hpp"
#include "treesel/polytope.hpp"

namespace treesel {

/// Uniform start p_0 = min(1, budget / sum c_i) 1_m.
inline MarginalSchedule initial_schedule(const FeasibleSet& fs) {
  const double total = fs.tree.total_cost();
  const double value = total > 0.0 ? std::min(1.0, fs.budget / total) : 1.0;
  return MarginalSchedule::Constant(static_cast<Eigen::Index>(fs.size()), value);
}

struct SubproblemOptions {
  double mu_initial = 1e-2;
  double mu_final = 1e-10;
  double mu_factor = 0.1;
  /// Relaxation of the descent constraint, expressed as the admissible growth
  /// of L_k over L_prev (covariance units).
  double descent_slack = 1e-10;
  /// Relaxation of the polytope constraints while iterating; removed by
  /// projecting the final point.
  double polytope_slack = 1e-9;
  std::size_t max_newton_per_stage = 400;
  /// Accept the solver's point only if lambda_max(L_k - L_prev) stays below this.
  double descent_tolerance = 1e-9;
};

struct DescentStep {
  MarginalSchedule p;
  Matrix L;
  double trace = 0.0;
  std::size_t newton_iterations = 0;
  /// mu * (number of barrier terms) at the last stage: bound on the gap to
  /// the subproblem optimum.
  double suboptimality_bound = 0.0;
  bool kept_start = false;  ///< the start point was returned unchanged
};

namespace detail {

/// min trace(M(p)^{-1}) s.t. p in P and M(p) >= L_prev^{-1}, where
/// M(p) = (A L_prev A' + Q)^{-1} + sum_i p_i f_i f_i', f_i = C_i' / sqrt(r_i).
/// Log barriers on every constraint, damped Newton steps, mu driven down
/// geometrically. The iterate is written p = p_start + delta so slacks keep
/// full precision near the start.
class DescentBarrier {
 public:
  DescentBarrier(const LinearSystem& sys, const FeasibleSet& fs, const Matrix& l_prev, const MarginalSchedule& start,
                 const SubproblemOptions& opt)
      : fs_(fs), start_(start), opt_(opt) {
    const Eigen::Index n = sys.n();
    m_ = sys.m();
    h0_ = spd_inverse(symmetrize(sys.A * l_prev * sys.A.transpose() + sys.Q));
    const Matrix n_mat = spd_inverse(l_prev);
    f_ = sys.C.transpose() * sys.r.array().rsqrt().matrix().asDiagonal();

    const Matrix d_start = symmetrize(h0_ + f_ * start_.asDiagonal() * f_.transpose() - n_mat);
    const double lmax = max_eigenvalue(l_prev);
    double eps = opt.descent_slack / (lmax * lmax);
    eps += std::max(0.0, -min_eigenvalue(d_start));
    d0_ = d_start + eps * Matrix::Identity(n, n);

    build_linear_constraints();
  }

  std::size_t barrier_terms() const noexcept { return rows_.size() + static_cast<std::size_t>(d0_.rows()); }

  /// Runs the continuation; returns the final point and iteration count, or
  /// sets stalled when a stage exhausts its Newton budget.
  MarginalSchedule solve(std::size_t& iterations, bool& stalled, double& final_mu) {
    Vector delta = Vector::Zero(m_);
    iterations = 0;
    stalled = false;
    for (double mu = opt_.mu_initial;; mu *= opt_.mu_factor) {
      if (mu < opt_.mu_final * (1.0 - 1e-9)) break;
      final_mu = mu;
      bool converged = false;
      for (std::size_t it = 0; it < opt_.max_newton_per_stage; ++it) {
        ++iterations;
        Vector grad;
        Matrix hess;
        const double value = evaluate(delta, mu, &grad, &hess);
        const Vector scale = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const Matrix scaled = scale.asDiagonal() * hess * scale.asDiagonal();
        Eigen::LDLT<Matrix> ldlt(scaled);
        Vector dir;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          dir = scale.asDiagonal() * ldlt.solve(-(scale.asDiagonal() * grad));
        } else {
          dir = -(scale.array().square() * grad.array()).matrix();
        }
        const double decrement2 = -grad.dot(dir);
        if (!(decrement2 > 0.0) || decrement2 * 0.5 <= 1e-3 * mu) {
          converged = true;
          break;
        }
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
          const Vector trial = delta + t * dir;
          const double v = evaluate(trial, mu, nullptr, nullptr);
          if (std::isfinite(v) && v <= value - 0.01 * t * decrement2) {
            delta = trial;
            moved = true;
            break;
          }
        }
        if (!moved) {
          // No representable progress: the stage is at its numerical optimum.
          converged = true;
          break;
        }
      }
      if (!converged) stalled = true;
    }
    return start_ + delta;
  }

 private:
  struct Row {
    std::vector<std::pair<Eigen::Index, double>> terms;  // a_j
    double slack0;                                       // b_j - a_j' p_start + relaxation
  };

  void build_linear_constraints() {
    const SensorTree& tree = fs_.tree;
    auto p = [&](std::size_t id) { return start_(static_cast<Eigen::Index>(id - 1)); };
    const double eta = opt_.polytope_slack;
    for (std::size_t i = 1; i <= tree.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i - 1);
      if (tree.is_leaf(i)) rows_.push_back({{{k, -1.0}}, std::max(0.0, p(i)) + eta});
      const std::size_t parent = tree.parent(i);
      if (parent == 0) {
        rows_.push_back({{{k, 1.0}}, std::max(0.0, 1.0 - p(i)) + eta});
      } else {
        const auto kp = static_cast<Eigen::Index>(parent - 1);
        rows_.push_back({{{k, 1.0}, {kp, -1.0}}, std::max(0.0, p(parent) - p(i)) + eta});
      }
    }
    Row budget;
    for (std::size_t i = 1; i <= tree.size(); ++i) budget.terms.push_back({static_cast<Eigen::Index>(i - 1), tree.cost(i)});
    budget.slack0 = std::max(0.0, fs_.budget - expected_energy(tree, start_)) + eta * std::max(1.0, fs_.budget);
    rows_.push_back(std::move(budget));
  }

  /// phi(p) + mu * barrier(p); +inf outside the relaxed domain.
  double evaluate(const Vector& delta, double mu, Vector* grad, Matrix* hess) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double barrier = 0.0;
    std::vector<double> slack(rows_.size());
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      double s = rows_[j].slack0;
      for (const auto& [k, a] : rows_[j].terms) s -= a * delta(k);
      if (!(s > 0.0)) return inf;
      slack[j] = s;
      barrier -= std::log(s);
    }
    const Matrix weighted = f_ * delta.asDiagonal() * f_.transpose();
    const Matrix g_mat = symmetrize(d0_ + weighted);
    Eigen::LLT<Matrix> g_llt(g_mat);
    if (g_llt.info() != Eigen::Success) return inf;
    const Matrix m_mat = symmetrize(h0_ + f_ * start_.asDiagonal() * f_.transpose() + weighted);
    Eigen::LLT<Matrix> m_llt(m_mat);
    if (m_llt.info() != Eigen::Success) return inf;

    const Eigen::Index n = m_mat.rows();
    const Matrix m_inv = m_llt.solve(Matrix::Identity(n, n));
    barrier -= 2.0 * g_llt.matrixLLT().diagonal().array().log().sum();
    const double value = m_inv.trace() + mu * barrier;
    if (!grad) return value;

    const Matrix mf = m_inv * f_;
    const Matrix k1 = f_.transpose() * mf;
    const Matrix k2 = mf.transpose() * mf;
    const Matrix gf = g_llt.solve(f_);
    const Matrix k3 = f_.transpose() * gf;

    *grad = -k2.diagonal() - mu * k3.diagonal();
    *hess = 2.0 * k1.cwiseProduct(k2) + mu * k3.cwiseProduct(k3);
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      const double inv_s = 1.0 / slack[j];
      for (const auto& [k, a] : rows_[j].terms) {
        (*grad)(k) += mu * a * inv_s;
        for (const auto& [l, b] : rows_[j].terms) (*hess)(k, l) += mu * a * b * inv_s * inv_s;
      }
    }
    *hess = symmetrize(*hess);
    return value;
  }

  const FeasibleSet& fs_;
  MarginalSchedule start_;
  SubproblemOptions opt_;
  Eigen::Index m_ = 0;
  Matrix h0_;
  Matrix f_;
  Matrix d0_;
  std::vector<Row> rows_;
};

}  // namespace detail

/// One greedy step: minimize trace L(L_prev, p) over p in P subject to
/// L(L_prev, p) <= L_prev. p_start must satisfy the descent constraint.
inline DescentStep solve_descent_subproblem(const LinearSystem& sys, const FeasibleSet& fs, const Matrix& l_prev,
                                            const MarginalSchedule& p_start, const SubproblemOptions& opt = {}) {
  if (p_start.size() != sys.m() || static_cast<Eigen::Index>(fs.size()) != sys.m())
    throw Error(ErrorKind::DimensionMismatch, "schedule, tree and system disagree on the sensor count");

  DescentStep out;
  const MarginalSchedule start = project(fs, p_start);
  const Matrix l_start = lower_bound_step(sys, l_prev, start);
  out.p = start;
  out.L = l_start;
  out.trace = l_start.trace();
  out.kept_start = true;
  if (fs.budget == 0.0 || sys.m() == 0) return out;

  detail::DescentBarrier barrier(sys, fs, l_prev, start, opt);
  std::size_t iterations = 0;
  bool stalled = false;
  double final_mu = opt.mu_final;
  const MarginalSchedule raw = barrier.solve(iterations, stalled, final_mu);
  out.newton_iterations = iterations;
  out.suboptimality_bound = final_mu * static_cast<double>(barrier.barrier_terms());
  if (stalled) throw Error(ErrorKind::SolverStalled, "barrier Newton iterations did not reach stationarity");

  const MarginalSchedule candidate = project(fs, raw);
  const Matrix l_candidate = lower_bound_step(sys, l_prev, candidate);
  const bool descends = max_eigenvalue(l_candidate - l_prev) <= opt.descent_tolerance;
  if (descends && l_candidate.trace() <= out.trace) {
    out.p = candidate;
    out.L = l_candidate;
    out.trace = l_candidate.trace();
    out.kept_start = false;
  }
  return out;
}

struct GreedyIterate {
  MarginalSchedule p;
  Matrix L;
  double trace = 0.0;
};

struct GreedyTrace {
  std::vector<GreedyIterate> iterates;  ///< k = 0 (the initialization) onward
  MarginalSchedule p_star;
  Matrix L_inf;           ///< L^infinity(Sigma0, p_star)
  double limit_gap = 0;   ///< relative Frobenius gap between L_inf and the last L_k
  bool limit_consistent = false;  ///< limit_gap <= 1e-6
  bool converged = false;         ///< stopped on the trace-decrease tolerance
};

struct GreedyOptions {
  std::size_t max_outer = 200;
  double tol = 1e-8;
  SubproblemOptions subproblem{};
  FixedPointOptions fixed_point{};
};

/// Greedy descent on the lower bound: p_0 uniform, L_0 = L^infinity(I, p_0),
/// then repeated descent subproblems until the relative trace decrease falls
/// to tol. A step that fails to decrease the trace ends the loop and is not
/// recorded.
inline GreedyTrace greedy_optimize(const LinearSystem& sys, const FeasibleSet& fs, const GreedyOptions& opt = {}) {
  validate_system(sys);
  if (static_cast<Eigen::Index>(fs.size()) != sys.m())
    throw Error(ErrorKind::DimensionMismatch, "tree and system disagree on the sensor count");

  GreedyTrace out;
  const MarginalSchedule p0 = initial_schedule(fs);
  Matrix l0;
  try {
    l0 = lower_bound_limit(sys, Matrix::Identity(sys.n(), sys.n()), p0, opt.fixed_point);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Diverged)
      throw Error(ErrorKind::InitialDiverged, "budget too small: the uniform start schedule is not detectable");
    throw;
  }
  out.iterates.push_back({p0, l0, l0.trace()});

  for (std::size_t k = 1; k <= opt.max_outer; ++k) {
    const GreedyIterate& prev = out.iterates.back();
    DescentStep step = solve_descent_subproblem(sys, fs, prev.L, prev.p, opt.subproblem);
    if (step.trace > prev.trace) {
      out.converged = true;
      break;
    }
    const double decrease = prev.trace - step.trace;
    out.iterates.push_back({std::move(step.p), std::move(step.L), step.trace});
    if (decrease <= opt.tol * out.iterates.back().trace) {
      out.converged = true;
      break;
    }
  }

  out.p_star = out.iterates.back().p;
  out.L_inf = lower_bound_limit(sys, sys.Sigma0, out.p_star, opt.fixed_point);
  out.limit_gap = relative_frobenius(out.L_inf, out.iterates.back().L);
  out.limit_consistent = out.limit_gap <= 1e-6;
  return out;
}

}  // namespace treesel
