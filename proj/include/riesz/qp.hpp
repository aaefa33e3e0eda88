#pragma once

// Nonnegative minimization of the Gauss functional
//
//   F(w) = w^T M w - 2 b^T w,   w >= 0,
//
// with M symmetric positive definite. b = 1 gives the equilibrium weights,
// b = (potential of a source at the nodes) the swept weights: both are the
// orthogonal projection, in the energy norm, onto the cone of nonnegative
// measures on the nodes.
//
// The solver is an active-set method in the Lawson-Hanson style. The passive
// set grows by the most violated dual coordinate (lowest index on ties); the
// equality-constrained subproblem is solved with a Cholesky factor that is
// updated by row appends and Givens downdates. The minimizer is unique, so
// when a full Cholesky solve already gives a positive vector it is returned
// without running the active-set loop.

#include "riesz/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace riesz {

template <typename Scalar>
struct QpOptions {
  // Dual tolerance relative to max|b|.
  Scalar tol = Scalar(1e-9);
  // Iteration cap; 0 means 3 N + 100.
  int max_iterations = 0;
  // Cholesky pivot guard relative to the largest diagonal of the factor.
  Scalar pivot_floor = Scalar(1e-12);
  // Try the full index set first.
  bool interior_shortcut = true;
};

template <typename Scalar>
struct QpSolution {
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  VectorS weights;
  // max over w_i > 0 of |(M w - b)_i|
  Scalar kkt_stationarity = 0;
  // min over w_i = 0 of (M w - b)_i; +inf when every weight is positive
  Scalar kkt_feasibility_dual = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  Scalar objective = 0;
  Scalar tolerance = 0;  // absolute dual tolerance used
  // Nodes whose pivot fell below the guard; excluded from the support.
  std::vector<Eigen::Index> rejected;

  Eigen::Index support_size() const { return (weights.array() > Scalar(0)).count(); }
};

template <typename Scalar>
class QpConvergenceError : public Error {
 public:
  QpConvergenceError(const std::string& what, QpSolution<Scalar> best)
      : Error(what), best_(std::move(best)) {}
  const QpSolution<Scalar>& best_iterate() const { return best_; }

 private:
  QpSolution<Scalar> best_;
};

// KKT residuals of a candidate w recomputed from scratch.
template <typename Scalar>
struct KktReport {
  Scalar stationarity = 0;   // max over w_i > 0 of |(Mw - b)_i|
  Scalar dual = std::numeric_limits<Scalar>::infinity();  // min over w_i = 0 of (Mw - b)_i
  Scalar complementarity = 0;  // max_i |w_i (Mw - b)_i|
  Scalar min_weight = 0;
  bool satisfied(Scalar tol) const {
    return min_weight >= 0 && stationarity <= tol && dual >= -tol;
  }
};

template <typename DerivedM, typename DerivedB, typename DerivedW>
KktReport<typename DerivedM::Scalar> check_kkt(const Eigen::MatrixBase<DerivedM>& m,
                                              const Eigen::MatrixBase<DerivedB>& b,
                                              const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedM::Scalar;
  KktReport<Scalar> report;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> residual = m * w - b;
  report.min_weight = w.size() ? w.minCoeff() : Scalar(0);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0) {
      report.stationarity = std::max(report.stationarity, std::abs(residual[i]));
    } else {
      report.dual = std::min(report.dual, residual[i]);
    }
    report.complementarity = std::max(report.complementarity, std::abs(w[i] * residual[i]));
  }
  return report;
}

namespace detail {

// Lower Cholesky factor of M restricted to an ordered index set, grown and
// shrunk one index at a time.
template <typename Scalar>
class ActiveCholesky {
 public:
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit ActiveCholesky(Scalar pivot_floor) : pivot_floor_(pivot_floor) {}

  Eigen::Index size() const { return size_; }
  const std::vector<Eigen::Index>& indices() const { return indices_; }

  // Appends index j; returns false (and leaves the factor unchanged) when the
  // new pivot falls below the guard.
  template <typename DerivedM>
  bool append(const Eigen::MatrixBase<DerivedM>& m, Eigen::Index j) {
    const Eigen::Index k = size_;
    reserve(k + 1);
    VectorS column(k);
    for (Eigen::Index i = 0; i < k; ++i) column[i] = m(indices_[i], j);
    if (k > 0) {
      l_.topLeftCorner(k, k).template triangularView<Eigen::Lower>().solveInPlace(column);
    }
    const Scalar pivot2 = m(j, j) - column.squaredNorm();
    const Scalar scale = std::max(max_pivot_, std::sqrt(std::abs(m(j, j))));
    if (!(pivot2 > 0) || std::sqrt(pivot2) < pivot_floor_ * scale) return false;
    const Scalar pivot = std::sqrt(pivot2);
    l_.row(k).head(k) = column.transpose();
    l_(k, k) = pivot;
    max_pivot_ = std::max(max_pivot_, pivot);
    indices_.push_back(j);
    ++size_;
    return true;
  }

  // Removes the entry at position p of the index list.
  void remove_at(Eigen::Index p) {
    const Eigen::Index k = size_;
    for (Eigen::Index i = p; i + 1 < k; ++i) l_.row(i).head(k) = l_.row(i + 1).head(k);
    // Rows p..k-2 now carry one superdiagonal entry each; rotate it away.
    for (Eigen::Index c = p; c + 1 < k; ++c) {
      const Scalar a = l_(c, c);
      const Scalar bval = l_(c, c + 1);
      const Scalar r = std::hypot(a, bval);
      const Scalar cs = a / r;
      const Scalar sn = bval / r;
      for (Eigen::Index i = c; i + 1 < k; ++i) {
        const Scalar x = l_(i, c);
        const Scalar y = l_(i, c + 1);
        l_(i, c) = cs * x + sn * y;
        l_(i, c + 1) = -sn * x + cs * y;
      }
    }
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      l_(i, k - 1) = 0;
      if (l_(i, i) < 0) l_.col(i).segment(i, k - 1 - i) *= Scalar(-1);
    }
    indices_.erase(indices_.begin() + p);
    --size_;
  }

  // Solves (L L^T) z = rhs in place.
  void solve_in_place(VectorS& rhs) const {
    const auto lower = l_.topLeftCorner(size_, size_).template triangularView<Eigen::Lower>();
    lower.solveInPlace(rhs);
    lower.transpose().solveInPlace(rhs);
  }

 private:
  void reserve(Eigen::Index k) {
    if (l_.rows() >= k) return;
    const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * k);
    MatrixS grown = MatrixS::Zero(cap, cap);
    grown.topLeftCorner(size_, size_) = l_.topLeftCorner(size_, size_);
    l_.swap(grown);
  }

  MatrixS l_;
  Eigen::Index size_ = 0;
  std::vector<Eigen::Index> indices_;
  Scalar max_pivot_ = 0;
  Scalar pivot_floor_;
};

}  // namespace detail

template <typename DerivedM, typename DerivedB>
QpSolution<typename DerivedM::Scalar> solve_gauss_qp(
    const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedB>& b,
    const QpOptions<typename DerivedM::Scalar>& options = {}) {
  using Scalar = typename DerivedM::Scalar;
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index count = b.size();
  if (m.rows() != count || m.cols() != count) throw ParameterError("solve_gauss_qp: size mismatch");
  if (!(options.tol > 0)) throw ParameterError("solve_gauss_qp: tol must be positive");
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(m(i, i) > 0)) throw SolverError("solve_gauss_qp: matrix has a nonpositive diagonal");
  }

  QpSolution<Scalar> sol;
  sol.weights = VectorS::Zero(count);
  const Scalar bmax = count ? b.cwiseAbs().maxCoeff() : Scalar(0);
  sol.tolerance = options.tol * std::max(bmax, std::numeric_limits<Scalar>::min());
  if (count == 0 || b.maxCoeff() <= 0) {
    const auto kkt = check_kkt(m, b, sol.weights);
    sol.kkt_stationarity = kkt.stationarity;
    sol.kkt_feasibility_dual = kkt.dual;
    return sol;
  }

  auto finish = [&](int iterations) {
    const auto kkt = check_kkt(m, b, sol.weights);
    sol.kkt_stationarity = kkt.stationarity;
    sol.kkt_feasibility_dual = kkt.dual;
    sol.iterations = iterations;
    sol.objective = sol.weights.dot(m * sol.weights) - 2 * b.dot(sol.weights);
    return sol;
  };

  if (options.interior_shortcut) {
    const Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(m);
    if (llt.info() == Eigen::Success) {
      VectorS w = llt.solve(b);
      if ((w.array() > 0).all()) {
        const VectorS refined = w + llt.solve(b - m * w);
        if ((refined.array() > 0).all()) w = refined;
        sol.weights = w;
        return finish(0);
      }
    }
  }

  const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(3 * count + 100);
  detail::ActiveCholesky<Scalar> factor(options.pivot_floor);
  std::vector<char> in_set(count, 0);
  std::vector<char> excluded(count, 0);
  VectorS& w = sol.weights;
  VectorS residual = b;  // b - M w

  auto solve_subproblem = [&]() {
    VectorS z(factor.size());
    for (Eigen::Index i = 0; i < factor.size(); ++i) z[i] = b[factor.indices()[i]];
    factor.solve_in_place(z);
    return z;
  };
  auto refresh_residual = [&]() {
    residual = b;
    for (Eigen::Index idx : factor.indices()) {
      if (w[idx] != 0) residual -= m.col(idx) * w[idx];
    }
  };

  int iteration = 0;
  while (true) {
    Eigen::Index entering = -1;
    Scalar best = sol.tolerance;
    for (Eigen::Index i = 0; i < count; ++i) {
      if (in_set[i] || excluded[i]) continue;
      if (residual[i] > best) {
        best = residual[i];
        entering = i;
      }
    }
    if (entering < 0) break;
    if (++iteration > cap) {
      sol.iterations = iteration - 1;
      sol.objective = w.dot(m * w) - 2 * b.dot(w);
      throw QpConvergenceError<Scalar>("solve_gauss_qp: iteration cap exceeded", sol);
    }
    if (!factor.append(m, entering)) {
      excluded[entering] = 1;
      sol.rejected.push_back(entering);
      continue;
    }
    in_set[entering] = 1;

    bool first_pass = true;
    while (true) {
      VectorS z = solve_subproblem();
      const auto& idx = factor.indices();
      if ((z.array() > 0).all()) {
        for (Eigen::Index i = 0; i < factor.size(); ++i) w[idx[i]] = z[i];
        break;
      }
      if (first_pass && z[factor.size() - 1] <= 0) {
        // Round-off made the entering coordinate non-improving; drop it so the
        // loop cannot cycle on it.
        factor.remove_at(factor.size() - 1);
        in_set[entering] = 0;
        excluded[entering] = 1;
        break;
      }
      first_pass = false;
      Scalar step = 1;
      for (Eigen::Index i = 0; i < factor.size(); ++i) {
        if (z[i] <= 0) {
          const Scalar wi = w[idx[i]];
          step = std::min(step, wi / (wi - z[i]));
        }
      }
      for (Eigen::Index i = 0; i < factor.size(); ++i) {
        w[idx[i]] += step * (z[i] - w[idx[i]]);
      }
      for (Eigen::Index p = factor.size() - 1; p >= 0; --p) {
        const Eigen::Index node = factor.indices()[p];
        if (w[node] <= 0) {
          w[node] = 0;
          in_set[node] = 0;
          factor.remove_at(p);
        }
      }
      if (factor.size() == 0) break;
    }
    refresh_residual();
  }

  // One step of iterative refinement on the final support.
  if (factor.size() > 0) {
    const auto& idx = factor.indices();
    VectorS correction(factor.size());
    for (Eigen::Index i = 0; i < factor.size(); ++i) correction[i] = residual[idx[i]];
    factor.solve_in_place(correction);
    bool positive = true;
    for (Eigen::Index i = 0; i < factor.size(); ++i) positive = positive && (w[idx[i]] + correction[i] > 0);
    if (positive) {
      for (Eigen::Index i = 0; i < factor.size(); ++i) w[idx[i]] += correction[i];
    }
  }

  return finish(iteration);
}

}  // namespace riesz
