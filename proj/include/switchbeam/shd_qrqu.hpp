#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "switchbeam/connectivity.hpp"
#include "switchbeam/metrics.hpp"
#include "switchbeam/rng.hpp"
#include "switchbeam/shd_nm.hpp"

namespace switchbeam {

struct QrquConfig {
  int inner_iters = 20;  // L steps per column
  double rank_tol = 1e-8;
  double psd_floor = 1e-8;
  double reg_eps = 1e-10;  // regularizer inside the projector inverse
  std::uint64_t seed = 0;
};

/// Quadratic form carried between columns: A_i = H_1^H Pi H_1 built from the
/// columns fixed so far (Pi = I before any column is fixed).
struct ProjectionState {
  Eigen::MatrixXcd a;
  int columns_fixed = 0;
};

/// I - X (X^H X + eps I)^(-1) X^H. With full column rank and eps -> 0 this
/// is the orthogonal projector onto the complement of span(X); the
/// regularizer keeps it defined for rank-deficient X.
inline Eigen::MatrixXcd projection_complement(const Eigen::MatrixXcd& x,
                                              double reg_eps) {
  const Eigen::Index n = x.rows();
  if (x.cols() == 0) return Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd gram =
      x.adjoint() * x +
      reg_eps * Eigen::MatrixXcd::Identity(x.cols(), x.cols());
  return Eigen::MatrixXcd::Identity(n, n) -
         x * gram.ldlt().solve(x.adjoint());
}

/// |R_ii|^2 as the quadratic form f^H A_i f; real because A_i is Hermitian.
inline double quad_objective(const Eigen::MatrixXcd& a_i,
                             const Eigen::VectorXd& f) {
  if (a_i.rows() != f.size())
    throw std::invalid_argument("quad_objective: dimension mismatch");
  return f.dot(a_i.real() * f);
}

/// One linearized ascent step on f^H A_i f over the box: gradient
/// (A_i + A_i^T) f_prev (= 2 Re(A_i) f_prev), then the separable bang-bang
/// maximizer with zero-gradient ties keeping the previous entry and masked
/// entries forced to zero.
inline Eigen::VectorXd quad_gradient_step(const Eigen::MatrixXcd& a_i,
                                          const Eigen::VectorXd& f_prev,
                                          const Eigen::VectorXd* mask_column = nullptr) {
  if (a_i.rows() != f_prev.size())
    throw std::invalid_argument("quad_gradient_step: dimension mismatch");
  if (mask_column && mask_column->size() != f_prev.size())
    throw std::invalid_argument("quad_gradient_step: mask dimension mismatch");
  const Eigen::VectorXd g = 2.0 * (a_i.real() * f_prev);
  Eigen::VectorXd out(f_prev.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (mask_column && (*mask_column)(i) == 0.0) {
      out(i) = 0.0;
    } else if (g(i) > 0.0) {
      out(i) = 1.0;
    } else if (g(i) < 0.0) {
      out(i) = 0.0;
    } else {
      out(i) = f_prev(i);
    }
  }
  return out;
}

namespace detail {

struct ColumnResult {
  Eigen::VectorXd f;
  std::vector<double> trace;
};

inline ColumnResult optimize_column(const Eigen::MatrixXcd& a,
                                    const Eigen::VectorXd* mask_column,
                                    const QrquConfig& config, Rng& rng) {
  const Eigen::Index n_t = a.rows();
  ColumnResult res;
  res.f.resize(n_t);
  for (Eigen::Index i = 0; i < n_t; ++i) {
    const bool allowed = !mask_column || (*mask_column)(i) != 0.0;
    res.f(i) = allowed ? rng.uniform() : 0.0;
  }
  res.trace.push_back(quad_objective(a, res.f));
  for (int l = 0; l < config.inner_iters; ++l) {
    const Eigen::VectorXd next = quad_gradient_step(a, res.f, mask_column);
    const double obj = quad_objective(a, next);
    const double prev = res.trace.back();
    res.trace.push_back(obj);
    res.f = next;
    if (std::abs(obj - prev) < 1e-9 * std::max(1.0, std::abs(prev))) break;
  }
  return res;
}

inline bool column_stalled(const Eigen::MatrixXcd& a, const ColumnResult& res) {
  const bool rounds_to_zero = (res.f.array() >= 0.5).count() == 0;
  const double scale = std::max(1.0, a.real().trace());
  return rounds_to_zero || res.trace.back() < 1e-12 * scale;
}

}  // namespace detail

/// Majorization-bound design: per RF chain, maximize the QR diagonal term
/// |R_ii|^2 = f^H A_i f by linearized ascent over the box, fix the column,
/// and push the projector forward; round once at the end and rebuild F_BB
/// with the power-preserving update. A column whose ascent stalls at a
/// rank-reducing vertex is re-initialized once.
inline DesignReport design_shd_qrqu(const Eigen::MatrixXcd& h,
                                    const LinkBudget& budget, int k_t,
                                    const QrquConfig& config = {},
                                    const ConnectivitySpec* mask = nullptr) {
  const int n_t = static_cast<int>(h.cols());
  const int n_s = budget.n_streams;
  if (n_s < 1 || n_s > k_t || k_t > n_t)
    throw std::invalid_argument("design_shd_qrqu: need 1 <= n_streams <= k_t <= n_t");
  if (mask && (mask->g.rows() != n_t || mask->g.cols() != k_t))
    throw std::invalid_argument("design_shd_qrqu: mask dimension mismatch");

  const SvdBundle hsvd = svd_economy(h);
  int h_rank = 0;
  while (h_rank < hsvd.s.size() && hsvd.s(h_rank) > config.rank_tol * hsvd.s(0)) ++h_rank;
  if (h_rank < n_s)
    throw std::invalid_argument("design_shd_qrqu: channel rank below n_streams");
  const Eigen::MatrixXcd h1 = hsvd.u.leftCols(n_s) * hsvd.s.head(n_s).asDiagonal() *
                              hsvd.v.leftCols(n_s).adjoint();
  if (mask && !mask_feasible(h1, *mask, n_s, config.rank_tol))
    throw std::invalid_argument("design_shd_qrqu: connectivity mask cannot reach rank n_streams");

  Rng rng(config.seed);
  DesignReport report;
  Eigen::MatrixXd f_rf = Eigen::MatrixXd::Zero(n_t, k_t);
  ProjectionState state{h1.adjoint() * h1, 0};

  for (int col = 0; col < k_t; ++col) {
    Eigen::VectorXd mask_col;
    const Eigen::VectorXd* mask_ptr = nullptr;
    if (mask) {
      mask_col = mask->g.col(col);
      mask_ptr = &mask_col;
    }
    detail::ColumnResult best = detail::optimize_column(state.a, mask_ptr, config, rng);
    if (detail::column_stalled(state.a, best)) {
      ++report.random_draws;
      detail::ColumnResult redo = detail::optimize_column(state.a, mask_ptr, config, rng);
      if (redo.trace.back() > best.trace.back()) best = redo;
    }
    f_rf.col(col) = best.f;
    report.outer_iters += static_cast<int>(best.trace.size()) - 1;
    report.surrogate_trace.push_back(best.trace.back());
    report.column_objective_traces.push_back(std::move(best.trace));

    state.columns_fixed = col + 1;
    const Eigen::MatrixXcd fixed =
        h1 * f_rf.leftCols(col + 1).cast<std::complex<double>>();
    state.a = h1.adjoint() * projection_complement(fixed, config.reg_eps) * h1;
  }

  report.precoder.f_rf = detail::round_binary(f_rf);
  report.precoder.f_bb =
      baseband_update_qr(h, report.precoder.f_rf, budget, config.psd_floor);
  report.mi_trace.push_back(mutual_information(h, report.precoder, budget));
  report.converged = true;
  return report;
}

}  // namespace switchbeam
