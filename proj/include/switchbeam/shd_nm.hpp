#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "switchbeam/connectivity.hpp"
#include "switchbeam/metrics.hpp"
#include "switchbeam/rng.hpp"

namespace switchbeam {

/// Budgets and tolerances for the norm-maximization design. L and I follow
/// the reference experiment setup.
struct NmConfig {
  int max_outer = 1000;    // L, accepted outer steps
  int max_random = 1000;   // I, consecutive randomized retries
  double rank_tol = 1e-8;
  double psd_floor = 1e-8;
  double improvement_tol = 0.0;  // accept when I_l >= I_{l-1} - improvement_tol
  double early_stop_tol = 1e-6;  // gain below which an accepted step counts as a stall
  int early_stop_runs = 5;       // consecutive stalled steps before stopping; <= 0 disables
  std::uint64_t seed = 0;
};

/// Outcome of a design run. mi_trace holds the accepted mutual-information
/// values (non-decreasing under the default acceptance rule) starting at the
/// initial point; surrogate_trace the matching norm-surrogate values. For
/// the QR/quadratic-update design, surrogate_trace holds the final
/// per-column objectives and column_objective_traces the full inner traces,
/// while mi_trace has the single final value.
struct DesignReport {
  HybridPrecoder precoder;
  std::vector<double> mi_trace;
  std::vector<double> surrogate_trace;
  std::vector<std::vector<double>> column_objective_traces;
  int outer_iters = 0;
  int random_draws = 0;
  bool converged = false;
};

/// Gradient of ||V_1^H F||_F^2 at the previous iterate: 2 Re(V_1 V_1^H) F.
inline Eigen::MatrixXd linearized_gradient(const Eigen::MatrixXcd& v1,
                                           const Eigen::MatrixXd& f_rf_prev) {
  if (v1.rows() != f_rf_prev.rows())
    throw std::invalid_argument("linearized_gradient: dimension mismatch");
  return 2.0 * (v1 * v1.adjoint()).real() * f_rf_prev;
}

/// Exact maximizer of the linearized surrogate over the [0,1] box: the
/// objective is separable, so each entry goes to 1 on a positive gradient,
/// 0 on a negative one, keeps its previous value on a zero gradient, and is
/// forced to 0 wherever the mask forbids it.
inline Eigen::MatrixXd solve_box_lp(const Eigen::MatrixXd& gradient,
                                    const Eigen::MatrixXd& f_prev,
                                    const ConnectivitySpec* mask = nullptr) {
  if (gradient.rows() != f_prev.rows() || gradient.cols() != f_prev.cols())
    throw std::invalid_argument("solve_box_lp: gradient/previous-iterate mismatch");
  if (mask && (mask->g.rows() != gradient.rows() || mask->g.cols() != gradient.cols()))
    throw std::invalid_argument("solve_box_lp: mask dimension mismatch");
  Eigen::MatrixXd out(gradient.rows(), gradient.cols());
  for (Eigen::Index j = 0; j < gradient.cols(); ++j) {
    for (Eigen::Index i = 0; i < gradient.rows(); ++i) {
      if (mask && mask->g(i, j) == 0.0) {
        out(i, j) = 0.0;
      } else if (gradient(i, j) > 0.0) {
        out(i, j) = 1.0;
      } else if (gradient(i, j) < 0.0) {
        out(i, j) = 0.0;
      } else {
        out(i, j) = f_prev(i, j);
      }
    }
  }
  return out;
}

/// Randomized search direction: a Gaussian step around the current point,
/// rescaled into the unit-radius hypersphere and clamped back into the box.
inline Eigen::MatrixXd gaussian_perturb(const Eigen::MatrixXd& f_rf, Rng& rng) {
  Eigen::MatrixXd step(f_rf.rows(), f_rf.cols());
  for (Eigen::Index j = 0; j < step.cols(); ++j)
    for (Eigen::Index i = 0; i < step.rows(); ++i) step(i, j) = rng.normal();
  const double norm = step.norm();
  if (norm > 1.0) step /= norm;
  return (f_rf + step).cwiseMax(0.0).cwiseMin(1.0);
}

/// Power-preserving baseband update: F_RF = U_RF (F_RF^H F_RF)^(1/2) with a
/// PSD repair when the Gram matrix is (near-)singular, then F_BB =
/// (F_RF^H F_RF)^(-1/2) G with G the first N_s right singular vectors of
/// H U_RF. The product F_RF F_BB = U_RF G is semi-unitary, so the transmit
/// power lands on N_s without rescaling.
inline Eigen::MatrixXcd baseband_update_qr(const Eigen::MatrixXcd& h,
                                           const Eigen::MatrixXd& f_rf,
                                           const LinkBudget& budget,
                                           double psd_floor = 1e-8) {
  if (f_rf.cols() < budget.n_streams)
    throw std::invalid_argument("baseband_update_qr: k_t < n_streams");
  if (h.cols() != f_rf.rows())
    throw std::invalid_argument("baseband_update_qr: channel/f_rf mismatch");
  Eigen::MatrixXcd gram =
      (f_rf.transpose() * f_rf).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  if (eig.eigenvalues().minCoeff() < psd_floor) {
    gram = nearest_psd_fix(gram, psd_floor);
    eig.compute(gram);
  }
  const Eigen::MatrixXcd inv_sqrt =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseMax(psd_floor).cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().adjoint();
  const Eigen::MatrixXcd u_rf = f_rf.cast<std::complex<double>>() * inv_sqrt;
  const SvdBundle svd = svd_economy(h * u_rf);
  return inv_sqrt * svd.v.leftCols(budget.n_streams);
}

/// SVD baseband with scalar power adjustment: F_BB = V_tilde of H_1 F_RF,
/// scaled so ||F_RF F_BB||_F^2 = N_s exactly. Requires rank(H_1 F_RF) = N_s.
inline Eigen::MatrixXcd baseband_update_scaled(const Eigen::MatrixXcd& h1,
                                               const Eigen::MatrixXd& f_rf,
                                               int n_streams,
                                               double rank_tol = 1e-8) {
  if (h1.cols() != f_rf.rows())
    throw std::invalid_argument("baseband_update_scaled: dimension mismatch");
  const Eigen::MatrixXcd h_tilde = h1 * f_rf.cast<std::complex<double>>();
  const SvdBundle svd = svd_economy(h_tilde);
  int rank = 0;
  while (rank < svd.s.size() && svd.s(rank) > rank_tol * svd.s(0)) ++rank;
  if (svd.s.size() == 0 || svd.s(0) == 0.0 || rank < n_streams)
    throw std::runtime_error("baseband_update_scaled: rank(H_1 F_RF) < n_streams");
  Eigen::MatrixXcd f_bb = svd.v.leftCols(n_streams);
  const double power = (f_rf.cast<std::complex<double>>() * f_bb).norm();
  return f_bb * (std::sqrt(static_cast<double>(n_streams)) / power);
}

namespace detail {

// Rank gate plus the mutual information the candidate would deliver. The
// evaluation uses the same power-preserving baseband update as the final
// report, so acceptance ranks candidates by the metric that is ultimately
// reported.
struct CandidateEval {
  bool rank_ok = false;
  double mi = 0.0;
  double surrogate = 0.0;
};

inline CandidateEval evaluate_nm_candidate(const Eigen::MatrixXcd& h,
                                           const Eigen::MatrixXcd& h1,
                                           const Eigen::MatrixXcd& v1,
                                           const Eigen::MatrixXd& candidate,
                                           const LinkBudget& budget,
                                           const NmConfig& config) {
  CandidateEval out;
  const Eigen::MatrixXcd h_tilde = h1 * candidate.cast<std::complex<double>>();
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h_tilde);
  const Eigen::VectorXd& s = svd.singularValues();
  int rank = 0;
  if (s.size() > 0 && s(0) > 0.0)
    while (rank < s.size() && s(rank) > config.rank_tol * s(0)) ++rank;
  if (rank < budget.n_streams) return out;
  out.rank_ok = true;
  const Eigen::MatrixXcd f_bb = baseband_update_qr(h, candidate, budget, config.psd_floor);
  out.mi = mutual_information(h, candidate.cast<std::complex<double>>() * f_bb, budget);
  out.surrogate = frobenius_surrogate(v1, candidate);
  return out;
}

inline Eigen::MatrixXd round_binary(const Eigen::MatrixXd& f, double threshold = 0.5) {
  return (f.array() >= threshold).cast<double>().matrix();
}

}  // namespace detail

/// Norm-maximization design: sequential convex steps on the linearized
/// surrogate over the box, gated by rank(H_1 F_RF) = N_s and guided by the
/// actual mutual information. After a rejected or rank-deficient step the
/// search falls back to Gaussian draws around the accepted iterate, which
/// are themselves gated and accepted the same way, until one lets the
/// convex steps resume. The accepted relaxed iterate is rounded once at the
/// end and the baseband matrix is rebuilt with the power-preserving update.
inline DesignReport design_shd_nm(const Eigen::MatrixXcd& h,
                                  const LinkBudget& budget, int k_t,
                                  const NmConfig& config = {},
                                  const ConnectivitySpec* mask = nullptr) {
  const int n_t = static_cast<int>(h.cols());
  const int n_s = budget.n_streams;
  if (n_s < 1 || n_s > k_t || k_t > n_t)
    throw std::invalid_argument("design_shd_nm: need 1 <= n_streams <= k_t <= n_t");
  if (mask && (mask->g.rows() != n_t || mask->g.cols() != k_t))
    throw std::invalid_argument("design_shd_nm: mask dimension mismatch");

  const SvdBundle hsvd = svd_economy(h);
  int h_rank = 0;
  while (h_rank < hsvd.s.size() && hsvd.s(h_rank) > config.rank_tol * hsvd.s(0)) ++h_rank;
  if (h_rank < n_s)
    throw std::invalid_argument("design_shd_nm: channel rank below n_streams");
  const Eigen::MatrixXcd v1 = hsvd.v.leftCols(n_s);
  const Eigen::MatrixXcd h1 = hsvd.u.leftCols(n_s) * hsvd.s.head(n_s).asDiagonal() *
                              v1.adjoint();
  if (mask && !mask_feasible(h1, *mask, n_s, config.rank_tol))
    throw std::invalid_argument("design_shd_nm: connectivity mask cannot reach rank n_streams");

  // Gradient factor 2 Re(V_1 V_1^H), fixed for the whole run.
  const Eigen::MatrixXd grad_factor = 2.0 * (v1 * v1.adjoint()).real();

  Rng rng(config.seed);
  constexpr int kMaxInitDraws = 50;

  Eigen::MatrixXd accepted(n_t, k_t);
  detail::CandidateEval accepted_eval;
  bool initialized = false;
  for (int attempt = 0; attempt < kMaxInitDraws && !initialized; ++attempt) {
    for (int j = 0; j < k_t; ++j)
      for (int i = 0; i < n_t; ++i)
        accepted(i, j) = (!mask || mask->g(i, j) != 0.0) && rng.bernoulli() ? 1.0 : 0.0;
    accepted_eval = detail::evaluate_nm_candidate(h, h1, v1, accepted, budget, config);
    initialized = accepted_eval.rank_ok;
  }
  if (!initialized)
    throw std::runtime_error("design_shd_nm: no rank-feasible random start found");

  DesignReport report;
  report.mi_trace.push_back(accepted_eval.mi);
  report.surrogate_trace.push_back(accepted_eval.surrogate);

  // Accepted Gaussian draws are fractional, so rounding the final iterate
  // can in principle lose the rank gate; the best rank-feasible binary
  // candidate seen (the initial point or an LP vertex) backs it up.
  Eigen::MatrixXd best_binary = accepted;
  double best_binary_mi = accepted_eval.mi;

  int ell = 1;
  int retries = 0;
  int small_improvements = 0;
  bool scp_step = true;
  while (ell <= config.max_outer && retries <= config.max_random) {
    Eigen::MatrixXd candidate;
    bool candidate_is_vertex = false;
    if (scp_step) {
      candidate = solve_box_lp(grad_factor * accepted, accepted, mask);
      candidate_is_vertex = true;
      if (candidate == accepted) {
        candidate_is_vertex = false;
        scp_step = false;  // at the SCP fixed point
      }
    }
    if (!scp_step) {
      candidate = gaussian_perturb(accepted, rng);
      if (mask) candidate = apply_mask(candidate, *mask);
      ++retries;
      ++report.random_draws;
    }
    const detail::CandidateEval eval =
        detail::evaluate_nm_candidate(h, h1, v1, candidate, budget, config);
    if (candidate_is_vertex && eval.rank_ok && eval.mi > best_binary_mi &&
        candidate == detail::round_binary(candidate)) {
      best_binary = candidate;
      best_binary_mi = eval.mi;
    }
    if (eval.rank_ok && eval.mi >= report.mi_trace.back() - config.improvement_tol) {
      const double gain = eval.mi - report.mi_trace.back();
      accepted = candidate;
      scp_step = true;
      report.mi_trace.push_back(eval.mi);
      report.surrogate_trace.push_back(eval.surrogate);
      ++ell;
      retries = 0;
      small_improvements = (gain < config.early_stop_tol) ? small_improvements + 1 : 0;
      if (config.early_stop_runs > 0 && small_improvements >= config.early_stop_runs) {
        report.converged = true;
        break;
      }
    } else {
      // Rank failure or mutual information went down: randomized search
      // around the accepted point.
      scp_step = false;
    }
  }

  report.outer_iters = static_cast<int>(report.mi_trace.size()) - 1;

  // Finalize: round the accepted iterate; if rounding lost the rank gate or
  // underperforms the best binary candidate seen, take that instead.
  Eigen::MatrixXd f_bin = detail::round_binary(accepted);
  double rounded_mi = -1.0;
  if (numerical_rank(Eigen::MatrixXcd(h1 * f_bin.cast<std::complex<double>>()),
                     config.rank_tol) >= n_s) {
    const Eigen::MatrixXcd f_bb = baseband_update_qr(h, f_bin, budget, config.psd_floor);
    rounded_mi = mutual_information(h, f_bin.cast<std::complex<double>>() * f_bb, budget);
  }
  if (best_binary_mi > rounded_mi) f_bin = best_binary;
  report.precoder.f_rf = f_bin;
  report.precoder.f_bb =
      baseband_update_qr(h, report.precoder.f_rf, budget, config.psd_floor);
  return report;
}

}  // namespace switchbeam
