#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace switchbeam {

/// Link budget: average received power rho, noise variance, stream count.
/// SNR sweeps vary rho with noise_var fixed at 1.
struct LinkBudget {
  double rho = 1.0;
  double noise_var = 1.0;
  int n_streams = 1;

  static LinkBudget from_snr_db(double snr_db, int n_streams) {
    return {std::pow(10.0, snr_db / 10.0), 1.0, n_streams};
  }
  double snr_db() const { return 10.0 * std::log10(rho / noise_var); }
  /// rho / (N_s sigma^2), the scale in front of the Gram matrix.
  double gram_gain() const { return rho / (n_streams * noise_var); }
};

/// Two-stage precoder: binary (relaxed to [0,1] mid-optimization) analog
/// matrix N_t x k_t and complex baseband matrix k_t x N_s.
struct HybridPrecoder {
  Eigen::MatrixXd f_rf;
  Eigen::MatrixXcd f_bb;

  Eigen::MatrixXcd combined() const {
    return f_rf.cast<std::complex<double>>() * f_bb;
  }
};

/// Thin SVD with a fixed column-phase convention: the largest-magnitude
/// entry of each right singular vector is made real positive (the matching
/// left vector is rotated with it, so u * s.asDiagonal() * v^H is preserved).
struct SvdBundle {
  Eigen::MatrixXcd u;
  Eigen::VectorXd s;
  Eigen::MatrixXcd v;
};

inline SvdBundle svd_economy(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdBundle out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
    Eigen::Index k = 0;
    out.v.col(j).cwiseAbs().maxCoeff(&k);
    const std::complex<double> top = out.v(k, j);
    const double mag = std::abs(top);
    if (mag == 0.0) continue;
    const std::complex<double> rot = std::conj(top) / mag;
    out.v.col(j) *= rot;
    if (j < out.u.cols()) out.u.col(j) *= rot;
  }
  return out;
}

/// Count of singular values above rel_tol * sigma_max; 0 for a zero matrix.
inline int numerical_rank(const Eigen::MatrixXcd& m, double rel_tol = 1e-8) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  int rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return rank;
}

inline int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8) {
  return numerical_rank(Eigen::MatrixXcd(m.cast<std::complex<double>>()), rel_tol);
}

/// Clamps the eigenvalues of a Hermitian matrix below `floor` up to `floor`;
/// returns the input unchanged when it is already sufficiently positive
/// definite. Throws if the input is not Hermitian (tolerance 1e-10).
inline Eigen::MatrixXcd nearest_psd_fix(const Eigen::MatrixXcd& g, double floor) {
  if (g.rows() != g.cols())
    throw std::invalid_argument("nearest_psd_fix: matrix must be square");
  if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("nearest_psd_fix: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g);
  if (eig.eigenvalues().minCoeff() >= floor) return g;
  Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
}

/// log2 det(I + c (HF)^H (HF)) with c = rho / (N_s sigma^2), evaluated
/// through the N_s x N_s Gram eigenvalues.
inline double mutual_information(const Eigen::MatrixXcd& h,
                                 const Eigen::MatrixXcd& f_combined,
                                 const LinkBudget& budget) {
  if (h.cols() != f_combined.rows())
    throw std::invalid_argument("mutual_information: channel/precoder dimension mismatch");
  if (f_combined.cols() != budget.n_streams)
    throw std::invalid_argument("mutual_information: precoder column count != n_streams");
  const Eigen::MatrixXcd hf = h * f_combined;
  const Eigen::MatrixXcd gram = hf.adjoint() * hf;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double c = budget.gram_gain();
  double bits = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = std::max(eig.eigenvalues()(i), 0.0);
    bits += std::log1p(c * lam);
  }
  return bits / std::numbers::ln2_v<double>;
}

inline double mutual_information(const Eigen::MatrixXcd& h,
                                 const HybridPrecoder& precoder,
                                 const LinkBudget& budget) {
  if (precoder.f_rf.cols() != precoder.f_bb.rows())
    throw std::invalid_argument("mutual_information: f_rf/f_bb dimension mismatch");
  return mutual_information(h, precoder.combined(), budget);
}

/// Unconstrained optimum: baseband = first N_s right singular vectors of H
/// (equal power allocation), analog part the identity by convention.
inline HybridPrecoder optimal_precoder(const Eigen::MatrixXcd& h, int n_streams,
                                       double rank_tol = 1e-8) {
  const SvdBundle svd = svd_economy(h);
  int rank = 0;
  while (rank < svd.s.size() && svd.s(rank) > rank_tol * svd.s(0)) ++rank;
  if (n_streams < 1 || n_streams > rank)
    throw std::invalid_argument("optimal_precoder: n_streams exceeds channel rank");
  HybridPrecoder out;
  out.f_rf = Eigen::MatrixXd::Identity(h.cols(), h.cols());
  out.f_bb = svd.v.leftCols(n_streams);
  return out;
}

/// H_1: the channel rebuilt from its first N_s singular triplets.
inline Eigen::MatrixXcd truncated_channel(const Eigen::MatrixXcd& h, int n_streams,
                                          double rank_tol = 1e-8) {
  const SvdBundle svd = svd_economy(h);
  int rank = 0;
  while (rank < svd.s.size() && svd.s(rank) > rank_tol * svd.s(0)) ++rank;
  if (n_streams < 1 || n_streams > rank)
    throw std::invalid_argument("truncated_channel: n_streams exceeds channel rank");
  return svd.u.leftCols(n_streams) *
         svd.s.head(n_streams).asDiagonal() *
         svd.v.leftCols(n_streams).adjoint();
}

/// ||V_1^H F_RF||_F^2, the norm surrogate for the mutual information.
inline double frobenius_surrogate(const Eigen::MatrixXcd& v1,
                                  const Eigen::MatrixXd& f_rf) {
  if (v1.rows() != f_rf.rows())
    throw std::invalid_argument("frobenius_surrogate: dimension mismatch");
  return (v1.adjoint() * f_rf.cast<std::complex<double>>()).squaredNorm();
}

}  // namespace switchbeam
