#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "switchbeam/metrics.hpp"
#include "switchbeam/shd_qrqu.hpp"

#include "test_support.hpp"

using namespace switchbeam;
using testsupport::random_binary;
using testsupport::random_complex;
using testsupport::random_semi_unitary;
using testsupport::small_channel;

namespace {

// |R_ii|^2 from a plain QR of H_1 [F_prev, f]: the squared distance of the
// new column from the span of the fixed ones.
double qr_diagonal_sq(const Eigen::MatrixXcd& h1, const Eigen::MatrixXd& fixed,
                      const Eigen::VectorXd& f) {
  Eigen::MatrixXd all(f.size(), fixed.cols() + 1);
  all << fixed, f;
  const Eigen::MatrixXcd stacked = h1 * all.cast<std::complex<double>>();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(stacked);
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  const std::complex<double> rii = r(fixed.cols(), fixed.cols());
  return std::norm(rii);
}

}  // namespace

TEST_CASE("projection complement: coordinate axis, orthonormal shortcut") {
  Eigen::MatrixXcd e1 = Eigen::MatrixXcd::Zero(4, 1);
  e1(0, 0) = 1.0;
  const Eigen::MatrixXcd pi = projection_complement(e1, 1e-12);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Identity(4, 4);
  expect(0, 0) = 0.0;
  CHECK((pi - expect).norm() < 1e-9);

  Rng rng(1);
  const Eigen::MatrixXcd q = random_semi_unitary(6, 2, rng);
  const Eigen::MatrixXcd pi_q = projection_complement(q, 1e-12);
  CHECK((pi_q - (Eigen::MatrixXcd::Identity(6, 6) - q * q.adjoint())).norm() < 1e-9);
}

TEST_CASE("projection complement: annihilation and idempotence") {
  Rng rng(2);
  const double reg = 1e-10;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXcd x = random_complex(6, 3, rng);
    const Eigen::MatrixXcd pi = projection_complement(x, reg);
    CHECK((pi * x).norm() < 1e-6 * x.norm());
    CHECK((pi * pi - pi).norm() < 10 * reg + 1e-9);
  }
}

TEST_CASE("quad objective: zero vector, first-column form") {
  Rng rng(3);
  const Eigen::MatrixXcd h1 = truncated_channel(random_complex(4, 6, rng), 2);
  const Eigen::MatrixXcd a1 = h1.adjoint() * h1;
  CHECK(quad_objective(a1, Eigen::VectorXd::Zero(6)) == 0.0);

  Eigen::VectorXd f(6);
  for (int i = 0; i < 6; ++i) f(i) = rng.bernoulli() ? 1.0 : 0.0;
  const double direct = (h1 * f.cast<std::complex<double>>()).squaredNorm();
  CHECK(quad_objective(a1, f) == Catch::Approx(direct).margin(1e-9));
}

TEST_CASE("quad objective: equals the QR diagonal given fixed columns") {
  Rng rng(4);
  int checked = 0;
  while (checked < 30) {
    const Eigen::MatrixXcd h = random_complex(4, 6, rng);
    const Eigen::MatrixXcd h1 = truncated_channel(h, 2);
    const Eigen::MatrixXd fixed = random_binary(6, 2, rng);
    if (numerical_rank(Eigen::MatrixXcd(h1 * fixed.cast<std::complex<double>>())) <
        fixed.cols())
      continue;
    Eigen::VectorXd f(6);
    for (int i = 0; i < 6; ++i) f(i) = rng.bernoulli() ? 1.0 : 0.0;
    const Eigen::MatrixXcd a =
        h1.adjoint() *
        projection_complement(h1 * fixed.cast<std::complex<double>>(), 1e-12) * h1;
    const double quad = quad_objective(a, f);
    const double direct = qr_diagonal_sq(h1, fixed, f);
    CHECK(quad == Catch::Approx(direct).margin(1e-8 * std::max(1.0, direct)));
    ++checked;
  }
}

TEST_CASE("quad gradient step: identity shortcut, mask zeros, ascent") {
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(4, 4);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  CHECK((quad_gradient_step(id, ones) - ones).norm() == 0.0);

  Eigen::VectorXd mask(4);
  mask << 1, 0, 1, 0;
  const Eigen::VectorXd stepped = quad_gradient_step(id, ones, &mask);
  CHECK(stepped(1) == 0.0);
  CHECK(stepped(3) == 0.0);

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXcd h1 = truncated_channel(random_complex(4, 8, rng), 2);
    const Eigen::MatrixXcd a = h1.adjoint() * h1;
    Eigen::VectorXd f(8);
    for (int i = 0; i < 8; ++i) f(i) = rng.uniform();
    for (int it = 0; it < 5; ++it) {
      const Eigen::VectorXd next = quad_gradient_step(a, f);
      CHECK(quad_objective(a, next) >=
            quad_objective(a, f) - 1e-12 * std::max(1.0, quad_objective(a, f)));
      f = next;
    }
  }
}

TEST_CASE("shd-qrqu: QR-diagonal rate lower-bounds the singular-value rate") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ChannelRealization chan = small_channel(12, 6, 140 + seed);
    const LinkBudget budget = LinkBudget::from_snr_db(0.0, 2);
    const DesignReport rep =
        design_shd_qrqu(chan.h, budget, 4, QrquConfig{.seed = seed});
    const Eigen::MatrixXcd h1 = truncated_channel(chan.h, 2);
    const Eigen::MatrixXcd ht =
        h1 * rep.precoder.f_rf.cast<std::complex<double>>();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(ht);
    Eigen::MatrixXcd r = qr.matrixR().triangularView<Eigen::Upper>();
    std::vector<double> diag;
    for (Eigen::Index i = 0; i < std::min(r.rows(), r.cols()); ++i)
      diag.push_back(std::norm(r(i, i)));
    std::sort(diag.rbegin(), diag.rend());

    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ht);
    const double c = budget.gram_gain();
    double rate_sv = 0.0, rate_qr = 0.0;
    for (int i = 0; i < 2; ++i) {
      rate_sv += std::log2(1.0 + c * svd.singularValues()(i) * svd.singularValues()(i));
      rate_qr += std::log2(1.0 + c * diag[i]);
    }
    CHECK(rate_sv >= rate_qr - 1e-9);
  }
}

TEST_CASE("shd-qrqu: majorization bound on random matrices") {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const int rows = 3 + static_cast<int>(rng.uniform() * 6);
    const int cols = 2 + static_cast<int>(rng.uniform() * 5);
    const int n_s = 1 + static_cast<int>(rng.uniform() * std::min(rows, cols));
    const Eigen::MatrixXcd m = random_complex(rows, cols, rng);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(m);
    Eigen::MatrixXcd r = qr.matrixR().triangularView<Eigen::Upper>();
    std::vector<double> diag;
    for (Eigen::Index i = 0; i < std::min(r.rows(), r.cols()); ++i)
      diag.push_back(std::norm(r(i, i)));
    std::sort(diag.rbegin(), diag.rend());

    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < n_s; ++i) {
      lhs += std::log2(1.0 + svd.singularValues()(i) * svd.singularValues()(i));
      rhs += std::log2(1.0 + diag[static_cast<std::size_t>(i)]);
    }
    CHECK(lhs >= rhs - 1e-9);
  }
}

TEST_CASE("shd-qrqu: deterministic, binary, mask-feasible, UOP-dominated") {
  const ConnectivitySpec mask = interleaved_spec(12, 4, 2);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ChannelRealization chan = small_channel(12, 6, 160 + seed);
    const LinkBudget budget = LinkBudget::from_snr_db(0.0, 2);
    const DesignReport rep =
        design_shd_qrqu(chan.h, budget, 4, QrquConfig{.seed = seed}, &mask);
    const DesignReport rep2 =
        design_shd_qrqu(chan.h, budget, 4, QrquConfig{.seed = seed}, &mask);
    CHECK((rep.precoder.f_rf - rep2.precoder.f_rf).norm() == 0.0);
    CHECK(rep.mi_trace == rep2.mi_trace);

    const Eigen::MatrixXd& f = rep.precoder.f_rf;
    CHECK(((f.array() == 0.0) || (f.array() == 1.0)).all());
    CHECK(f.cwiseProduct(Eigen::MatrixXd::Ones(12, 4) - mask.g).sum() == 0.0);
    CHECK(rep.precoder.combined().squaredNorm() == Catch::Approx(2.0).margin(1e-8));
    CHECK(rep.mi_trace.back() <=
          mutual_information(chan.h, optimal_precoder(chan.h, 2), budget) + 1e-9);
  }
}

TEST_CASE("shd-qrqu: per-column objective traces are non-decreasing") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ChannelRealization chan = small_channel(16, 8, 180 + seed);
    const DesignReport rep = design_shd_qrqu(chan.h, LinkBudget::from_snr_db(0.0, 2),
                                             4, QrquConfig{.seed = seed});
    REQUIRE(rep.column_objective_traces.size() == 4);
    for (const auto& trace : rep.column_objective_traces)
      for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] >= trace[i - 1] - 1e-12 * std::max(1.0, std::abs(trace[i - 1])));
  }
}

TEST_CASE("shd-qrqu: near-exhaustive quality on small instances") {
  int hits = 0;
  const int trials = 5;
  for (int t = 0; t < trials; ++t) {
    const ChannelRealization chan = small_channel(6, 4, 200 + t);
    const LinkBudget budget{1.0, 1.0, 2};
    const Eigen::MatrixXcd h1 = truncated_channel(chan.h, 2);
    double best = 0.0;
    for (unsigned m = 1; m < (1u << 12); ++m) {
      Eigen::MatrixXd f(6, 2);
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 6; ++i) f(i, j) = (m >> (j * 6 + i)) & 1;
      if (numerical_rank(Eigen::MatrixXcd(h1 * f.cast<std::complex<double>>())) < 2)
        continue;
      const Eigen::MatrixXcd f_bb = baseband_update_qr(chan.h, f, budget);
      best = std::max(best, mutual_information(chan.h, HybridPrecoder{f, f_bb}, budget));
    }
    const DesignReport rep = design_shd_qrqu(chan.h, budget, 2,
                                             QrquConfig{.seed = 400 + static_cast<std::uint64_t>(t)});
    if (rep.mi_trace.back() >= 0.85 * best) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("shd-qrqu: dimension and feasibility errors") {
  const ChannelRealization chan = small_channel(8, 4, 17);
  CHECK_THROWS_AS(design_shd_qrqu(chan.h, {1.0, 1.0, 3}, 2, {}), std::invalid_argument);
  ConnectivitySpec starved = subset_partition(8, 2);
  starved.g.col(1).setZero();
  CHECK_THROWS_AS(design_shd_qrqu(chan.h, {1.0, 1.0, 2}, 2, {}, &starved),
                  std::invalid_argument);
}
