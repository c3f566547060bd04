#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "switchbeam/connectivity.hpp"
#include "switchbeam/metrics.hpp"
#include "switchbeam/shd_nm.hpp"

#include "test_support.hpp"

using namespace switchbeam;
using testsupport::random_binary;
using testsupport::random_complex;
using testsupport::random_semi_unitary;
using testsupport::small_channel;

TEST_CASE("linearized gradient: zero point, unitary shortcut") {
  Rng rng(1);
  const Eigen::MatrixXcd v1 = random_complex(6, 2, rng);
  CHECK(linearized_gradient(v1, Eigen::MatrixXd::Zero(6, 3)).norm() == 0.0);

  const Eigen::MatrixXcd q = random_semi_unitary(5, 5, rng);  // square unitary
  const Eigen::MatrixXd f = random_binary(5, 2, rng);
  CHECK((linearized_gradient(q, f) - 2.0 * f).norm() < 1e-10);
}

TEST_CASE("linearized gradient: matches central finite differences") {
  Rng rng(2);
  const Eigen::MatrixXcd v1 = svd_economy(random_complex(4, 6, rng)).v.leftCols(2);
  Eigen::MatrixXd f(6, 2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 6; ++i) f(i, j) = rng.uniform();
  const Eigen::MatrixXd grad = linearized_gradient(v1, f);
  const double eps = 1e-5;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 6; ++i) {
      Eigen::MatrixXd up = f, dn = f;
      up(i, j) += eps;
      dn(i, j) -= eps;
      const double fd =
          (frobenius_surrogate(v1, up) - frobenius_surrogate(v1, dn)) / (2.0 * eps);
      CHECK(grad(i, j) == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("box LP: bang-bang with tie keeping and mask zeros") {
  const Eigen::MatrixXd prev = Eigen::MatrixXd::Constant(2, 2, 0.25);
  CHECK((solve_box_lp(Eigen::MatrixXd::Ones(2, 2), prev) -
         Eigen::MatrixXd::Ones(2, 2)).norm() == 0.0);

  Eigen::MatrixXd g(2, 2);
  g << 1, -1, -2, 3;
  Eigen::MatrixXd expect(2, 2);
  expect << 1, 0, 0, 1;
  CHECK((solve_box_lp(g, prev) - expect).norm() == 0.0);

  g(0, 1) = 0.0;  // tie keeps the previous entry
  CHECK(solve_box_lp(g, prev)(0, 1) == 0.25);

  ConnectivitySpec mask = fully_connected(2, 2);
  mask.g(0, 1) = 0.0;
  const Eigen::MatrixXd masked = solve_box_lp(Eigen::MatrixXd::Ones(2, 2), prev, &mask);
  CHECK(masked(0, 1) == 0.0);
  CHECK(masked.sum() == 3.0);
}

TEST_CASE("gaussian perturb: deterministic, boxed, unit-radius step") {
  Rng rng(3);
  Eigen::MatrixXd f(4, 3);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) f(i, j) = rng.uniform();
  Rng a(10), b(10);
  const Eigen::MatrixXd p1 = gaussian_perturb(f, a);
  const Eigen::MatrixXd p2 = gaussian_perturb(f, b);
  CHECK((p1 - p2).norm() == 0.0);
  CHECK(p1.minCoeff() >= 0.0);
  CHECK(p1.maxCoeff() <= 1.0);
  CHECK((p1 - f).norm() <= 1.0 + 1e-12);
}

TEST_CASE("qr baseband update: identity switch reduces to the channel SVD") {
  Rng rng(4);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  const LinkBudget budget{1.0, 1.0, 2};
  const Eigen::MatrixXcd f_bb =
      baseband_update_qr(h, Eigen::MatrixXd::Identity(6, 6), budget);
  CHECK((f_bb - svd_economy(h).v.leftCols(2)).norm() < 1e-9);
}

TEST_CASE("qr baseband update: power and semi-unitarity") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXcd h = random_complex(4, 6, rng);
    Eigen::MatrixXd f_rf = random_binary(6, 3, rng);
    if (numerical_rank(Eigen::MatrixXd(f_rf)) < 2) continue;
    const LinkBudget budget{1.0, 1.0, 2};
    const Eigen::MatrixXcd f_bb = baseband_update_qr(h, f_rf, budget);
    const Eigen::MatrixXcd f = f_rf.cast<std::complex<double>>() * f_bb;
    CHECK(f.squaredNorm() == Catch::Approx(2.0).margin(1e-9));
    const Eigen::MatrixXcd gram = (f_rf.transpose() * f_rf).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
    if (eig.eigenvalues().minCoeff() >= 1e-8)
      CHECK((f.adjoint() * f - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-8);
  }
}

TEST_CASE("qr baseband update: beats random baseband candidates") {
  Rng rng(6);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  Eigen::MatrixXd f_rf;
  do {
    f_rf = random_binary(6, 2, rng);
  } while (numerical_rank(Eigen::MatrixXd(f_rf)) < 2);
  const LinkBudget budget{1.0, 1.0, 2};
  const Eigen::MatrixXcd f_bb = baseband_update_qr(h, f_rf, budget);
  const double best = mutual_information(h, HybridPrecoder{f_rf, f_bb}, budget);
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXcd cand = random_semi_unitary(2, 2, rng);
    const double power = (f_rf.cast<std::complex<double>>() * cand).norm();
    cand *= std::sqrt(2.0) / power;
    CHECK(mutual_information(h, HybridPrecoder{f_rf, cand}, budget) <= best + 1e-9);
  }
}

TEST_CASE("qr baseband update: rejects too few chains") {
  Rng rng(7);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  CHECK_THROWS_AS(baseband_update_qr(h, Eigen::MatrixXd::Ones(6, 1), {1.0, 1.0, 2}),
                  std::invalid_argument);
}

TEST_CASE("scaled baseband update: exact power, scale invariance") {
  Rng rng(8);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  const Eigen::MatrixXcd h1 = truncated_channel(h, 2);
  Eigen::MatrixXd f_rf;
  do {
    f_rf = random_binary(6, 3, rng);
  } while (numerical_rank(Eigen::MatrixXcd(h1 * f_rf.cast<std::complex<double>>())) < 2);
  const Eigen::MatrixXcd f_bb = baseband_update_scaled(h1, f_rf, 2);
  CHECK((f_rf.cast<std::complex<double>>() * f_bb).squaredNorm() ==
        Catch::Approx(2.0).margin(1e-12));

  // the scalar adjustment is invariant to the candidate's own scale
  auto rescale = [&](const Eigen::MatrixXcd& cand) {
    return Eigen::MatrixXcd(cand * (std::sqrt(2.0) /
                                    (f_rf.cast<std::complex<double>>() * cand).norm()));
  };
  const Eigen::MatrixXcd cand = random_complex(3, 2, rng);
  CHECK((rescale(cand) - rescale(Eigen::MatrixXcd(3.7 * cand))).norm() < 1e-12);
}

TEST_CASE("scaled baseband update: agrees with the QR update for semi-unitary switches") {
  Rng rng(9);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  const Eigen::MatrixXcd h1 = truncated_channel(h, 2);
  // disjoint single-antenna columns: F_RF^T F_RF = I
  Eigen::MatrixXd f_rf = Eigen::MatrixXd::Zero(6, 2);
  f_rf(1, 0) = 1.0;
  f_rf(4, 1) = 1.0;
  const LinkBudget budget{1.0, 1.0, 2};
  const double mi_scaled = mutual_information(
      h, HybridPrecoder{f_rf, baseband_update_scaled(h1, f_rf, 2)}, budget);
  const double mi_qr = mutual_information(
      h, HybridPrecoder{f_rf, baseband_update_qr(h, f_rf, budget)}, budget);
  CHECK(mi_scaled == Catch::Approx(mi_qr).margin(1e-9));
}

TEST_CASE("scaled baseband update: rank deficiency throws") {
  Rng rng(10);
  const Eigen::MatrixXcd h = random_complex(4, 6, rng);
  const Eigen::MatrixXcd h1 = truncated_channel(h, 2);
  Eigen::MatrixXd f_rf = Eigen::MatrixXd::Zero(6, 2);
  f_rf.col(0).setOnes();
  f_rf.col(1).setOnes();  // duplicated columns, rank 1
  CHECK_THROWS(baseband_update_scaled(h1, f_rf, 2));
}

TEST_CASE("shd-nm: accepted trace is non-decreasing and deterministic") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ChannelRealization chan = small_channel(12, 6, 40 + seed);
    const LinkBudget budget{1.0, 1.0, 2};
    NmConfig cfg;
    cfg.seed = seed;
    const DesignReport rep = design_shd_nm(chan.h, budget, 3, cfg);
    for (std::size_t i = 1; i < rep.mi_trace.size(); ++i)
      CHECK(rep.mi_trace[i] >= rep.mi_trace[i - 1]);

    const DesignReport rep2 = design_shd_nm(chan.h, budget, 3, cfg);
    CHECK((rep.precoder.f_rf - rep2.precoder.f_rf).norm() == 0.0);
    CHECK((rep.precoder.f_bb - rep2.precoder.f_bb).norm() == 0.0);
    CHECK(rep.mi_trace == rep2.mi_trace);
    CHECK(rep.random_draws == rep2.random_draws);
  }
}

TEST_CASE("shd-nm: output is binary, rank-feasible, UOP-dominated") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ChannelRealization chan = small_channel(12, 6, 60 + seed);
    const LinkBudget budget = LinkBudget::from_snr_db(5.0, 2);
    const DesignReport rep = design_shd_nm(chan.h, budget, 3, NmConfig{.seed = seed});

    const Eigen::MatrixXd& f = rep.precoder.f_rf;
    CHECK(((f.array() == 0.0) || (f.array() == 1.0)).all());
    const Eigen::MatrixXcd h1 = truncated_channel(chan.h, 2);
    CHECK(numerical_rank(Eigen::MatrixXcd(h1 * f.cast<std::complex<double>>())) >= 2);
    CHECK(rep.precoder.combined().squaredNorm() == Catch::Approx(2.0).margin(1e-8));

    const double mi = mutual_information(chan.h, rep.precoder, budget);
    const double uop = mutual_information(chan.h, optimal_precoder(chan.h, 2), budget);
    CHECK(mi <= uop + 1e-9);
  }
}

TEST_CASE("shd-nm: masked designs never use forbidden switches") {
  const ConnectivitySpec mask = interleaved_spec(12, 4, 2);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ChannelRealization chan = small_channel(12, 6, 80 + seed);
    const DesignReport rep = design_shd_nm(chan.h, LinkBudget::from_snr_db(0.0, 2), 4,
                                           NmConfig{.seed = seed}, &mask);
    const Eigen::MatrixXd complement = Eigen::MatrixXd::Ones(12, 4) - mask.g;
    CHECK(rep.precoder.f_rf.cwiseProduct(complement).sum() == 0.0);
  }
}

TEST_CASE("shd-nm: near-exhaustive quality on small instances") {
  int hits = 0;
  const int trials = 5;
  for (int t = 0; t < trials; ++t) {
    const ChannelRealization chan = small_channel(6, 4, 100 + t);
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
    const DesignReport rep = design_shd_nm(chan.h, budget, 2,
                                           NmConfig{.seed = 300 + static_cast<std::uint64_t>(t)});
    if (mutual_information(chan.h, rep.precoder, budget) >= 0.90 * best) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("shd-nm: dimension and feasibility errors") {
  const ChannelRealization chan = small_channel(8, 4, 7);
  CHECK_THROWS_AS(design_shd_nm(chan.h, {1.0, 1.0, 3}, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(design_shd_nm(chan.h, {1.0, 1.0, 2}, 9, {}), std::invalid_argument);

  ConnectivitySpec starved = subset_partition(8, 2);
  starved.g.col(1).setZero();
  CHECK_THROWS_AS(design_shd_nm(chan.h, {1.0, 1.0, 2}, 2, {}, &starved),
                  std::invalid_argument);
}
