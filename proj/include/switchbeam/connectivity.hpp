#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switchbeam/metrics.hpp"

namespace switchbeam {

/// Connectivity matrix G_t of a switch network: g(i, j) = 1 when splitter j
/// may reach antenna i. Every column sums to the splitter fan-out s_t, every
/// row to the combiner fan-in c_t, and k_t * s_t = N_t * c_t.
struct ConnectivitySpec {
  Eigen::MatrixXd g;
  int splitter_outputs = 0;  // s_t
  int combiner_inputs = 0;   // c_t

  int n_t() const { return static_cast<int>(g.rows()); }
  int k_t() const { return static_cast<int>(g.cols()); }
  int total_connections() const { return k_t() * splitter_outputs; }
};

struct SpecViolation {
  enum class Kind { NotBinary, ColumnSum, RowSum, CountMismatch };
  Kind kind;
  int index = -1;  // row or column, -1 for global checks
  double value = 0.0;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::NotBinary:
        os << "non-binary entry in row " << index;
        break;
      case Kind::ColumnSum:
        os << "column " << index << " sums to " << value << " != s_t";
        break;
      case Kind::RowSum:
        os << "row " << index << " sums to " << value << " != c_t";
        break;
      case Kind::CountMismatch:
        os << "k_t*s_t != N_t*c_t (total connections " << value << ")";
        break;
    }
    return os.str();
  }
};

/// Checks the three structural invariants; violations are returned as data,
/// one entry per offending row/column.
inline std::vector<SpecViolation> validate(const ConnectivitySpec& spec) {
  std::vector<SpecViolation> out;
  for (int i = 0; i < spec.n_t(); ++i) {
    for (int j = 0; j < spec.k_t(); ++j) {
      const double v = spec.g(i, j);
      if (v != 0.0 && v != 1.0) {
        out.push_back({SpecViolation::Kind::NotBinary, i, v});
        j = spec.k_t();  // one report per row is enough
      }
    }
  }
  for (int j = 0; j < spec.k_t(); ++j) {
    const double sum = spec.g.col(j).sum();
    if (sum != static_cast<double>(spec.splitter_outputs))
      out.push_back({SpecViolation::Kind::ColumnSum, j, sum});
  }
  for (int i = 0; i < spec.n_t(); ++i) {
    const double sum = spec.g.row(i).sum();
    if (sum != static_cast<double>(spec.combiner_inputs))
      out.push_back({SpecViolation::Kind::RowSum, i, sum});
  }
  if (spec.k_t() * spec.splitter_outputs != spec.n_t() * spec.combiner_inputs)
    out.push_back({SpecViolation::Kind::CountMismatch, -1,
                   static_cast<double>(spec.k_t() * spec.splitter_outputs)});
  return out;
}

inline ConnectivitySpec fully_connected(int n_t, int k_t) {
  ConnectivitySpec spec;
  spec.g = Eigen::MatrixXd::Ones(n_t, k_t);
  spec.splitter_outputs = n_t;
  spec.combiner_inputs = k_t;
  return spec;
}

/// No combiner at the antennas (c_t = 1): mutually exclusive columns, each
/// owning a contiguous block of N_t / k_t antennas.
inline ConnectivitySpec subset_partition(int n_t, int k_t) {
  if (n_t < 1 || k_t < 1 || n_t % k_t != 0)
    throw std::invalid_argument("subset_partition: k_t must divide n_t");
  const int s_t = n_t / k_t;
  ConnectivitySpec spec;
  spec.g = Eigen::MatrixXd::Zero(n_t, k_t);
  for (int j = 0; j < k_t; ++j) spec.g.block(j * s_t, j, s_t, 1).setOnes();
  spec.splitter_outputs = s_t;
  spec.combiner_inputs = 1;
  return spec;
}

/// Cyclic pattern: row r connects to the columns congruent to r mod period.
/// period = 2 with four chains gives alternating rows [1 0 1 0], [0 1 0 1].
inline ConnectivitySpec interleaved_spec(int n_t, int k_t, int period) {
  if (period < 1 || n_t < 1 || k_t < 1 || k_t % period != 0 || n_t % period != 0)
    throw std::invalid_argument(
        "interleaved_spec: period must divide both n_t and k_t");
  ConnectivitySpec spec;
  spec.g = Eigen::MatrixXd::Zero(n_t, k_t);
  for (int i = 0; i < n_t; ++i)
    for (int j = 0; j < k_t; ++j)
      if (j % period == i % period) spec.g(i, j) = 1.0;
  spec.splitter_outputs = n_t / period;
  spec.combiner_inputs = k_t / period;
  return spec;
}

/// Zeroes every entry the mask forbids. Idempotent.
inline Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& f_rf,
                                  const ConnectivitySpec& spec) {
  if (f_rf.rows() != spec.g.rows() || f_rf.cols() != spec.g.cols())
    throw std::invalid_argument("apply_mask: dimension mismatch");
  return f_rf.cwiseProduct(spec.g);
}

/// A mask is usable only if the antennas it reaches expose at least N_s
/// independent columns of H_1 and at least N_s splitters have any
/// connection at all; otherwise rank(H_1 F_RF) = N_s is unreachable.
inline bool mask_feasible(const Eigen::MatrixXcd& h1, const ConnectivitySpec& spec,
                          int n_streams, double rank_tol = 1e-8) {
  if (h1.cols() != spec.g.rows()) throw std::invalid_argument("mask_feasible: dimension mismatch");
  int usable_columns = 0;
  for (int j = 0; j < spec.k_t(); ++j)
    if (spec.g.col(j).sum() > 0.0) ++usable_columns;
  if (usable_columns < n_streams) return false;

  std::vector<int> allowed;
  for (int i = 0; i < spec.n_t(); ++i)
    if (spec.g.row(i).sum() > 0.0) allowed.push_back(i);
  if (allowed.empty()) return false;
  Eigen::MatrixXcd sub(h1.rows(), static_cast<Eigen::Index>(allowed.size()));
  for (std::size_t k = 0; k < allowed.size(); ++k) sub.col(k) = h1.col(allowed[k]);
  return numerical_rank(sub, rank_tol) >= n_streams;
}

/// File format: header `CONNSPEC1 N_t k_t s_t c_t`, then N_t rows of k_t
/// space-separated 0/1 digits.
inline void save_connectivity(const std::string& path, const ConnectivitySpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_connectivity: cannot open " + path);
  out << "CONNSPEC1 " << spec.n_t() << ' ' << spec.k_t() << ' '
      << spec.splitter_outputs << ' ' << spec.combiner_inputs << '\n';
  for (int i = 0; i < spec.n_t(); ++i) {
    for (int j = 0; j < spec.k_t(); ++j) {
      if (j) out << ' ';
      out << static_cast<int>(spec.g(i, j));
    }
    out << '\n';
  }
}

inline ConnectivitySpec load_connectivity(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_connectivity: cannot open " + path);
  std::string magic;
  int n_t = 0, k_t = 0;
  ConnectivitySpec spec;
  in >> magic >> n_t >> k_t >> spec.splitter_outputs >> spec.combiner_inputs;
  if (!in || magic != "CONNSPEC1" || n_t < 1 || k_t < 1)
    throw std::runtime_error("load_connectivity: bad header in " + path);
  spec.g.resize(n_t, k_t);
  for (int i = 0; i < n_t; ++i) {
    for (int j = 0; j < k_t; ++j) {
      int v = 0;
      in >> v;
      if (!in || (v != 0 && v != 1))
        throw std::runtime_error("load_connectivity: bad entry in " + path);
      spec.g(i, j) = v;
    }
  }
  return spec;
}

}  // namespace switchbeam
