#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "switchbeam/channel.hpp"
#include "switchbeam/connectivity.hpp"
#include "switchbeam/metrics.hpp"
#include "switchbeam/shd_nm.hpp"
#include "switchbeam/shd_qrqu.hpp"

namespace switchbeam {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConnectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { Uop = 0, ShdNm = 1, ShdQrqu = 2, ShdNmPc = 3, ShdQrquPc = 4 };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Uop: return "UOP";
    case Method::ShdNm: return "SHD-NM";
    case Method::ShdQrqu: return "SHD-QRQU";
    case Method::ShdNmPc: return "SHD-NM-PC";
    case Method::ShdQrquPc: return "SHD-QRQU-PC";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::Uop, Method::ShdNm, Method::ShdQrqu, Method::ShdNmPc,
                   Method::ShdQrquPc})
    if (name == method_name(m)) return m;
  return std::nullopt;
}

inline bool is_partially_connected(Method m) {
  return m == Method::ShdNmPc || m == Method::ShdQrquPc;
}

/// Squarest grid factorization for an antenna count.
inline ArrayGeometry make_upa(int n, bool omni) {
  int n_y = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (n_y > 1 && n % n_y != 0) --n_y;
  ArrayGeometry g;
  g.n_y = std::max(n_y, 1);
  g.n_z = n / g.n_y;
  g.omni = omni;
  return g;
}

/// One Monte-Carlo experiment: seeded trials over a channel shared by every
/// method and SNR point, so the resulting curves are paired.
struct ExperimentConfig {
  ChannelConfig channel;  // cluster parameters; geometries rebuilt from n_t/n_r
  int n_t = 64;
  int n_r = 16;
  int k_t = 4;
  int k_r = 4;  // receive chains, unused under the ideal-combiner assumption
  std::vector<double> snr_db_list = {-10.0, -5.0, 0.0, 5.0, 10.0};
  std::vector<int> n_s_list = {2};
  int trials = 100;
  std::vector<Method> methods = {Method::Uop, Method::ShdNm, Method::ShdQrqu};
  std::optional<ConnectivitySpec> connectivity;
  std::string connectivity_path;
  std::uint64_t master_seed = 1;
  std::string output_path = "records.csv";
  bool collect_timings = false;  // keeps the CSV byte-stable when off
  NmConfig nm;
  QrquConfig qrqu;
};

struct MetricRecord {
  Method method = Method::Uop;
  double snr_db = 0.0;
  int n_s = 0;
  int k_t = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double spectral_efficiency = 0.0;
  double runtime_ms = 0.0;
  int outer_iters = 0;
  int random_draws = 0;
};

struct SummaryRow {
  Method method = Method::Uop;
  double snr_db = 0.0;
  int n_s = 0;
  int k_t = 0;
  int trials = 0;
  double mean_se = 0.0;
  double stderr_se = 0.0;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& config) {
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (config.n_t < 1 || config.n_r < 1) throw ConfigError("array sizes must be >= 1");
  if (config.k_t < 1 || config.k_t > config.n_t)
    throw ConfigError("need 1 <= k_t <= n_t");
  if (config.snr_db_list.empty()) throw ConfigError("empty SNR list");
  if (config.n_s_list.empty()) throw ConfigError("empty stream list");
  if (config.methods.empty()) throw ConfigError("no methods selected");
  bool any_hybrid = false, any_pc = false;
  for (Method m : config.methods) {
    if (m != Method::Uop) any_hybrid = true;
    if (is_partially_connected(m)) any_pc = true;
  }
  for (int n_s : config.n_s_list) {
    if (n_s < 1) throw ConfigError("n_s must be >= 1");
    if (any_hybrid && n_s > config.k_t) throw ConfigError("n_s exceeds k_t");
  }
  if (any_pc) {
    if (!config.connectivity)
      throw ConfigError("partially connected methods need a connectivity spec");
    const ConnectivitySpec& spec = *config.connectivity;
    if (spec.n_t() != config.n_t || spec.k_t() != config.k_t)
      throw ConnectivityError("connectivity matrix dimensions do not match n_t x k_t");
    const auto violations = validate(spec);
    if (!violations.empty())
      throw ConnectivityError("connectivity spec invalid: " + violations.front().describe());
  }
}

inline std::vector<MetricRecord> run_sweep(const ExperimentConfig& config) {
  validate_config(config);

  ChannelConfig chan = config.channel;
  const ArrayGeometry tx_template = config.channel.tx_geometry;
  chan.tx_geometry = make_upa(config.n_t, tx_template.omni);
  chan.tx_geometry.spacing = tx_template.spacing;
  chan.tx_geometry.sector_azimuth_halfwidth = tx_template.sector_azimuth_halfwidth;
  chan.tx_geometry.sector_elevation_halfwidth = tx_template.sector_elevation_halfwidth;
  chan.rx_geometry = make_upa(config.n_r, true);
  chan.rx_geometry.spacing = config.channel.rx_geometry.spacing;

  const ConnectivitySpec* mask =
      config.connectivity ? &*config.connectivity : nullptr;

  std::vector<MetricRecord> records;
  records.reserve(static_cast<std::size_t>(config.trials) * config.methods.size() *
                  config.snr_db_list.size() * config.n_s_list.size());

  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t trial_seed = mix_seed(config.master_seed, trial);
    chan.seed = trial_seed;
    Rng chan_rng(trial_seed);
    const ChannelRealization channel = generate_channel(chan, chan_rng);
    const Eigen::MatrixXcd& h = channel.h;

    for (std::size_t ns_idx = 0; ns_idx < config.n_s_list.size(); ++ns_idx) {
      const int n_s = config.n_s_list[ns_idx];
      for (Method method : config.methods) {
        const std::uint64_t method_seed =
            mix_seed(trial_seed, 100 + static_cast<std::uint64_t>(method) * 16 + ns_idx);
        const ConnectivitySpec* method_mask =
            is_partially_connected(method) ? mask : nullptr;

        auto push = [&](double snr_db, double se, double ms, int iters, int draws) {
          MetricRecord rec;
          rec.method = method;
          rec.snr_db = snr_db;
          rec.n_s = n_s;
          rec.k_t = config.k_t;
          rec.trial = trial;
          rec.seed = trial_seed;
          rec.spectral_efficiency = se;
          rec.runtime_ms = config.collect_timings ? ms : 0.0;
          rec.outer_iters = iters;
          rec.random_draws = draws;
          records.push_back(rec);
        };

        switch (method) {
          case Method::Uop: {
            const auto start = std::chrono::steady_clock::now();
            const HybridPrecoder f_opt = optimal_precoder(h, n_s);
            const double setup_ms = detail::elapsed_ms(start);
            for (double snr_db : config.snr_db_list) {
              const auto eval_start = std::chrono::steady_clock::now();
              const double se = mutual_information(
                  h, f_opt, LinkBudget::from_snr_db(snr_db, n_s));
              push(snr_db, se, setup_ms + detail::elapsed_ms(eval_start), 0, 0);
            }
            break;
          }
          case Method::ShdNm:
          case Method::ShdNmPc: {
            // The acceptance rule tracks the actual mutual information, which
            // depends on rho, so the design is rerun per SNR point.
            for (std::size_t s_idx = 0; s_idx < config.snr_db_list.size(); ++s_idx) {
              const double snr_db = config.snr_db_list[s_idx];
              const LinkBudget budget = LinkBudget::from_snr_db(snr_db, n_s);
              NmConfig nm = config.nm;
              nm.seed = mix_seed(method_seed, s_idx);
              const auto start = std::chrono::steady_clock::now();
              const DesignReport report =
                  design_shd_nm(h, budget, config.k_t, nm, method_mask);
              const double se = mutual_information(h, report.precoder, budget);
              push(snr_db, se, detail::elapsed_ms(start), report.outer_iters,
                   report.random_draws);
            }
            break;
          }
          case Method::ShdQrqu:
          case Method::ShdQrquPc: {
            // The quadratic surrogate does not depend on rho: one design per
            // (trial, n_s), evaluated across the SNR sweep.
            QrquConfig qc = config.qrqu;
            qc.seed = method_seed;
            const auto start = std::chrono::steady_clock::now();
            const DesignReport report = design_shd_qrqu(
                h, LinkBudget::from_snr_db(config.snr_db_list.front(), n_s),
                config.k_t, qc, method_mask);
            const double design_ms = detail::elapsed_ms(start);
            for (std::size_t s_idx = 0; s_idx < config.snr_db_list.size(); ++s_idx) {
              const double snr_db = config.snr_db_list[s_idx];
              const auto eval_start = std::chrono::steady_clock::now();
              const double se = mutual_information(
                  h, report.precoder, LinkBudget::from_snr_db(snr_db, n_s));
              const double ms =
                  (s_idx == 0 ? design_ms : 0.0) + detail::elapsed_ms(eval_start);
              push(snr_db, se, ms, report.outer_iters, report.random_draws);
            }
            break;
          }
        }
      }
    }
  }

  std::sort(records.begin(), records.end(),
            [](const MetricRecord& a, const MetricRecord& b) {
              return std::tie(a.trial, a.method, a.snr_db, a.n_s) <
                     std::tie(b.trial, b.method, b.snr_db, b.n_s);
            });
  return records;
}

/// Per-(method, snr, n_s) mean and standard error of the mean.
inline std::vector<SummaryRow> summarize(const std::vector<MetricRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::map<std::tuple<Method, double, int, int>, std::vector<double>> groups;
  for (const MetricRecord& rec : records)
    groups[{rec.method, rec.snr_db, rec.n_s, rec.k_t}].push_back(
        rec.spectral_efficiency);
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.method = std::get<0>(key);
    row.snr_db = std::get<1>(key);
    row.n_s = std::get<2>(key);
    row.k_t = std::get<3>(key);
    row.trials = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean_se = sum / values.size();
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean_se) * (v - row.mean_se);
      row.stderr_se = std::sqrt(ss / (values.size() - 1)) /
                      std::sqrt(static_cast<double>(values.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string records_csv(const std::vector<MetricRecord>& records) {
  std::ostringstream os;
  os << "method,snr_db,n_s,k_t,trial,seed,spectral_efficiency,runtime_ms,"
        "outer_iters,random_draws\n";
  for (const MetricRecord& r : records) {
    os << method_name(r.method) << ',' << detail::format_g9(r.snr_db) << ','
       << r.n_s << ',' << r.k_t << ',' << r.trial << ',' << r.seed << ','
       << detail::format_g9(r.spectral_efficiency) << ','
       << detail::format_g9(r.runtime_ms) << ',' << r.outer_iters << ','
       << r.random_draws << '\n';
  }
  return os.str();
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "method,snr_db,n_s,k_t,trials,mean_se,stderr_se\n";
  for (const SummaryRow& r : rows) {
    os << method_name(r.method) << ',' << detail::format_g9(r.snr_db) << ','
       << r.n_s << ',' << r.k_t << ',' << r.trials << ','
       << detail::format_g9(r.mean_se) << ',' << detail::format_g9(r.stderr_se)
       << '\n';
  }
  return os.str();
}

inline std::vector<SummaryRow> parse_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open summary file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty summary file " + path);
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    SummaryRow row;
    std::getline(ls, field, ',');
    const auto method = parse_method(field);
    if (!method) throw ConfigError("unknown method in summary: " + field);
    row.method = *method;
    auto next_double = [&]() {
      std::getline(ls, field, ',');
      return std::stod(field);
    };
    row.snr_db = next_double();
    row.n_s = static_cast<int>(next_double());
    row.k_t = static_cast<int>(next_double());
    row.trials = static_cast<int>(next_double());
    row.mean_se = next_double();
    row.stderr_se = next_double();
    rows.push_back(row);
  }
  if (rows.empty()) throw ConfigError("no data rows in summary file " + path);
  return rows;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

}  // namespace detail

inline std::vector<Method> parse_method_list(const std::string& text) {
  return detail::parse_list<Method>(text, [](const std::string& item) {
    const auto m = parse_method(item);
    if (!m) throw ConfigError("unknown method: " + item);
    return *m;
  });
}

inline std::vector<double> parse_double_list(const std::string& text) {
  return detail::parse_list<double>(text,
                                    [](const std::string& s) { return std::stod(s); });
}

inline std::vector<int> parse_int_list(const std::string& text) {
  return detail::parse_list<int>(text,
                                 [](const std::string& s) { return std::stoi(s); });
}

/// `key = value` config file; '#' starts a comment. Unknown keys are errors.
inline void parse_experiment_file(const std::string& path, ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "n_t") config.n_t = std::stoi(value);
      else if (key == "n_r") config.n_r = std::stoi(value);
      else if (key == "k_t") config.k_t = std::stoi(value);
      else if (key == "k_r") config.k_r = std::stoi(value);
      else if (key == "n_clusters") config.channel.n_clusters = std::stoi(value);
      else if (key == "n_rays") config.channel.n_rays = std::stoi(value);
      else if (key == "angle_spread_deg")
        config.channel.angle_spread = std::stod(value) * M_PI / 180.0;
      else if (key == "confine_dod")
        config.channel.confine_dod_to_sector = (value == "1" || value == "true");
      else if (key == "tx_omni") config.channel.tx_geometry.omni = (value == "1" || value == "true");
      else if (key == "trials") config.trials = std::stoi(value);
      else if (key == "seed") config.master_seed = std::stoull(value);
      else if (key == "snr_db") config.snr_db_list = parse_double_list(value);
      else if (key == "n_s") config.n_s_list = parse_int_list(value);
      else if (key == "methods") config.methods = parse_method_list(value);
      else if (key == "connectivity") config.connectivity_path = value;
      else if (key == "out") config.output_path = value;
      else if (key == "timings") config.collect_timings = (value == "1" || value == "true");
      else if (key == "max_outer") config.nm.max_outer = std::stoi(value);
      else if (key == "max_random") config.nm.max_random = std::stoi(value);
      else if (key == "inner_iters") config.qrqu.inner_iters = std::stoi(value);
      else throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": bad value for " + key);
    }
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace switchbeam
