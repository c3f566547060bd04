// Command-line front end: single-channel precoder design, Monte-Carlo
// spectral-efficiency sweeps, SVG plots of sweep summaries, and connectivity
// file validation.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "switchbeam/switchbeam.hpp"

namespace {

using namespace switchbeam;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConnectivity = 3;

void write_precoder(const std::string& path, const HybridPrecoder& precoder) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "PRECODER1 " << precoder.f_rf.rows() << ' ' << precoder.f_rf.cols()
      << ' ' << precoder.f_bb.cols() << '\n';
  for (Eigen::Index i = 0; i < precoder.f_rf.rows(); ++i) {
    for (Eigen::Index j = 0; j < precoder.f_rf.cols(); ++j) {
      if (j) out << ' ';
      out << static_cast<int>(precoder.f_rf(i, j));
    }
    out << '\n';
  }
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < precoder.f_bb.rows(); ++i) {
    for (Eigen::Index j = 0; j < precoder.f_bb.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g", precoder.f_bb(i, j).real(),
                    precoder.f_bb(i, j).imag());
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

struct DesignArgs {
  int n_t = 64, n_r = 16, k_t = 4, n_s = 2;
  double snr_db = 0.0;
  std::string method = "SHD-NM";
  std::uint64_t seed = 1;
  int clusters = 8, rays = 10;
  double spread_deg = 7.5;
  bool tx_omni = false;
  bool unconfined_dod = false;
  std::string connectivity_path, out_path, channel_path, dump_channel_path, trace_path;
  int max_outer = 1000, max_random = 1000, inner_iters = 20;
};

// Long-format CSV serialization of a design report's traces.
void write_trace(const std::string& path, const DesignReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "series,index,value\n";
  char buf[40];
  auto emit = [&](const std::string& series, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", values[i]);
      out << series << ',' << i << ',' << buf << '\n';
    }
  };
  emit("mi", report.mi_trace);
  emit("surrogate", report.surrogate_trace);
  for (std::size_t c = 0; c < report.column_objective_traces.size(); ++c)
    emit("column" + std::to_string(c), report.column_objective_traces[c]);
}

int run_design(const DesignArgs& args) {
  const auto method = parse_method(args.method);
  if (!method) {
    std::cerr << "unknown method: " << args.method << "\n";
    return kExitConfig;
  }

  std::optional<ConnectivitySpec> spec;
  if (!args.connectivity_path.empty()) {
    spec = load_connectivity(args.connectivity_path);
    const auto violations = validate(*spec);
    if (!violations.empty()) {
      for (const auto& v : violations) std::cerr << "connectivity: " << v.describe() << "\n";
      return kExitConnectivity;
    }
  }
  if (is_partially_connected(*method) && !spec) {
    std::cerr << "method " << args.method << " needs --connectivity\n";
    return kExitConfig;
  }

  Eigen::MatrixXcd h;
  std::uint64_t channel_seed = args.seed;
  if (!args.channel_path.empty()) {
    const ChannelDump dump = load_channel(args.channel_path);
    h = dump.h;
    channel_seed = dump.seed;
    std::cout << "channel: " << args.channel_path << " (" << dump.n_r << "x"
              << dump.n_t << ", seed " << dump.seed << ")\n";
  } else {
    ChannelConfig cc;
    cc.n_clusters = args.clusters;
    cc.n_rays = args.rays;
    cc.angle_spread = args.spread_deg * M_PI / 180.0;
    cc.tx_geometry = make_upa(args.n_t, args.tx_omni);
    cc.rx_geometry = make_upa(args.n_r, true);
    cc.confine_dod_to_sector = !args.unconfined_dod;
    cc.seed = args.seed;
    Rng rng(cc.seed);
    const ChannelRealization chan = generate_channel(cc, rng);
    h = chan.h;
    if (!args.dump_channel_path.empty()) {
      save_channel(args.dump_channel_path, chan);
      std::cout << "channel dump written to " << args.dump_channel_path << "\n";
    }
  }
  if (h.cols() != args.n_t || h.rows() != args.n_r) {
    std::cerr << "channel dimensions " << h.rows() << "x" << h.cols()
              << " do not match --nr/--nt\n";
    return kExitConfig;
  }

  const LinkBudget budget = LinkBudget::from_snr_db(args.snr_db, args.n_s);
  const ConnectivitySpec* mask =
      is_partially_connected(*method) ? &*spec : nullptr;
  if (mask) {
    const Eigen::MatrixXcd h1 = truncated_channel(h, args.n_s);
    if (!mask_feasible(h1, *mask, args.n_s)) {
      std::cerr << "connectivity: mask cannot reach rank " << args.n_s << "\n";
      return kExitConnectivity;
    }
  }

  HybridPrecoder precoder;
  DesignReport report;
  switch (*method) {
    case Method::Uop:
      precoder = optimal_precoder(h, args.n_s);
      break;
    case Method::ShdNm:
    case Method::ShdNmPc: {
      NmConfig cfg;
      cfg.max_outer = args.max_outer;
      cfg.max_random = args.max_random;
      cfg.seed = mix_seed(channel_seed, 1);
      report = design_shd_nm(h, budget, args.k_t, cfg, mask);
      precoder = report.precoder;
      break;
    }
    case Method::ShdQrqu:
    case Method::ShdQrquPc: {
      QrquConfig cfg;
      cfg.inner_iters = args.inner_iters;
      cfg.seed = mix_seed(channel_seed, 2);
      report = design_shd_qrqu(h, budget, args.k_t, cfg, mask);
      precoder = report.precoder;
      break;
    }
  }

  const double se = mutual_information(h, precoder, budget);
  const double uop = mutual_information(h, optimal_precoder(h, args.n_s), budget);
  std::cout << "method                : " << args.method << "\n"
            << "snr                   : " << args.snr_db << " dB\n"
            << "spectral efficiency   : " << se << " bits/s/Hz\n"
            << "unconstrained optimum : " << uop << " bits/s/Hz\n";
  if (*method != Method::Uop) {
    std::cout << "iterations            : " << report.outer_iters << "\n"
              << "random draws          : " << report.random_draws << "\n"
              << "converged             : " << (report.converged ? "yes" : "no") << "\n";
  }
  if (!args.out_path.empty()) {
    write_precoder(args.out_path, precoder);
    std::cout << "precoder written to " << args.out_path << "\n";
  }
  if (!args.trace_path.empty() && *method != Method::Uop) {
    write_trace(args.trace_path, report);
    std::cout << "trace written to " << args.trace_path << "\n";
  }
  return kExitOk;
}

void print_summary_table(const std::vector<SummaryRow>& rows) {
  std::printf("%-12s %8s %4s %4s %7s %12s %12s\n", "method", "snr_db", "n_s",
              "k_t", "trials", "mean_se", "stderr");
  for (const SummaryRow& r : rows)
    std::printf("%-12s %8.2f %4d %4d %7d %12.6f %12.6f\n", method_name(r.method),
                r.snr_db, r.n_s, r.k_t, r.trials, r.mean_se, r.stderr_se);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switch-based hybrid precoder design and evaluation"};
  app.require_subcommand(1);

  // design
  DesignArgs d;
  CLI::App* design = app.add_subcommand("design", "Design a precoder for one channel");
  design->add_option("--nt", d.n_t, "Transmit antennas");
  design->add_option("--nr", d.n_r, "Receive antennas");
  design->add_option("--kt", d.k_t, "Transmit RF chains");
  design->add_option("--ns", d.n_s, "Data streams");
  design->add_option("--snr", d.snr_db, "SNR in dB");
  design->add_option("--method", d.method, "UOP, SHD-NM, SHD-QRQU, SHD-NM-PC, SHD-QRQU-PC");
  design->add_option("--seed", d.seed, "Channel seed");
  design->add_option("--clusters", d.clusters, "Scattering clusters");
  design->add_option("--rays", d.rays, "Rays per cluster");
  design->add_option("--spread-deg", d.spread_deg, "Laplacian angle spread, degrees");
  design->add_flag("--tx-omni", d.tx_omni, "Omnidirectional transmit elements");
  design->add_flag("--unconfined-dod", d.unconfined_dod,
                   "Draw cluster departure means over the sphere instead of the sector");
  design->add_option("--connectivity", d.connectivity_path, "Connectivity spec file");
  design->add_option("--out", d.out_path, "Write the designed precoder here");
  design->add_option("--channel", d.channel_path, "Load a dumped channel instead of generating");
  design->add_option("--dump-channel", d.dump_channel_path, "Dump the generated channel");
  design->add_option("--trace", d.trace_path, "Write the design traces as CSV");
  design->add_option("--max-outer", d.max_outer, "L: accepted-step budget (SHD-NM)");
  design->add_option("--max-random", d.max_random, "I: randomized-retry budget (SHD-NM)");
  design->add_option("--inner-iters", d.inner_iters, "Per-column iterations (SHD-QRQU)");

  // sweep
  ExperimentConfig sweep_cfg;
  std::string sweep_config_path, sweep_snr, sweep_ns, sweep_methods, sweep_summary;
  std::string sweep_connectivity, sweep_out;
  std::uint64_t sweep_seed = 0;
  int sweep_trials = 0;
  double spread_deg_sweep = -1.0;
  bool sweep_timings = false, sweep_tx_omni = false, sweep_unconfined = false;
  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo spectral-efficiency sweep");
  sweep->add_option("--config", sweep_config_path, "Config file (key = value lines)");
  sweep->add_option("--seed", sweep_seed, "Master seed");
  sweep->add_option("--trials", sweep_trials, "Channel realizations");
  sweep->add_option("--snr", sweep_snr, "Comma-separated SNR list, dB");
  sweep->add_option("--ns", sweep_ns, "Comma-separated stream counts");
  sweep->add_option("--methods", sweep_methods, "Comma-separated method list");
  sweep->add_option("--connectivity", sweep_connectivity, "Connectivity spec file");
  sweep->add_option("--out", sweep_out, "Records CSV path");
  sweep->add_option("--summary", sweep_summary, "Also write a summary CSV here");
  sweep->add_option("--nt", sweep_cfg.n_t, "Transmit antennas");
  sweep->add_option("--nr", sweep_cfg.n_r, "Receive antennas");
  sweep->add_option("--kt", sweep_cfg.k_t, "Transmit RF chains");
  sweep->add_option("--clusters", sweep_cfg.channel.n_clusters, "Scattering clusters");
  sweep->add_option("--rays", sweep_cfg.channel.n_rays, "Rays per cluster");
  sweep->add_option("--spread-deg", spread_deg_sweep, "Laplacian angle spread, degrees");
  sweep->add_flag("--tx-omni", sweep_tx_omni, "Omnidirectional transmit elements");
  sweep->add_flag("--unconfined-dod", sweep_unconfined,
                  "Draw cluster departure means over the sphere instead of the sector");
  sweep->add_flag("--timings", sweep_timings,
                  "Record wall-clock runtimes in the CSV (breaks byte determinism)");

  // plot
  std::string plot_in, plot_out, plot_x = "auto";
  CLI::App* plot = app.add_subcommand("plot", "Render a summary CSV as SVG");
  plot->add_option("--in", plot_in, "Summary CSV")->required();
  plot->add_option("--out", plot_out, "Output SVG path")->required();
  plot->add_option("--x", plot_x, "x axis: auto, snr, or ns");

  // validate-spec
  std::string vs_in;
  CLI::App* vspec = app.add_subcommand("validate-spec", "Check a connectivity file");
  vspec->add_option("--in", vs_in, "Connectivity spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (design->parsed()) return run_design(d);

    if (sweep->parsed()) {
      if (!sweep_config_path.empty()) parse_experiment_file(sweep_config_path, sweep_cfg);
      if (sweep_seed) sweep_cfg.master_seed = sweep_seed;
      if (sweep_trials) sweep_cfg.trials = sweep_trials;
      if (!sweep_snr.empty()) sweep_cfg.snr_db_list = parse_double_list(sweep_snr);
      if (!sweep_ns.empty()) sweep_cfg.n_s_list = parse_int_list(sweep_ns);
      if (!sweep_methods.empty()) sweep_cfg.methods = parse_method_list(sweep_methods);
      if (!sweep_connectivity.empty()) sweep_cfg.connectivity_path = sweep_connectivity;
      if (!sweep_out.empty()) sweep_cfg.output_path = sweep_out;
      if (spread_deg_sweep >= 0.0) sweep_cfg.channel.angle_spread = spread_deg_sweep * M_PI / 180.0;
      if (sweep_tx_omni) sweep_cfg.channel.tx_geometry.omni = true;
      if (sweep_unconfined) sweep_cfg.channel.confine_dod_to_sector = false;
      if (sweep_timings) sweep_cfg.collect_timings = true;
      if (!sweep_cfg.connectivity_path.empty())
        sweep_cfg.connectivity = load_connectivity(sweep_cfg.connectivity_path);

      const auto records = run_sweep(sweep_cfg);
      write_text_file(sweep_cfg.output_path, records_csv(records));
      std::cout << "wrote " << records.size() << " records to "
                << sweep_cfg.output_path << "\n";
      const auto summary = summarize(records);
      print_summary_table(summary);
      if (!sweep_summary.empty()) {
        write_text_file(sweep_summary, summary_csv(summary));
        std::cout << "summary written to " << sweep_summary << "\n";
      }
      return kExitOk;
    }

    if (plot->parsed()) {
      PlotX mode = PlotX::Auto;
      if (plot_x == "snr") mode = PlotX::SnrDb;
      else if (plot_x == "ns") mode = PlotX::NStreams;
      else if (plot_x != "auto") throw ConfigError("--x must be auto, snr, or ns");
      emit_plot(parse_summary_csv(plot_in), plot_out, mode);
      std::cout << "plot written to " << plot_out << "\n";
      return kExitOk;
    }

    if (vspec->parsed()) {
      const ConnectivitySpec spec = load_connectivity(vs_in);
      const auto violations = validate(spec);
      if (violations.empty()) {
        std::cout << "ok: N_t=" << spec.n_t() << " k_t=" << spec.k_t()
                  << " s_t=" << spec.splitter_outputs
                  << " c_t=" << spec.combiner_inputs
                  << " connections=" << spec.total_connections() << "\n";
        return kExitOk;
      }
      for (const auto& v : violations) std::cout << "violation: " << v.describe() << "\n";
      return kExitConnectivity;
    }
  } catch (const ConnectivityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConnectivity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
