#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switchbeam/array.hpp"
#include "switchbeam/rng.hpp"

namespace switchbeam {

/// Clustered channel: n_clusters scattering clusters of n_rays paths each.
/// Ray angles scatter around the cluster mean with a Laplacian of the given
/// scale (radians). With confine_dod_to_sector the cluster departure means
/// are drawn inside the transmit sector; otherwise they are drawn over the
/// full sphere and only gated by the element pattern.
struct ChannelConfig {
  int n_clusters = 8;
  int n_rays = 10;
  double angle_spread = 7.5 * M_PI / 180.0;
  ArrayGeometry tx_geometry;
  ArrayGeometry rx_geometry;
  std::uint64_t seed = 0;
  bool confine_dod_to_sector = true;
};

struct RayAngles {
  int cluster = 0;
  int ray = 0;
  double dod_azimuth = 0.0;
  double dod_elevation = 0.0;
  double doa_azimuth = 0.0;
  double doa_elevation = 0.0;
};

struct RayPath {
  int cluster = 0;
  int ray = 0;
  std::complex<double> gain;
  double dod_azimuth = 0.0;
  double dod_elevation = 0.0;
  double doa_azimuth = 0.0;
  double doa_elevation = 0.0;
};

/// One channel draw: the matrix plus the per-ray parameters that generated
/// it, so the matrix can be rebuilt from the rays.
struct ChannelRealization {
  Eigen::MatrixXcd h;
  std::vector<RayPath> rays;
  ArrayGeometry tx_geometry;
  ArrayGeometry rx_geometry;
  std::uint64_t seed = 0;
};

inline double wrap_azimuth(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline double clamp_elevation(double e) {
  if (e < 0.0) return 0.0;
  if (e > M_PI) return M_PI;
  return e;
}

namespace detail {

// Mean direction uniform in solid angle.
inline void sphere_uniform(Rng& rng, double& azimuth, double& elevation) {
  azimuth = rng.uniform(-M_PI, M_PI);
  elevation = std::acos(1.0 - 2.0 * rng.uniform());
}

inline void cluster_mean_dod(const ChannelConfig& config, Rng& rng,
                             double& azimuth, double& elevation) {
  const ArrayGeometry& tx = config.tx_geometry;
  if (!config.confine_dod_to_sector || tx.omni) {
    sphere_uniform(rng, azimuth, elevation);
    return;
  }
  azimuth = rng.uniform(-tx.sector_azimuth_halfwidth, tx.sector_azimuth_halfwidth);
  elevation = rng.uniform(M_PI / 2.0 - tx.sector_elevation_halfwidth,
                          M_PI / 2.0 + tx.sector_elevation_halfwidth);
}

}  // namespace detail

/// Draws cluster means (DoD inside the transmit sector by default, DoA over
/// the sphere) and per-ray Laplacian offsets around them. Azimuths wrap
/// modulo 2*pi, elevations clamp to [0, pi].
inline std::vector<RayAngles> sample_ray_angles(const ChannelConfig& config,
                                                Rng& rng) {
  if (config.n_clusters < 1 || config.n_rays < 1)
    throw std::invalid_argument("sample_ray_angles: cluster and ray counts must be >= 1");
  std::vector<RayAngles> angles;
  angles.reserve(static_cast<std::size_t>(config.n_clusters) * config.n_rays);
  for (int c = 0; c < config.n_clusters; ++c) {
    double dod_az, dod_el, doa_az, doa_el;
    detail::cluster_mean_dod(config, rng, dod_az, dod_el);
    detail::sphere_uniform(rng, doa_az, doa_el);
    for (int r = 0; r < config.n_rays; ++r) {
      RayAngles ray;
      ray.cluster = c;
      ray.ray = r;
      ray.dod_azimuth = wrap_azimuth(dod_az + rng.laplace(config.angle_spread));
      ray.dod_elevation = clamp_elevation(dod_el + rng.laplace(config.angle_spread));
      ray.doa_azimuth = wrap_azimuth(doa_az + rng.laplace(config.angle_spread));
      ray.doa_elevation = clamp_elevation(doa_el + rng.laplace(config.angle_spread));
      angles.push_back(ray);
    }
  }
  return angles;
}

/// H = gamma * sum_{i,l} alpha_il Lambda_r Lambda_t a_r a_t^H with
/// gamma = sqrt(N_t N_r / (N_cl N_ray)) and alpha_il ~ CN(0, 1), so that
/// E||H||_F^2 = N_t * N_r under omni patterns.
inline ChannelRealization generate_channel(const ChannelConfig& config,
                                           Rng& rng) {
  const std::vector<RayAngles> angles = sample_ray_angles(config, rng);
  const int n_t = config.tx_geometry.size();
  const int n_r = config.rx_geometry.size();
  const double gamma = std::sqrt(static_cast<double>(n_t) * n_r /
                                 (static_cast<double>(config.n_clusters) * config.n_rays));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  ChannelRealization out;
  out.tx_geometry = config.tx_geometry;
  out.rx_geometry = config.rx_geometry;
  out.seed = config.seed;
  out.h = Eigen::MatrixXcd::Zero(n_r, n_t);
  out.rays.reserve(angles.size());
  for (const RayAngles& a : angles) {
    RayPath ray;
    ray.cluster = a.cluster;
    ray.ray = a.ray;
    ray.dod_azimuth = a.dod_azimuth;
    ray.dod_elevation = a.dod_elevation;
    ray.doa_azimuth = a.doa_azimuth;
    ray.doa_elevation = a.doa_elevation;
    ray.gain = std::complex<double>(rng.normal(), rng.normal()) * inv_sqrt2;
    out.rays.push_back(ray);

    const double lambda =
        element_gain(config.rx_geometry, a.doa_azimuth, a.doa_elevation) *
        element_gain(config.tx_geometry, a.dod_azimuth, a.dod_elevation);
    if (lambda == 0.0) continue;
    const Eigen::VectorXcd a_r =
        steering_vector(config.rx_geometry, a.doa_azimuth, a.doa_elevation);
    const Eigen::VectorXcd a_t =
        steering_vector(config.tx_geometry, a.dod_azimuth, a.dod_elevation);
    out.h.noalias() += (gamma * lambda * ray.gain) * a_r * a_t.adjoint();
  }
  return out;
}

/// Rebuilds the matrix from the stored rays; matches the stored h up to
/// floating-point accumulation order.
inline Eigen::MatrixXcd reconstruct_channel(const ChannelRealization& real) {
  const int n_t = real.tx_geometry.size();
  const int n_r = real.rx_geometry.size();
  const double gamma =
      std::sqrt(static_cast<double>(n_t) * n_r / static_cast<double>(real.rays.size()));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_r, n_t);
  for (const RayPath& ray : real.rays) {
    const double lambda =
        element_gain(real.rx_geometry, ray.doa_azimuth, ray.doa_elevation) *
        element_gain(real.tx_geometry, ray.dod_azimuth, ray.dod_elevation);
    if (lambda == 0.0) continue;
    const Eigen::VectorXcd a_r =
        steering_vector(real.rx_geometry, ray.doa_azimuth, ray.doa_elevation);
    const Eigen::VectorXcd a_t =
        steering_vector(real.tx_geometry, ray.dod_azimuth, ray.dod_elevation);
    h.noalias() += (gamma * lambda * ray.gain) * a_r * a_t.adjoint();
  }
  return h;
}

/// Loaded form of the on-disk dump (rays are not stored in the file).
struct ChannelDump {
  int n_r = 0;
  int n_t = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXcd h;
};

/// Writes `MMWCH1 N_r N_t seed\n` followed by the row-major entries as
/// interleaved real/imag 64-bit floats (native byte order).
inline void save_channel(const std::string& path, const ChannelRealization& real) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_channel: cannot open " + path);
  out << "MMWCH1 " << real.h.rows() << ' ' << real.h.cols() << ' ' << real.seed
      << '\n';
  for (Eigen::Index r = 0; r < real.h.rows(); ++r) {
    for (Eigen::Index c = 0; c < real.h.cols(); ++c) {
      const double buf[2] = {real.h(r, c).real(), real.h(r, c).imag()};
      out.write(reinterpret_cast<const char*>(buf), sizeof(buf));
    }
  }
  if (!out) throw std::runtime_error("save_channel: write failed for " + path);
}

inline ChannelDump load_channel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_channel: cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  ChannelDump dump;
  hs >> magic >> dump.n_r >> dump.n_t >> dump.seed;
  if (!hs || magic != "MMWCH1" || dump.n_r <= 0 || dump.n_t <= 0)
    throw std::runtime_error("load_channel: bad header in " + path);
  dump.h.resize(dump.n_r, dump.n_t);
  for (int r = 0; r < dump.n_r; ++r) {
    for (int c = 0; c < dump.n_t; ++c) {
      double buf[2];
      in.read(reinterpret_cast<char*>(buf), sizeof(buf));
      if (!in) throw std::runtime_error("load_channel: truncated payload in " + path);
      dump.h(r, c) = std::complex<double>(buf[0], buf[1]);
    }
  }
  return dump;
}

}  // namespace switchbeam
