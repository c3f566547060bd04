#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace switchbeam {

/// Uniform planar array in the yz-plane: n_y x n_z elements with the given
/// inter-element spacing in wavelengths. The sector half-widths describe an
/// ideal 0/1 element pattern around boresight (azimuth 0, elevation pi/2);
/// omni disables the gating entirely.
struct ArrayGeometry {
  int n_y = 1;
  int n_z = 1;
  double spacing = 0.5;
  double sector_azimuth_halfwidth = M_PI / 6.0;
  double sector_elevation_halfwidth = M_PI / 12.0;
  bool omni = false;

  int size() const { return n_y * n_z; }
};

/// Array response for direction (azimuth, elevation). Element (m, n),
/// m in [0, n_y), n in [0, n_z), sits at grid index n * n_y + m and has
/// phase 2*pi*spacing * (m sin(az) sin(el) + n cos(el)). Unit 2-norm.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry,
                                        double azimuth, double elevation) {
  const int n = geometry.size();
  const double kd = 2.0 * M_PI * geometry.spacing;
  const double sin_az_sin_el = std::sin(azimuth) * std::sin(elevation);
  const double cos_el = std::cos(elevation);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::VectorXcd a(n);
  for (int nz = 0; nz < geometry.n_z; ++nz) {
    for (int ny = 0; ny < geometry.n_y; ++ny) {
      const double phase = kd * (ny * sin_az_sin_el + nz * cos_el);
      a(nz * geometry.n_y + ny) =
          std::complex<double>(std::cos(phase), std::sin(phase)) * norm;
    }
  }
  return a;
}

/// Ideal sector pattern: unit gain inside the sector, zero outside.
inline double element_gain(const ArrayGeometry& geometry, double azimuth,
                           double elevation) {
  if (geometry.omni) return 1.0;
  const bool in_azimuth = std::abs(azimuth) <= geometry.sector_azimuth_halfwidth;
  const bool in_elevation =
      std::abs(elevation - M_PI / 2.0) <= geometry.sector_elevation_halfwidth;
  return (in_azimuth && in_elevation) ? 1.0 : 0.0;
}

}  // namespace switchbeam
