#ifndef CARLEMAN_LAB_PRESETS_HPP
#define CARLEMAN_LAB_PRESETS_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

/// Named analytic spatial function with a coefficient list.
///   "sine_series": offset + sum_k c_k prod_axes sin(k pi xi_axis)
///   "constant":    offset
/// where xi_axis in [0, 1] is the normalized coordinate along each axis.
struct SpatialPreset {
  std::string kind = "sine_series";
  double offset = 0.0;
  std::vector<double> coeffs;

  bool operator==(const SpatialPreset&) const = default;
};

inline bool is_known_preset(const std::string& kind) { return kind == "sine_series" || kind == "constant"; }

inline double evaluate(const SpatialPreset& p, const Point& x, const DomainSpec& d) {
  if (!is_known_preset(p.kind)) {
    throw Error(ErrorKind::invalid_argument, "preset.kind", "unknown preset '" + p.kind + "'");
  }
  double v = p.offset;
  if (p.kind == "constant") return v;
  for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
    double term = p.coeffs[k];
    for (int a = 0; a < d.dimension; ++a) {
      const double xi = (x[a] - d.lower[a]) / d.length(a);
      term *= std::sin(static_cast<double>(k + 1) * std::numbers::pi * xi);
    }
    v += term;
  }
  return v;
}

/// Exact L2(Omega) norm of a preset, from the orthogonality of the sine modes.
inline double l2_norm(const SpatialPreset& p, const DomainSpec& d) {
  if (!is_known_preset(p.kind)) {
    throw Error(ErrorKind::invalid_argument, "preset.kind", "unknown preset '" + p.kind + "'");
  }
  double volume = 1.0;
  for (int a = 0; a < d.dimension; ++a) volume *= d.length(a);
  double acc = p.offset * p.offset * volume;
  if (p.kind == "sine_series") {
    for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
      const double m = static_cast<double>(k + 1);
      const double mean = (1.0 - std::cos(m * std::numbers::pi)) / (m * std::numbers::pi);
      acc += p.coeffs[k] * p.coeffs[k] * volume * std::pow(0.5, d.dimension);
      acc += 2.0 * p.offset * p.coeffs[k] * volume * std::pow(mean, d.dimension);
    }
  }
  return std::sqrt(acc);
}

inline SpatialField sample(const SpatialPreset& p, const Grid& g) {
  return sample_spatial(g, [&](const Point& x) { return evaluate(p, x, g.domain); });
}

/// Seeded generator with a portable mapping to [a, b).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double a, double b) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_PRESETS_HPP
