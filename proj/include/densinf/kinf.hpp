#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "densinf/fiber.hpp"
#include "densinf/polynomial.hpp"
#include "densinf/rng.hpp"

namespace densinf {

/// nu(x) = |x| |grad f(x)|, the Rabier quantity.
struct RabierPair {
  double f_value = 0.0;
  double nu = 0.0;
  Vector x;
};

struct RabierField {
  double r = 0.0;
  std::vector<RabierPair> pairs;
  std::size_t n_refined = 0;  // pairs produced by local refinement
};

struct RabierScanOptions {
  std::size_t resolution = 4096;  // n = 2: angular grid size
  double refine_tol = 1e-13;      // n = 2: golden-section bracket width (rad)
  std::size_t samples = 20000;    // n >= 3: uniform sphere draws
  double refine_fraction = 0.001; // n >= 3: lowest fraction refined by descent
  std::uint64_t seed = 0;
};

/// Samples nu on the sphere of radius r. For n = 2 every local minimum of nu
/// on the angular grid is refined by golden-section search; for n >= 3 the
/// lowest draws are refined by projected gradient descent of nu^2.
RabierField rabier_scan(const DifferentiablePolynomial& f, double r,
                        const RabierScanOptions& opts = {});

struct KinfOptions {
  double f_lo = -0.64;
  double f_hi = 0.64;
  std::size_t bins = 64;
  double slope_threshold = -0.5;
  double abs_threshold = 0.1;
  std::size_t fit_radii = 4;  // slope is fitted on the widest radii
  RabierScanOptions scan;
  CircleScanOptions circle;
};

struct KinfWitness {
  double r = 0.0;
  Vector x;
  double f_value = 0.0;
  double nu = 0.0;
};

struct KinfCandidate {
  double value = 0.0;
  double bin_width = 0.0;
  double decay_slope = 0.0;
  double final_nu = 0.0;
  std::vector<KinfWitness> witnesses;
};

/// Lower envelope of nu per f-bin and radius. min_nu[j][b] is +inf when no
/// point of the sphere r_j has f in bin b.
struct EnvelopeTable {
  std::vector<double> radii;
  std::vector<double> bin_edges;  // bins + 1 entries
  std::vector<std::vector<double>> min_nu;
  std::vector<std::vector<KinfWitness>> argmin;

  double bin_center(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

struct KinfResult {
  std::vector<KinfCandidate> candidates;
  EnvelopeTable envelope;
  std::vector<double> bin_slopes;  // NaN where too few finite values
  double envelope_slope = 0.0;     // slope of the window-wide minimum of nu
};

/// Candidates are maximal runs of adjacent bins whose envelope decays
/// (log-log slope < slope_threshold) and ends below abs_threshold. For n = 2
/// the per-bin minimum is exact up to the grid: interior local minima of nu
/// plus the fiber points on the bin edges (where f hits the bin boundary).
KinfResult detect_kinf(const Polynomial& f, std::span<const double> radii,
                       const KinfOptions& opts = {});

/// Least-squares slope of log y against log x; NaN with fewer than 2 points.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Minimum of nu over f^{-1}(t) on the circle of radius r; +inf when empty.
double fiber_rabier_min(const Polynomial& f, double t, double r,
                        const CircleScanOptions& opts = {});
double fiber_rabier_min(const FiberPointSet& points);

struct SearchBox {
  double lo = -10.0;
  double hi = 10.0;
};

/// Critical points of f (n = 2): Newton on grad f = 0 from a grid x grid
/// lattice of seeds in the box, deduplicated.
std::vector<Vector> critical_points(const Polynomial& f, SearchBox box = {}, std::size_t grid = 41);

/// 1 + max |x| over critical points of f on f^{-1}(t), or 1 when none.
double sigma1(const Polynomial& f, double t, SearchBox box = {}, std::size_t grid = 41,
              double tol = 1e-9);

/// Sampled infimum of nu on f^{-1}(t) over radii >= eps1 (n = 2); +inf when the
/// fiber misses every admissible radius.
double sigma2(const Polynomial& f, double t, double eps1, std::span<const double> radii,
              const CircleScanOptions& opts = {});

/// Dense geometric schedule from eps1 to r_max used for sigma2.
std::vector<double> sigma2_radii(double eps1, double r_max, double ratio = 1.05);

struct SigmaSample {
  double t = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 0.0;
};

/// Piecewise-linear eps1 > sigma1 and eps2 < sigma2 on a t-grid.
struct SigmaEnvelope {
  std::vector<double> t_grid;
  std::vector<double> sigma1;
  std::vector<double> sigma2;
  std::vector<double> eps1_nodes;  // 1.1 sigma1
  std::vector<double> eps2_nodes;  // 0.9 sigma2
  std::vector<double> dropped;     // grid points with non-finite sigma2

  double eps1(double t) const;
  double eps2(double t) const;
};

SigmaEnvelope build_envelopes(std::span<const SigmaSample> samples);

}  // namespace densinf
