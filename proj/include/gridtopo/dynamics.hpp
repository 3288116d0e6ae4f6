#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gridtopo/grid.hpp"

namespace gridtopo {

enum class NoiseKind { WhiteGaussian, Ar1Gaussian };

/// Ambient disturbance p_j(n): zero mean, wide-sense stationary, and
/// uncorrelated across nodes. `psd_level` is the stationary per-sample
/// variance (the linear value of a flat spectral density).
struct NoiseModel {
  NoiseKind kind = NoiseKind::WhiteGaussian;
  double psd_level = 10.0;
  double ar_coefficient = 0.0;  // AR(1) only, |a| < 1
  std::uint64_t seed = 0;
};

/// Sequential disturbance samples for one node. Innovations are addressed
/// by (seed, node, n), so streams for different nodes are independent and
/// the values do not depend on evaluation order.
class NoiseStream {
 public:
  NoiseStream(const NoiseModel& model, std::size_t node);

  /// Returns p(n) for the next n = 0, 1, 2, ...
  double next();

 private:
  NoiseModel model_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double state_ = 0.0;
  double innovation_scale_ = 0.0;
};

/// p_node(n) for the given model. O(n) for the AR(1) kind.
double draw_noise(const NoiseModel& model, std::size_t node, std::uint64_t n);

/// N x T panel of phase-angle deviations. Row j is node j; rows are stored
/// contiguously.
struct TimeSeriesPanel {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  double ts = 0.01;
  Matrix data;

  std::size_t n_nodes() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(data.cols()); }

  /// Throws Error{Validation} on empty or non-finite data or ts <= 0.
  void validate() const;
};

struct StabilityReport {
  bool stable = false;
  /// Largest |eigenvalue| of the one-step companion matrix after removing
  /// the rotational mode at z = 1.
  double spectral_radius = 0.0;
  /// Largest |eigenvalue| including the rotational mode (always 1 for a
  /// connected grid).
  double full_radius = 0.0;
  /// Distance of the removed eigenvalue from 1.
  double rotational_mode_offset = 0.0;
};

/// Stability margin used by stability_check: radius < 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;

/// Builds the 2N x 2N companion matrix of the discrete swing recursion on
/// state [theta(n+1); theta(n)].
Eigen::MatrixXd companion_matrix(const Eigen::VectorXd& inertia,
                                 const Eigen::VectorXd& damping,
                                 const Eigen::MatrixXd& laplacian, double ts);

/// The angle recursion always has one eigenvalue at z = 1 (adding a constant
/// to every angle is a fixed point). That eigenvalue is set aside and the
/// remaining spectrum must lie strictly inside the unit circle.
StabilityReport stability_check(const Eigen::VectorXd& inertia,
                                const Eigen::VectorXd& damping,
                                const Eigen::MatrixXd& laplacian, double ts);
StabilityReport stability_check(const GridGraph& g, double ts);

struct SimulationOptions {
  double ts = 0.01;
  std::size_t n_samples = 0;
  std::size_t burn_in = 10000;
  /// Any |theta| above this aborts with Error{Overflow}.
  double magnitude_cap = 1e9;
};

/// Simulates theta_j(n+2) = 2 theta_j(n+1) - theta_j(n)
///   - (D_j ts / M_j)(theta_j(n+1) - theta_j(n))
///   + (ts^2 / M_j)[sum_i b_ij theta_i(n) - B_j theta_j(n) + p_j(n)]
/// from rest, and returns samples burn_in .. burn_in + n_samples - 1.
/// Throws Error{Instability} when stability_check fails.
TimeSeriesPanel simulate(const GridGraph& g, const NoiseModel& noise,
                         const SimulationOptions& options);

/// Same recursion driven by an explicit disturbance p(node, n). Performs the
/// stability check unless `check_stability` is false.
TimeSeriesPanel simulate_with_input(
    const GridGraph& g, const std::function<double(std::size_t, std::size_t)>& input,
    const SimulationOptions& options, bool check_stability = true);

/// GRIDTS01 binary format: magic, u32 N, u64 T, f64 ts, then N*T f64 in
/// node-major order, all little-endian.
void write_panel(const TimeSeriesPanel& panel, const std::filesystem::path& file);
TimeSeriesPanel read_panel(const std::filesystem::path& file);

/// CSV format: header `n,theta_1,...,theta_N`, one row per sample.
void write_panel_csv(const TimeSeriesPanel& panel, const std::filesystem::path& file);
TimeSeriesPanel read_panel_csv(const std::filesystem::path& file, double ts);

}  // namespace gridtopo
