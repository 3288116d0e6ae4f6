#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridtopo/dynamics.hpp"

namespace gridtopo {

/// Preprocessing applied to each series before correlations are estimated.
/// Both options remove the sample mean afterwards. Differencing applies the
/// same LTI filter (1 - z^-1) to every series, which leaves the
/// multivariate Wiener filter unchanged while removing the common-mode
/// random walk of the angles.
enum class Prefilter { None, Difference };

Prefilter parse_prefilter(const std::string& name);
const char* to_string(Prefilter p);

/// Series after the prefilter and mean removal, one row per node.
TimeSeriesPanel::Matrix prepare_series(const TimeSeriesPanel& panel, Prefilter prefilter);

/// Biased cross-correlation estimates
///   R(i, j, l) = (1/T) * sum_n x_i(n + l) x_j(n),   |l| <= max_lag,
/// stored with the exact mirror R(i, j, l) = R(j, i, -l).
class CorrelationTable {
 public:
  CorrelationTable(std::size_t n_nodes, std::size_t max_lag);

  std::size_t n_nodes() const { return n_; }
  std::size_t max_lag() const { return max_lag_; }

  double operator()(std::size_t i, std::size_t j, long lag) const;

  /// Sets R(i, j, lag) and its mirror R(j, i, -lag).
  void set(std::size_t i, std::size_t j, long lag, double value);

 private:
  std::size_t index(std::size_t i, std::size_t j, long lag) const;

  std::size_t n_;
  std::size_t max_lag_;
  std::vector<double> values_;
};

struct CorrelationOptions {
  Prefilter prefilter = Prefilter::Difference;
  unsigned threads = 1;
};

/// Throws Error{Estimation} when max_lag >= T/4 (T after prefiltering).
CorrelationTable estimate_correlations(const TimeSeriesPanel& panel, std::size_t max_lag,
                                       const CorrelationOptions& options = {});

/// Same estimator applied to already prepared rows (no further processing).
CorrelationTable correlations_of(const TimeSeriesPanel::Matrix& series, std::size_t max_lag,
                                 unsigned threads = 1);

struct SolveReport {
  /// Condition estimate: the larger of the LDLT 1-norm estimate and the
  /// spread of the LDLT pivots.
  double condition = 0.0;
  bool ridge_applied = false;
  double ridge = 0.0;
};

struct WienerSolution {
  Eigen::VectorXd taps;
  SolveReport report;
};

/// Condition estimate above which the ridge retry is triggered.
inline constexpr double kRidgeConditionLimit = 1e12;
/// Ridge size relative to trace(R) / dim.
inline constexpr double kRidgeScale = 1e-8;

/// The (2F+1)(N-1) square system R h = S for one target node. Rows are the
/// constraints (i, l) and columns the unknowns (k, p), both ordered by node
/// (skipping the target) and then lag -F..F.
struct WienerSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

WienerSystem assemble_wiener_system(const CorrelationTable& table, std::size_t target,
                                    std::size_t fir_order);

/// Solves the normal equations for `target` with a symmetric LDLT
/// factorisation. If the condition estimate exceeds kRidgeConditionLimit the
/// solve is repeated once with a ridge of kRidgeScale * trace / dim.
WienerSolution solve_wiener(const CorrelationTable& table, std::size_t target,
                            std::size_t fir_order);

/// One multivariate FIR Wiener filter per target node.
class FirWienerBank {
 public:
  FirWienerBank(std::size_t n_nodes, std::size_t fir_order);

  std::size_t n_nodes() const { return n_; }
  std::size_t fir_order() const { return order_; }
  std::size_t taps_per_target() const { return (2 * order_ + 1) * (n_ - 1); }

  const Eigen::VectorXd& taps(std::size_t target) const { return taps_.at(target); }
  const SolveReport& report(std::size_t target) const { return reports_.at(target); }

  /// Coefficients h_{source,-F..F} of the filter estimating `target`.
  std::span<const double> taps(std::size_t target, std::size_t source) const;

  /// l2 norm of the taps from `source` into `target`.
  double norm(std::size_t target, std::size_t source) const;

  void set(std::size_t target, WienerSolution solution);

 private:
  std::size_t offset(std::size_t target, std::size_t source) const;

  std::size_t n_;
  std::size_t order_;
  std::vector<Eigen::VectorXd> taps_;
  std::vector<SolveReport> reports_;
};

struct BankOptions {
  std::size_t fir_order = 20;
  /// 0 selects 2 * fir_order.
  std::size_t max_lag = 0;
  Prefilter prefilter = Prefilter::Difference;
  unsigned threads = 1;
};

/// Estimates correlations and solves the normal equations for every node.
/// Solver failures are rethrown as Error{Estimation} naming the lowest
/// failing node.
FirWienerBank estimate_bank(const TimeSeriesPanel& panel, const BankOptions& options);
FirWienerBank estimate_bank(const CorrelationTable& table, std::size_t fir_order,
                            unsigned threads = 1);

/// theta_hat_target(n) = sum_k sum_p h_{k,p} x_k(n + p) for n in [F, T - F).
Eigen::VectorXd apply_filter(const FirWienerBank& bank, std::size_t target,
                             const TimeSeriesPanel::Matrix& series);

/// Rows `target,source,lag,coefficient` with 1-based node ids.
void write_bank_csv(const FirWienerBank& bank, const std::filesystem::path& file);

}  // namespace gridtopo
