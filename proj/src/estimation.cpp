#include "gridtopo/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "csv.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/parallel.hpp"

namespace gridtopo {

Prefilter parse_prefilter(const std::string& name) {
  if (name == "none") return Prefilter::None;
  if (name == "difference") return Prefilter::Difference;
  throw Error(ErrorKind::Config, "unknown prefilter '" + name + "'");
}

const char* to_string(Prefilter p) {
  return p == Prefilter::None ? "none" : "difference";
}

TimeSeriesPanel::Matrix prepare_series(const TimeSeriesPanel& panel, Prefilter prefilter) {
  panel.validate();
  TimeSeriesPanel::Matrix out;
  if (prefilter == Prefilter::Difference) {
    if (panel.n_samples() < 2)
      throw Error(ErrorKind::Estimation, "differencing needs at least 2 samples");
    const auto t = panel.data.cols() - 1;
    out = panel.data.rightCols(t) - panel.data.leftCols(t);
  } else {
    out = panel.data;
  }
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    const double mean = out.row(j).mean();
    out.row(j).array() -= mean;
  }
  return out;
}

CorrelationTable::CorrelationTable(std::size_t n_nodes, std::size_t max_lag)
    : n_(n_nodes), max_lag_(max_lag), values_(n_nodes * n_nodes * (2 * max_lag + 1), 0.0) {}

std::size_t CorrelationTable::index(std::size_t i, std::size_t j, long lag) const {
  if (i >= n_ || j >= n_ || std::labs(lag) > static_cast<long>(max_lag_))
    throw Error(ErrorKind::Estimation, "correlation index out of range");
  return (i * n_ + j) * (2 * max_lag_ + 1) +
         static_cast<std::size_t>(lag + static_cast<long>(max_lag_));
}

double CorrelationTable::operator()(std::size_t i, std::size_t j, long lag) const {
  return values_[index(i, j, lag)];
}

void CorrelationTable::set(std::size_t i, std::size_t j, long lag, double value) {
  values_[index(i, j, lag)] = value;
  values_[index(j, i, -lag)] = value;
}

CorrelationTable correlations_of(const TimeSeriesPanel::Matrix& series, std::size_t max_lag,
                                 unsigned threads) {
  const auto n = static_cast<std::size_t>(series.rows());
  const auto t = static_cast<long>(series.cols());
  if (t == 0 || static_cast<long>(max_lag) * 4 >= t)
    throw Error(ErrorKind::Estimation,
                "max_lag " + std::to_string(max_lag) + " must be < T/4 (T=" +
                    std::to_string(t) + ")");
  CorrelationTable table(n, max_lag);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);

  const long lmax = static_cast<long>(max_lag);
  const double inv_t = 1.0 / static_cast<double>(t);
  // Each task writes only its own (i, j) block and the mirror (j, i).
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const auto xi = series.row(static_cast<Eigen::Index>(i));
    const auto xj = series.row(static_cast<Eigen::Index>(j));
    for (long lag = i == j ? 0 : -lmax; lag <= lmax; ++lag) {
      // sum over n with 0 <= n < T and 0 <= n + lag < T
      const long start = std::max(0L, -lag);
      const long len = t - std::labs(lag);
      const double s = xi.segment(start + lag, len).dot(xj.segment(start, len));
      table.set(i, j, lag, s * inv_t);
    }
  });
  return table;
}

CorrelationTable estimate_correlations(const TimeSeriesPanel& panel, std::size_t max_lag,
                                       const CorrelationOptions& options) {
  return correlations_of(prepare_series(panel, options.prefilter), max_lag, options.threads);
}

WienerSystem assemble_wiener_system(const CorrelationTable& table, std::size_t target,
                                    std::size_t fir_order) {
  const auto n = table.n_nodes();
  if (n < 2) throw Error(ErrorKind::Estimation, "Wiener filtering needs N >= 2");
  if (target >= n) throw Error(ErrorKind::Estimation, "target node out of range");
  if (table.max_lag() < 2 * fir_order)
    throw Error(ErrorKind::Estimation, "correlation table max_lag " +
                                           std::to_string(table.max_lag()) +
                                           " < 2F = " + std::to_string(2 * fir_order));
  const long f = static_cast<long>(fir_order);
  const auto width = static_cast<Eigen::Index>(2 * fir_order + 1);
  const auto dim = width * static_cast<Eigen::Index>(n - 1);

  WienerSystem sys{Eigen::MatrixXd(dim, dim), Eigen::VectorXd(dim)};
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == target) continue;
    for (long l = -f; l <= f; ++l, ++row) {
      Eigen::Index col = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == target) continue;
        for (long p = -f; p <= f; ++p, ++col) sys.matrix(row, col) = table(k, i, p - l);
      }
      sys.rhs(row) = table(target, i, -l);
    }
  }
  return sys;
}

namespace {

struct Attempt {
  Eigen::VectorXd x;
  double condition = 0.0;
  bool ok = false;
};

Attempt ldlt_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Attempt out;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return out;
  // rcond() alone misses exact singularity: the LDLT solve zeroes tiny
  // pivots, which keeps the inverse estimate bounded. The pivot spread is a
  // lower bound on the condition number and catches that case.
  const double rcond = ldlt.rcond();
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const double spread = pivots.minCoeff() > 0.0 ? pivots.maxCoeff() / pivots.minCoeff()
                                                : std::numeric_limits<double>::infinity();
  out.condition = rcond > 0.0 ? std::max(1.0 / rcond, spread)
                              : std::numeric_limits<double>::infinity();
  out.x = ldlt.solve(b);
  out.ok = std::isfinite(out.condition) && out.x.allFinite();
  return out;
}

}  // namespace

WienerSolution solve_wiener(const CorrelationTable& table, std::size_t target,
                            std::size_t fir_order) {
  auto sys = assemble_wiener_system(table, target, fir_order);
  auto first = ldlt_solve(sys.matrix, sys.rhs);
  if (first.ok && first.condition <= kRidgeConditionLimit)
    return {std::move(first.x), {first.condition, false, 0.0}};

  const auto dim = static_cast<double>(sys.matrix.rows());
  const double ridge = kRidgeScale * sys.matrix.trace() / dim;
  sys.matrix.diagonal().array() += ridge;
  auto second = ldlt_solve(sys.matrix, sys.rhs);
  if (!second.ok || !(ridge > 0.0))
    throw Error(ErrorKind::Estimation,
                "singular Wiener system for node " + std::to_string(target + 1) +
                    " after ridge retry");
  return {std::move(second.x), {second.condition, true, ridge}};
}

FirWienerBank::FirWienerBank(std::size_t n_nodes, std::size_t fir_order)
    : n_(n_nodes), order_(fir_order), taps_(n_nodes), reports_(n_nodes) {
  if (n_nodes < 2) throw Error(ErrorKind::Estimation, "bank needs N >= 2");
  for (auto& t : taps_) t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(taps_per_target()));
}

std::size_t FirWienerBank::offset(std::size_t target, std::size_t source) const {
  if (target >= n_ || source >= n_ || source == target)
    throw Error(ErrorKind::Estimation, "invalid (target, source) pair");
  const auto slot = source < target ? source : source - 1;
  return slot * (2 * order_ + 1);
}

std::span<const double> FirWienerBank::taps(std::size_t target, std::size_t source) const {
  const auto off = offset(target, source);
  return {taps_[target].data() + off, 2 * order_ + 1};
}

double FirWienerBank::norm(std::size_t target, std::size_t source) const {
  double s = 0.0;
  for (double h : taps(target, source)) s += h * h;
  return std::sqrt(s);
}

void FirWienerBank::set(std::size_t target, WienerSolution solution) {
  if (static_cast<std::size_t>(solution.taps.size()) != taps_per_target())
    throw Error(ErrorKind::Estimation, "tap vector has length " +
                                           std::to_string(solution.taps.size()) +
                                           ", expected " + std::to_string(taps_per_target()));
  if (!solution.taps.allFinite())
    throw Error(ErrorKind::Estimation, "non-finite taps for node " + std::to_string(target + 1));
  taps_.at(target) = std::move(solution.taps);
  reports_.at(target) = solution.report;
}

FirWienerBank estimate_bank(const CorrelationTable& table, std::size_t fir_order,
                            unsigned threads) {
  const auto n = table.n_nodes();
  FirWienerBank bank(n, fir_order);
  std::vector<std::optional<WienerSolution>> solutions(n);
  std::vector<std::string> failures(n);
  parallel_for(n, threads, [&](std::size_t j) {
    try {
      solutions[j] = solve_wiener(table, j, fir_order);
    } catch (const std::exception& e) {
      failures[j] = e.what();
    }
  });
  for (std::size_t j = 0; j < n; ++j) {
    if (!solutions[j])
      throw Error(ErrorKind::Estimation, "node " + std::to_string(j + 1) + ": " + failures[j]);
    bank.set(j, std::move(*solutions[j]));
  }
  return bank;
}

FirWienerBank estimate_bank(const TimeSeriesPanel& panel, const BankOptions& options) {
  const auto max_lag = options.max_lag == 0 ? 2 * options.fir_order : options.max_lag;
  CorrelationTable table = [&] {
    try {
      return estimate_correlations(panel, max_lag, {options.prefilter, options.threads});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Estimation) throw;
      std::string nodes;
      for (std::size_t j = 0; j < panel.n_nodes(); ++j)
        nodes += (j ? "," : "") + std::to_string(j + 1);
      throw Error(ErrorKind::Estimation, "nodes " + nodes + ": " + e.what());
    }
  }();
  return estimate_bank(table, options.fir_order, options.threads);
}

Eigen::VectorXd apply_filter(const FirWienerBank& bank, std::size_t target,
                             const TimeSeriesPanel::Matrix& series) {
  const auto f = static_cast<Eigen::Index>(bank.fir_order());
  const auto t = series.cols();
  if (static_cast<std::size_t>(series.rows()) != bank.n_nodes() || t <= 2 * f)
    throw Error(ErrorKind::Estimation, "series shape does not match bank");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t - 2 * f);
  for (std::size_t k = 0; k < bank.n_nodes(); ++k) {
    if (k == target) continue;
    const auto h = bank.taps(target, k);
    const auto xk = series.row(static_cast<Eigen::Index>(k));
    for (Eigen::Index p = -f; p <= f; ++p)
      out += h[static_cast<std::size_t>(p + f)] * xk.segment(f + p, t - 2 * f).transpose();
  }
  return out;
}

void write_bank_csv(const FirWienerBank& bank, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << "target,source,lag,coefficient\n";
  const long f = static_cast<long>(bank.fir_order());
  for (std::size_t j = 0; j < bank.n_nodes(); ++j)
    for (std::size_t i = 0; i < bank.n_nodes(); ++i) {
      if (i == j) continue;
      const auto h = bank.taps(j, i);
      for (long p = -f; p <= f; ++p)
        out << j + 1 << ',' << i + 1 << ',' << p << ','
            << csv::format_real(h[static_cast<std::size_t>(p + f)]) << '\n';
    }
}

}  // namespace gridtopo
