#include "gridtopo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "csv.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/parallel.hpp"

namespace gridtopo {

FrequencyGrid::FrequencyGrid(std::vector<double> omega) : omega_(std::move(omega)) {
  if (omega_.empty()) throw Error(ErrorKind::Config, "frequency grid is empty");
  constexpr double pi = std::numbers::pi;
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    if (!(omega_[k] >= -pi && omega_[k] <= pi))
      throw Error(ErrorKind::Config, "frequency grid point outside [-pi, pi]");
    if (k > 0 && !(omega_[k] > omega_[k - 1]))
      throw Error(ErrorKind::Config, "frequency grid must be strictly increasing");
  }
}

FrequencyGrid FrequencyGrid::half(std::size_t points) {
  if (points < 2) throw Error(ErrorKind::Config, "frequency grid needs >= 2 points");
  std::vector<double> w(points);
  for (std::size_t k = 0; k < points; ++k)
    w[k] = std::numbers::pi * static_cast<double>(k) / static_cast<double>(points - 1);
  w.back() = std::numbers::pi;
  return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::full(std::size_t points) {
  if (points < 2) throw Error(ErrorKind::Config, "frequency grid needs >= 2 points");
  std::vector<double> w(points);
  for (std::size_t k = 0; k < points; ++k)
    w[k] = -std::numbers::pi +
           2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
  return FrequencyGrid(std::move(w));
}

FrequencyResponseSet::FrequencyResponseSet(std::size_t n_nodes, FrequencyGrid grid)
    : n_(n_nodes), grid_(std::move(grid)), values_(n_nodes * n_nodes * grid_.size()) {}

std::size_t FrequencyResponseSet::slot(std::size_t target, std::size_t source) const {
  if (target >= n_ || source >= n_ || target == source)
    throw Error(ErrorKind::Spectral, "invalid (target, source) pair");
  return (target * n_ + source) * grid_.size();
}

std::span<const Complex> FrequencyResponseSet::response(std::size_t target,
                                                        std::size_t source) const {
  return {values_.data() + slot(target, source), grid_.size()};
}

std::span<Complex> FrequencyResponseSet::response(std::size_t target, std::size_t source) {
  return {values_.data() + slot(target, source), grid_.size()};
}

double FrequencyResponseSet::magnitude(std::size_t target, std::size_t source,
                                       std::size_t k) const {
  return std::abs(response(target, source)[k]);
}

double FrequencyResponseSet::phase(std::size_t target, std::size_t source,
                                   std::size_t k) const {
  return principal_phase(response(target, source)[k]);
}

std::vector<bool> FrequencyResponseSet::indeterminate(std::size_t target,
                                                      std::size_t source) const {
  const auto w = response(target, source);
  double peak = 0.0;
  for (const auto& v : w) peak = std::max(peak, std::abs(v));
  std::vector<bool> flags(w.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    flags[k] = peak == 0.0 || std::abs(w[k]) < kIndeterminateRelMagnitude * peak;
  return flags;
}

double principal_phase(Complex z) {
  const double a = std::arg(z);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

Complex eval_S(const GridGraph& g, std::size_t node, double ts, Complex z) {
  const auto& p = g.node(node);
  const Complex u = z - 1.0;
  return p.inertia / (ts * ts) * u * u + p.damping / ts * u + g.total_susceptance(node);
}

FrequencyResponseSet fir_frequency_response(const FirWienerBank& bank,
                                            const FrequencyGrid& grid) {
  const auto n = bank.n_nodes();
  const long f = static_cast<long>(bank.fir_order());
  FrequencyResponseSet set(n, grid);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const auto h = bank.taps(j, i);
      auto out = set.response(j, i);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        Complex acc = 0.0;
        for (long p = -f; p <= f; ++p)
          acc += h[static_cast<std::size_t>(p + f)] *
                 std::polar(1.0, grid[k] * static_cast<double>(p));
        out[k] = acc;
      }
    }
  return set;
}

namespace {

void check_noise(const GridGraph& g, const Eigen::VectorXd& noise_psd) {
  if (static_cast<std::size_t>(noise_psd.size()) != g.node_count())
    throw Error(ErrorKind::Spectral, "noise PSD vector has wrong length");
  if (!(noise_psd.array() > 0.0).all())
    throw Error(ErrorKind::Spectral, "noise PSD values must be > 0");
}

Eigen::MatrixXcd system_matrix(const GridGraph& g, double ts, double omega) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const Complex z = std::polar(1.0, omega);
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) l(j, j) = eval_S(g, static_cast<std::size_t>(j), ts, z);
  for (const auto& e : g.edges()) {
    const auto a = static_cast<Eigen::Index>(e.from);
    const auto b = static_cast<Eigen::Index>(e.to);
    l(a, b) = l(b, a) = -e.susceptance;
  }
  return l;
}

Eigen::MatrixXcd precision_matrix(const Eigen::MatrixXcd& l, const Eigen::VectorXd& noise_psd) {
  const Eigen::VectorXcd inv_phi = noise_psd.cwiseInverse().cast<Complex>();
  return l.adjoint() * inv_phi.asDiagonal() * l;
}

}  // namespace

ModelSpectra model_spectra(const GridGraph& g, const Eigen::VectorXd& noise_psd, double ts,
                           const FrequencyGrid& grid) {
  check_noise(g, noise_psd);
  ModelSpectra spectra{grid, noise_psd, {}, {}, {}};
  const Eigen::MatrixXcd phi_p = noise_psd.cast<Complex>().asDiagonal();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto l = system_matrix(g, ts, grid[k]);
    spectra.precision.push_back(precision_matrix(l, noise_psd));
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(l);
    if (lu.isInvertible()) {
      const Eigen::MatrixXcd l_inv = lu.inverse();
      spectra.psd.emplace_back(l_inv * phi_p * l_inv.adjoint());
    } else {
      spectra.psd.emplace_back(std::nullopt);
    }
    spectra.system.push_back(std::move(l));
  }
  return spectra;
}

Eigen::VectorXcd wiener_row_from_psd(const Eigen::MatrixXcd& psd, std::size_t target) {
  const auto n = psd.rows();
  const auto j = static_cast<Eigen::Index>(target);
  if (psd.cols() != n || j >= n || n < 2)
    throw Error(ErrorKind::Spectral, "bad PSD matrix or target");
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != j) rest.push_back(i);
  const auto m = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXcd block(m, m);
  Eigen::RowVectorXcd cross(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    cross(a) = psd(j, rest[a]);
    for (Eigen::Index b = 0; b < m; ++b) block(a, b) = psd(rest[a], rest[b]);
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(block);
  if (!lu.isInvertible())
    throw Error(ErrorKind::Spectral, "partitioned PSD block is singular");
  // row = cross * block^{-1}  <=>  block^T row^T = cross^T
  const Eigen::VectorXcd w = block.transpose().fullPivLu().solve(cross.transpose());
  Eigen::VectorXcd row = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index a = 0; a < m; ++a) row(rest[a]) = w(a);
  return row;
}

Eigen::VectorXcd wiener_row_from_precision(const Eigen::MatrixXcd& precision,
                                           std::size_t target) {
  const auto n = precision.rows();
  const auto j = static_cast<Eigen::Index>(target);
  if (precision.cols() != n || j >= n)
    throw Error(ErrorKind::Spectral, "bad precision matrix or target");
  const Complex kjj = precision(j, j);
  if (!(std::abs(kjj) > 0.0))
    throw Error(ErrorKind::Spectral, "zero diagonal in precision matrix");
  Eigen::VectorXcd row = -precision.row(j).transpose() / kjj;
  row(j) = 0.0;
  return row;
}

FrequencyResponseSet oracle_wiener_response(const GridGraph& g,
                                            const Eigen::VectorXd& noise_psd, double ts,
                                            const FrequencyGrid& grid, unsigned threads) {
  check_noise(g, noise_psd);
  const auto n = g.node_count();
  FrequencyResponseSet set(n, grid);
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const auto precision = precision_matrix(system_matrix(g, ts, grid[k]), noise_psd);
    for (std::size_t j = 0; j < n; ++j) {
      const auto row = wiener_row_from_precision(precision, j);
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) set.response(j, i)[k] = row(static_cast<Eigen::Index>(i));
    }
  });
  return set;
}

void write_response_csv(const FrequencyResponseSet& set, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << "target,source,omega,re,im,magnitude,phase\n";
  const auto& grid = set.grid();
  for (std::size_t j = 0; j < set.n_nodes(); ++j)
    for (std::size_t i = 0; i < set.n_nodes(); ++i) {
      if (i == j) continue;
      const auto w = set.response(j, i);
      for (std::size_t k = 0; k < grid.size(); ++k)
        out << j + 1 << ',' << i + 1 << ',' << csv::format_real(grid[k]) << ','
            << csv::format_real(w[k].real()) << ',' << csv::format_real(w[k].imag()) << ','
            << csv::format_real(std::abs(w[k])) << ','
            << csv::format_real(principal_phase(w[k])) << '\n';
    }
}

}  // namespace gridtopo
