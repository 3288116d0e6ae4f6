#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridtopo/estimation.hpp"
#include "gridtopo/grid.hpp"

namespace gridtopo {

using Complex = std::complex<double>;

/// Ordered frequencies in radians/sample. Responses of real filters satisfy
/// W(e^{-jw}) = conj(W(e^{jw})), so [0, pi] carries all information.
class FrequencyGrid {
 public:
  /// Strictly increasing points within [-pi, pi]; throws Error{Config}.
  explicit FrequencyGrid(std::vector<double> omega);

  /// `points` uniform points pi*k/(points-1), k = 0..points-1. points >= 2.
  static FrequencyGrid half(std::size_t points = 65);
  /// `points` uniform points -pi + 2*pi*k/points covering [-pi, pi).
  static FrequencyGrid full(std::size_t points);

  std::size_t size() const { return omega_.size(); }
  double operator[](std::size_t k) const { return omega_[k]; }
  const std::vector<double>& points() const { return omega_; }

 private:
  std::vector<double> omega_;
};

/// Relative magnitude below which a phase value is treated as indeterminate.
inline constexpr double kIndeterminateRelMagnitude = 1e-6;

/// Complex responses W_{ji}(e^{jw}) for every ordered pair j != i.
class FrequencyResponseSet {
 public:
  FrequencyResponseSet(std::size_t n_nodes, FrequencyGrid grid);

  std::size_t n_nodes() const { return n_; }
  const FrequencyGrid& grid() const { return grid_; }

  std::span<const Complex> response(std::size_t target, std::size_t source) const;
  std::span<Complex> response(std::size_t target, std::size_t source);

  double magnitude(std::size_t target, std::size_t source, std::size_t k) const;
  /// Principal argument in (-pi, pi].
  double phase(std::size_t target, std::size_t source, std::size_t k) const;

  /// Per grid point: true where |W| < kIndeterminateRelMagnitude * max|W|
  /// (every point is flagged when the response is identically zero).
  std::vector<bool> indeterminate(std::size_t target, std::size_t source) const;

 private:
  std::size_t slot(std::size_t target, std::size_t source) const;

  std::size_t n_;
  FrequencyGrid grid_;
  std::vector<Complex> values_;
};

/// Principal argument in (-pi, pi].
double principal_phase(Complex z);

/// S_j(z) = M_j/ts^2 (z-1)^2 + D_j/ts (z-1) + B_j.
Complex eval_S(const GridGraph& g, std::size_t node, double ts, Complex z);

/// W_{ji}(e^{jw}) = sum_{p=-F}^{F} h_{i,p} e^{jwp} for every pair.
FrequencyResponseSet fir_frequency_response(const FirWienerBank& bank,
                                            const FrequencyGrid& grid);

/// Model quantities on a frequency grid.
struct ModelSpectra {
  FrequencyGrid grid;
  Eigen::VectorXd noise_psd;
  /// L(e^{jw}): diagonal S_j, off-diagonal -b_ij.
  std::vector<Eigen::MatrixXcd> system;
  /// K(e^{jw}) = L^H Phi_P^{-1} L, the inverse of the angle PSD where that
  /// exists; always finite.
  std::vector<Eigen::MatrixXcd> precision;
  /// Phi_Theta(e^{jw}) = L^{-1} Phi_P L^{-H}. Empty where L is singular
  /// (w = 0 for every connected grid, where the angle PSD diverges).
  std::vector<std::optional<Eigen::MatrixXcd>> psd;
};

ModelSpectra model_spectra(const GridGraph& g, const Eigen::VectorXd& noise_psd, double ts,
                           const FrequencyGrid& grid);

/// Wiener row Phi_{j jbar} Phi_{jbar}^{-1} from a PSD matrix, by direct
/// inversion of the partitioned block. Entry i of the result is W_{ji};
/// entry j is zero. Throws Error{Spectral} when Phi_{jbar} is singular.
Eigen::VectorXcd wiener_row_from_psd(const Eigen::MatrixXcd& psd, std::size_t target);

/// Same row from the precision matrix K = Phi^{-1}: W_{ji} = -K_{ji} / K_{jj}.
Eigen::VectorXcd wiener_row_from_precision(const Eigen::MatrixXcd& precision,
                                           std::size_t target);

/// Exact non-causal Wiener responses of the swing model with diagonal flat
/// noise spectrum `noise_psd`. Evaluated through the precision matrix so the
/// result stays finite at w = 0.
FrequencyResponseSet oracle_wiener_response(const GridGraph& g,
                                            const Eigen::VectorXd& noise_psd, double ts,
                                            const FrequencyGrid& grid, unsigned threads = 1);

/// Rows `target,source,omega,re,im,magnitude,phase` (1-based ids).
void write_response_csv(const FrequencyResponseSet& set, const std::filesystem::path& file);

}  // namespace gridtopo
