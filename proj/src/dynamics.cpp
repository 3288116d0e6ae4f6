#include "gridtopo/dynamics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "csv.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/rng.hpp"

namespace gridtopo {
namespace {

constexpr std::array<char, 8> kPanelMagic = {'G', 'R', 'I', 'D', 'T', 'S', '0', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& file) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw Error(ErrorKind::Parse, file + ": truncated panel");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

NoiseStream::NoiseStream(const NoiseModel& model, std::size_t node)
    : model_(model), key_(mix_seed(model.seed, node)) {
  if (!(model.psd_level >= 0.0))
    throw Error(ErrorKind::Config, "noise psd_level must be >= 0");
  if (model.kind == NoiseKind::Ar1Gaussian) {
    const double a = model.ar_coefficient;
    if (!(a > -1.0 && a < 1.0))
      throw Error(ErrorKind::Config, "AR(1) coefficient must lie in (-1, 1)");
    innovation_scale_ = std::sqrt(model.psd_level * (1.0 - a * a));
  } else {
    innovation_scale_ = std::sqrt(model.psd_level);
  }
}

double NoiseStream::next() {
  const double z = counter_normal(key_, counter_);
  if (model_.kind == NoiseKind::WhiteGaussian) {
    ++counter_;
    return innovation_scale_ * z;
  }
  // Stationary start: x(0) has the full variance psd_level.
  if (counter_ == 0)
    state_ = std::sqrt(model_.psd_level) * z;
  else
    state_ = model_.ar_coefficient * state_ + innovation_scale_ * z;
  ++counter_;
  return state_;
}

double draw_noise(const NoiseModel& model, std::size_t node, std::uint64_t n) {
  if (model.kind == NoiseKind::WhiteGaussian)
    return std::sqrt(model.psd_level) * counter_normal(mix_seed(model.seed, node), n);
  NoiseStream stream(model, node);
  double value = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) value = stream.next();
  return value;
}

void TimeSeriesPanel::validate() const {
  if (data.rows() == 0 || data.cols() == 0)
    throw Error(ErrorKind::Validation, "panel is empty");
  if (!(ts > 0.0) || !std::isfinite(ts))
    throw Error(ErrorKind::Validation, "panel sampling interval must be > 0");
  if (!data.allFinite())
    throw Error(ErrorKind::Validation, "panel contains non-finite values");
}

Eigen::MatrixXd companion_matrix(const Eigen::VectorXd& inertia,
                                 const Eigen::VectorXd& damping,
                                 const Eigen::MatrixXd& laplacian, double ts) {
  const auto n = inertia.size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = damping(j) * ts / inertia(j);
    const double g = ts * ts / inertia(j);
    c(j, j) = 2.0 - a;
    c(j, n + j) = a - 1.0;
    for (Eigen::Index i = 0; i < n; ++i) c(j, n + i) -= g * laplacian(j, i);
    c(n + j, j) = 1.0;
  }
  return c;
}

StabilityReport stability_check(const Eigen::VectorXd& inertia,
                                const Eigen::VectorXd& damping,
                                const Eigen::MatrixXd& laplacian, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorKind::Config, "ts must be > 0");
  const Eigen::MatrixXd c = companion_matrix(inertia, damping, laplacian, ts);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(c, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::Instability, "eigenvalue computation failed");
  const Eigen::VectorXcd eig = solver.eigenvalues();

  Eigen::Index rotational = 0;
  double offset = std::abs(eig(0) - 1.0);
  for (Eigen::Index k = 1; k < eig.size(); ++k) {
    const double d = std::abs(eig(k) - 1.0);
    if (d < offset) {
      offset = d;
      rotational = k;
    }
  }

  StabilityReport report;
  report.rotational_mode_offset = offset;
  for (Eigen::Index k = 0; k < eig.size(); ++k) {
    const double r = std::abs(eig(k));
    report.full_radius = std::max(report.full_radius, r);
    if (k != rotational) report.spectral_radius = std::max(report.spectral_radius, r);
  }
  // The set-aside eigenvalue must really be the rotational mode; anything
  // else means z = 1 is not a root and the radius check covers it.
  if (offset > 1e-6) report.spectral_radius = report.full_radius;
  report.stable = report.spectral_radius < 1.0 - kStabilityMargin;
  return report;
}

StabilityReport stability_check(const GridGraph& g, double ts) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::VectorXd m(n), d(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j) = g.node(static_cast<std::size_t>(j)).inertia;
    d(j) = g.node(static_cast<std::size_t>(j)).damping;
  }
  return stability_check(m, d, g.laplacian(), ts);
}

namespace {

template <typename Input>
TimeSeriesPanel run_recursion(const GridGraph& g, Input&& input,
                              const SimulationOptions& opt) {
  if (!(opt.ts > 0.0)) throw Error(ErrorKind::Config, "ts must be > 0");
  if (opt.n_samples == 0) throw Error(ErrorKind::Config, "n_samples must be > 0");
  const auto n = g.node_count();
  std::vector<double> a(n), gain(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = g.node(j).damping * opt.ts / g.node(j).inertia;
    gain[j] = opt.ts * opt.ts / g.node(j).inertia;
  }

  TimeSeriesPanel panel;
  panel.ts = opt.ts;
  panel.data.resize(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(opt.n_samples));

  std::vector<double> prev(n, 0.0), cur(n, 0.0), next(n, 0.0), flow(n, 0.0);
  const std::size_t total = opt.burn_in + opt.n_samples;
  for (std::size_t step = 0; step < total; ++step) {
    // prev = theta(step), cur = theta(step + 1)
    if (step >= opt.burn_in) {
      const auto col = static_cast<Eigen::Index>(step - opt.burn_in);
      for (std::size_t j = 0; j < n; ++j)
        panel.data(static_cast<Eigen::Index>(j), col) = prev[j];
    }
    std::fill(flow.begin(), flow.end(), 0.0);
    for (const auto& e : g.edges()) {
      const double f = e.susceptance * (prev[e.to] - prev[e.from]);
      flow[e.from] += f;
      flow[e.to] -= f;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double p = input(j, step);
      next[j] = 2.0 * cur[j] - prev[j] - a[j] * (cur[j] - prev[j]) +
                gain[j] * (flow[j] + p);
      if (!(std::abs(next[j]) <= opt.magnitude_cap))
        throw Error(ErrorKind::Overflow,
                    "node " + std::to_string(j + 1) + " exceeded |theta| cap " +
                        csv::format_real(opt.magnitude_cap) + " at sample " +
                        std::to_string(step + 2));
    }
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return panel;
}

void require_stable(const GridGraph& g, double ts) {
  const auto report = stability_check(g, ts);
  if (!report.stable) {
    std::ostringstream msg;
    msg << "swing recursion is not asymptotically stable at ts=" << ts
        << " (spectral radius " << report.spectral_radius << ")";
    throw Error(ErrorKind::Instability, msg.str());
  }
}

}  // namespace

TimeSeriesPanel simulate(const GridGraph& g, const NoiseModel& noise,
                         const SimulationOptions& options) {
  require_stable(g, options.ts);
  std::vector<NoiseStream> streams;
  streams.reserve(g.node_count());
  for (std::size_t j = 0; j < g.node_count(); ++j) streams.emplace_back(noise, j);
  // Each stream is advanced exactly once per step, in node order.
  return run_recursion(
      g, [&](std::size_t node, std::size_t) { return streams[node].next(); },
      options);
}

TimeSeriesPanel simulate_with_input(
    const GridGraph& g, const std::function<double(std::size_t, std::size_t)>& input,
    const SimulationOptions& options, bool check_stability) {
  if (check_stability) require_stable(g, options.ts);
  return run_recursion(g, input, options);
}

void write_panel(const TimeSeriesPanel& panel, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out.write(kPanelMagic.data(), kPanelMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(panel.n_nodes()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(panel.n_samples()));
  put_le<double>(out, panel.ts);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(panel.data.data()),
              static_cast<std::streamsize>(panel.data.size() * sizeof(double)));
  } else {
    for (Eigen::Index k = 0; k < panel.data.size(); ++k)
      put_le<double>(out, panel.data.data()[k]);
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

TimeSeriesPanel read_panel(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kPanelMagic)
    throw Error(ErrorKind::Parse, file.string() + ": not a GRIDTS01 panel");
  const auto n = get_le<std::uint32_t>(in, file.string());
  const auto t = get_le<std::uint64_t>(in, file.string());
  TimeSeriesPanel panel;
  panel.ts = get_le<double>(in, file.string());
  if (n == 0 || t == 0) throw Error(ErrorKind::Parse, file.string() + ": empty panel");
  panel.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
  if constexpr (std::endian::native == std::endian::little) {
    const auto bytes = static_cast<std::streamsize>(panel.data.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(panel.data.data()), bytes))
      throw Error(ErrorKind::Parse, file.string() + ": truncated panel");
  } else {
    for (Eigen::Index k = 0; k < panel.data.size(); ++k)
      panel.data.data()[k] = get_le<double>(in, file.string());
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorKind::Parse, file.string() + ": trailing bytes after panel");
  panel.validate();
  return panel;
}

void write_panel_csv(const TimeSeriesPanel& panel, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << 'n';
  for (std::size_t j = 0; j < panel.n_nodes(); ++j) out << ",theta_" << j + 1;
  out << '\n';
  for (std::size_t t = 0; t < panel.n_samples(); ++t) {
    out << t;
    for (std::size_t j = 0; j < panel.n_nodes(); ++j)
      out << ',' << csv::format_real(panel.data(static_cast<Eigen::Index>(j),
                                                static_cast<Eigen::Index>(t)));
    out << '\n';
  }
}

TimeSeriesPanel read_panel_csv(const std::filesystem::path& file, double ts) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, file.string() + ": empty");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "n")
    throw Error(ErrorKind::Parse, file.string() + ": header must be n,theta_1,...");
  const auto n = header.size() - 1;
  for (std::size_t j = 0; j < n; ++j)
    if (header[j + 1] != "theta_" + std::to_string(j + 1))
      throw Error(ErrorKind::Parse, file.string() + ": bad column '" + header[j + 1] + "'");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    const auto where = file.filename().string() + " row " + std::to_string(line_no);
    if (fields.size() != n + 1) throw Error(ErrorKind::Parse, where + ": wrong field count");
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = csv::parse_real(fields[j + 1], where);
    rows.push_back(std::move(row));
  }
  TimeSeriesPanel panel;
  panel.ts = ts;
  panel.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t j = 0; j < n; ++j)
      panel.data(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) = rows[t][j];
  panel.validate();
  return panel;
}

}  // namespace gridtopo
