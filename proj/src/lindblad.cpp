#include "qdspin/lindblad.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qdspin {

// ---------------------------------------------------------------- envelope

double Envelope::operator()(double t) const {
  double s;
  if (rise > 0.0) {
    s = 0.5 * (std::tanh((t - start) / rise) - std::tanh((t - stop) / rise));
  } else {
    s = (t >= start && t < stop) ? 1.0 : 0.0;
  }
  return exponent == 1 ? s : std::pow(s, exponent);
}

bool Envelope::flat_on(double t0, double t1) const {
  // tanh(20) rounds to 1 in double precision.
  const double margin = rise > 0.0 ? 20.0 * rise : 0.0;
  auto clear_of = [&](double edge) {
    if (!std::isfinite(edge)) return true;
    if (margin == 0.0) return !(t0 < edge && edge < t1);
    return t1 <= edge - margin || t0 >= edge + margin;
  };
  return clear_of(start) && clear_of(stop);
}

double Envelope::area() const {
  const double width = stop - start;
  if (exponent == 2 && rise > 0.0) return width - rise;
  return width;
}

// ------------------------------------------------------------- hamiltonian

template <int N>
CMatrix<N> Hamiltonian<N>::operator()(double t) const {
  CMatrix<N> h = CMatrix<N>::Zero();
  h.diagonal() = diagonal.template cast<complex>();
  for (const auto& c : couplings) {
    const double s = c.envelope(t);
    if (s == 0.0) continue;
    if (c.row == c.col) {
      h(c.row, c.row) += s * c.amplitude.real();
    } else {
      const complex v = s * c.amplitude * std::polar(1.0, c.phase - c.rotation * t);
      h(c.row, c.col) += v;
      h(c.col, c.row) += std::conj(v);
    }
  }
  return h;
}

template <int N>
bool Hamiltonian<N>::static_on(double t0, double t1) const {
  for (const auto& c : couplings) {
    if (!c.envelope.flat_on(t0, t1)) return false;
    if (c.rotation != 0.0 && c.row != c.col && c.envelope(0.5 * (t0 + t1)) != 0.0) return false;
  }
  return true;
}

template struct Hamiltonian<2>;
template struct Hamiltonian<4>;

// ------------------------------------------------------------------ drives

DriveTerm DriveTerm::linear(TransitionId target, double rabi, Envelope envelope,
                            double detuning, double phase) {
  DriveTerm d;
  d.target = target;
  d.rabi = rabi;
  d.envelope = envelope;
  d.detuning = detuning;
  d.phase = phase;
  const bool is_y = target == TransitionId::y1 || target == TransitionId::y2;
  d.pol_x = is_y ? 0.0 : 1.0;
  d.pol_y = is_y ? 1.0 : 0.0;
  return d;
}

DriveTerm DriveTerm::circular(TransitionId target, double rabi, Envelope envelope,
                              double detuning, double phase) {
  DriveTerm d = linear(target, rabi, envelope, detuning, phase);
  d.pol_x = complex(1.0 / std::sqrt(2.0), 0.0);
  d.pol_y = complex(0.0, 1.0 / std::sqrt(2.0));
  return d;
}

namespace {

// Dipole unit vectors (x, y). The sign on y2 makes a circularly polarized
// Raman field drive the two Lambda paths in phase; linear polarization then
// cancels, as for Voigt-geometry quantum dots.
std::pair<double, double> dipole(TransitionId k) {
  switch (k) {
    case TransitionId::y1: return {0.0, 1.0};
    case TransitionId::y2: return {0.0, -1.0};
    case TransitionId::x1: return {1.0, 0.0};
    case TransitionId::x2: return {1.0, 0.0};
  }
  return {0.0, 0.0};
}

bool valid_transition(TransitionId id) {
  const int k = static_cast<int>(id);
  return k >= 0 && k < 4;
}

}  // namespace

complex dipole_overlap(TransitionId k, const DriveTerm& drive) {
  const auto [dx, dy] = dipole(k);
  return dx * drive.pol_x + dy * drive.pol_y;
}

RotatingFrame RotatingFrame::interaction(const LevelScheme& scheme) {
  RotatingFrame f;
  for (int i = 0; i < kLevels; ++i) f.energies[i] = scheme.level_energy(i);
  return f;
}

RotatingFrame RotatingFrame::anchored(const LevelScheme& scheme, const DriveTerm& laser) {
  if (!valid_transition(laser.target)) throw ModelError("drive targets a nonexistent transition");
  RotatingFrame f;
  f.energies[g1] = scheme.level_energy(g1);
  f.energies[g2] = scheme.level_energy(g2);
  const double omega = scheme.transition_offset(laser.target) + laser.detuning;
  const Polarization pol = scheme.transition(laser.target).polarization;
  for (const auto& t : scheme.transitions())
    if (t.polarization == pol) f.energies[t.upper] = f.energies[t.lower] + omega;
  return f;
}

Hamiltonian<4> build_hamiltonian(const LevelScheme& scheme, std::span<const DriveTerm> drives,
                                 const RotatingFrame& frame, QuasiStaticShifts shifts) {
  for (std::size_t i = 0; i < drives.size(); ++i) {
    if (!valid_transition(drives[i].target))
      throw ModelError("drive " + std::to_string(i) + " targets a nonexistent transition");
    if (std::abs(dipole_overlap(drives[i].target, drives[i])) == 0.0)
      throw ModelError("drive " + std::to_string(i) + " is orthogonal to its target dipole");
    for (std::size_t j = 0; j < i; ++j) {
      if (drives[j].target == drives[i].target && drives[j].detuning == drives[i].detuning &&
          drives[j].phase != drives[i].phase)
        throw ModelError("drives " + std::to_string(j) + " and " + std::to_string(i) +
                         " are the same tone on " + to_string(drives[i].target) +
                         " with different phase references");
    }
  }

  Hamiltonian<4> h;
  for (int i = 0; i < kLevels; ++i) h.diagonal[i] = scheme.level_energy(i) - frame.energies[i];
  h.diagonal[e1] += shifts.optical;
  h.diagonal[e2] += shifts.optical;
  h.diagonal[g1] += 0.5 * shifts.ground;
  h.diagonal[g2] -= 0.5 * shifts.ground;

  for (const auto& d : drives) {
    const double omega = scheme.transition_offset(d.target) + d.detuning;
    for (const auto& t : scheme.transitions()) {
      const complex overlap = dipole_overlap(t.id, d);
      if (std::abs(overlap) == 0.0) continue;
      Coupling c;
      c.row = t.upper;
      c.col = t.lower;
      c.amplitude = 0.5 * d.rabi * overlap;
      c.envelope = d.envelope;
      c.phase = d.phase;
      c.rotation = omega - (frame.energies[t.upper] - frame.energies[t.lower]);
      h.couplings.push_back(c);
    }
  }
  return h;
}

std::vector<CollapseChannel> build_collapse_channels(const DecayRates& rates,
                                                     const LevelScheme& scheme,
                                                     const FieldEnvironment& env) {
  rates.validate();
  std::vector<CollapseChannel> out;
  for (const auto& t : scheme.transitions()) {
    const int id = static_cast<int>(t.id);
    out.push_back({ChannelKind::radiative_wg, t.upper, t.lower,
                   rates.waveguide_rate(t.polarization), id});
    out.push_back({ChannelKind::radiative_free, t.upper, t.lower,
                   rates.free_rate(t.polarization), id});
  }
  if (rates.cotunneling > 0.0) {
    // Detailed balance: flips land in each ground state in proportion to
    // its thermal population.
    const auto pop = thermal_populations(env, scheme.delta_g());
    out.push_back({ChannelKind::spin_flip, g1, g2, rates.cotunneling * pop.lower, -1});
    out.push_back({ChannelKind::spin_flip, g2, g1, rates.cotunneling * pop.upper, -1});
  }
  if (rates.dephasing > 0.0) {
    out.push_back({ChannelKind::dephasing, e1, e1, rates.dephasing, -1});
    out.push_back({ChannelKind::dephasing, e2, e2, rates.dephasing, -1});
  }
  return out;
}

// ---------------------------------------------------------------- dynamics

namespace {

using State = Eigen::VectorXcd;

template <int N>
class MasterEquation {
 public:
  MasterEquation(const Hamiltonian<N>& h, std::span<const CollapseChannel> channels)
      : h_(h), channels_(channels.begin(), channels.end()) {
    loss_.setZero();
    for (const auto& c : channels_) {
      if (c.from < 0 || c.from >= N || c.to < 0 || c.to >= N)
        throw ModelError("collapse channel level index out of range");
      if (c.rate < 0.0) throw ModelError("collapse channel rate must be >= 0");
      loss_[c.from] += c.strength();
    }
  }

  Eigen::Index size() const { return N * N + static_cast<Eigen::Index>(channels_.size()); }

  void operator()(double t, const State& y, State& dy) const { apply(h_(t), y, dy); }

  void apply(const CMatrix<N>& h, const State& y, State& dy) const {
    Eigen::Map<const CMatrix<N>> rho(y.data());
    Eigen::Map<CMatrix<N>> drho(dy.data());
    const complex minus_i(0.0, -1.0);
    drho.noalias() = minus_i * (h * rho);
    drho.noalias() -= minus_i * (rho * h);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) drho(i, j) -= 0.5 * (loss_[i] + loss_[j]) * rho(i, j);
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      const auto& ch = channels_[c];
      const double pop = rho(ch.from, ch.from).real();
      drho(ch.to, ch.to) += ch.strength() * pop;
      dy[N * N + static_cast<Eigen::Index>(c)] = ch.strength() * pop;
    }
  }

  /// Generator matrix of the augmented linear system at a fixed H.
  Eigen::MatrixXcd matrix(const CMatrix<N>& h) const {
    const Eigen::Index m = size();
    Eigen::MatrixXcd a(m, m);
    State e = State::Zero(m), col(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      e[k] = 1.0;
      col.setZero();
      apply(h, e, col);
      a.col(k) = col;
      e[k] = 0.0;
    }
    return a;
  }

  const Hamiltonian<N>& hamiltonian() const { return h_; }
  const std::vector<CollapseChannel>& channels() const { return channels_; }

 private:
  const Hamiltonian<N>& h_;
  std::vector<CollapseChannel> channels_;
  Eigen::Matrix<double, N, 1> loss_;
};

template <int N>
void symmetrize(State& y) {
  Eigen::Map<CMatrix<N>> rho(y.data());
  const CMatrix<N> herm = 0.5 * (rho + rho.adjoint());
  rho = herm;
  for (Eigen::Index k = N * N; k < y.size(); ++k) y[k] = y[k].real();
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1c = 71.0 / 57600, e3c = -71.0 / 16695, e4c = 71.0 / 1920,
                 e5c = -17253.0 / 339200, e6c = 22.0 / 525, e7c = -1.0 / 40;

template <int N>
class DormandPrince {
 public:
  DormandPrince(const MasterEquation<N>& f, const EvolveOptions& opt)
      : f_(f), opt_(opt), h_(opt.initial_step) {
    const Eigen::Index m = f.size();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_, &err_})
      v->resize(m);
  }

  void advance(double t0, double t1, State& y) {
    double t = t0;
    bool have_k1 = false;
    while (t < t1) {
      if (++steps_ > opt_.max_steps) throw IntegrationError("step budget exhausted", t);
      const bool last = t + h_ >= t1;
      const double h = last ? t1 - t : h_;
      if (!have_k1) {
        f_(t, y, k1_);
        have_k1 = true;
      }
      tmp_ = y + h * a21 * k1_;
      f_(t + c2 * h, tmp_, k2_);
      tmp_ = y + h * (a31 * k1_ + a32 * k2_);
      f_(t + c3 * h, tmp_, k3_);
      tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      f_(t + c4 * h, tmp_, k4_);
      tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      f_(t + c5 * h, tmp_, k5_);
      tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      f_(t + h, tmp_, k6_);
      ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
      f_(t + h, ynew_, k7_);
      err_ = h * (e1c * k1_ + e3c * k3_ + e4c * k4_ + e5c * k5_ + e6c * k6_ + e7c * k7_);

      double norm = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double scale =
            opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
        const double r = std::abs(err_[i]) / scale;
        norm += r * r;
      }
      norm = std::sqrt(norm / static_cast<double>(y.size()));

      if (!std::isfinite(norm)) {
        h_ *= 0.1;
      } else if (norm <= 1.0) {
        t = last ? t1 : t + h;
        y.swap(ynew_);
        symmetrize<N>(y);
        // FSAL: k7 is the derivative at the accepted point, up to the
        // symmetrization round-off.
        k1_.swap(k7_);
        const double grow = norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(norm, -0.2));
        // A step truncated to hit t1 does not limit the next proposal.
        if (!last || h >= h_) h_ = h * std::max(0.2, grow);
      } else {
        h_ = h * std::max(0.2, 0.9 * std::pow(norm, -0.2));
      }
      if (h_ < opt_.min_step * std::max(1.0, std::abs(t)))
        throw IntegrationError("step size underflow", t);
    }
  }

 private:
  const MasterEquation<N>& f_;
  const EvolveOptions& opt_;
  double h_;
  long steps_ = 0;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_, err_;
};

template <int N>
void record(Trajectory<N>& traj, std::size_t i, double t, const State& y) {
  traj.times[i] = t;
  traj.states[i] = Eigen::Map<const CMatrix<N>>(y.data());
  double wg = 0.0;
  for (std::size_t c = 0; c < traj.channels.size(); ++c) {
    const auto& ch = traj.channels[c];
    traj.emitted(i, c) = y[N * N + static_cast<Eigen::Index>(c)].real();
    const double f = ch.strength() * traj.states[i](ch.from, ch.from).real();
    traj.flux_per_channel(i, c) = f;
    if (ch.kind == ChannelKind::radiative_wg) wg += f;
  }
  traj.flux_wg[i] = wg;
}

}  // namespace

template <int N>
double Trajectory<N>::emitted_wg(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < channels.size(); ++c)
    if (channels[c].kind == ChannelKind::radiative_wg) acc += emitted(i, c);
  return acc;
}

template <int N>
Trajectory<N> evolve(const CMatrix<N>& rho0, const Hamiltonian<N>& hamiltonian,
                     std::span<const CollapseChannel> channels, std::span<const double> times,
                     const EvolveOptions& options) {
  if (times.empty()) throw std::invalid_argument("evolve: empty time grid");
  if ((rho0 - rho0.adjoint()).norm() > 1e-10) throw std::invalid_argument("evolve: rho0 not Hermitian");
  if (std::abs(rho0.trace() - 1.0) > 1e-8) throw std::invalid_argument("evolve: rho0 trace != 1");

  const MasterEquation<N> eq(hamiltonian, channels);
  Trajectory<N> traj;
  const std::size_t nt = times.size();
  const auto nc = static_cast<Eigen::Index>(channels.size());
  traj.channels.assign(channels.begin(), channels.end());
  traj.times.resize(nt);
  traj.states.resize(nt);
  traj.emitted.resize(static_cast<Eigen::Index>(nt), nc);
  traj.flux_per_channel.resize(static_cast<Eigen::Index>(nt), nc);
  traj.flux_wg.resize(static_cast<Eigen::Index>(nt));

  State y = State::Zero(eq.size());
  Eigen::Map<CMatrix<N>>(y.data()) = rho0;
  record(traj, 0, times[0], y);

  DormandPrince<N> stepper(eq, options);
  CMatrix<N> cached_h = CMatrix<N>::Constant(complex(std::nan(""), 0.0));
  double cached_dt = -1.0;
  Eigen::MatrixXcd propagator;

  for (std::size_t k = 1; k < nt; ++k) {
    const double t0 = times[k - 1], t1 = times[k];
    if (!(t1 > t0)) throw std::invalid_argument("evolve: time grid must be strictly increasing");
    if (options.exact_static && hamiltonian.static_on(t0, t1)) {
      const CMatrix<N> h = hamiltonian(0.5 * (t0 + t1));
      const double dt = t1 - t0;
      if (dt != cached_dt || h != cached_h) {
        propagator = (eq.matrix(h) * dt).exp();
        cached_h = h;
        cached_dt = dt;
      }
      State next = propagator * y;
      y.swap(next);
      symmetrize<N>(y);
    } else {
      stepper.advance(t0, t1, y);
    }
    record(traj, k, t1, y);
  }
  return traj;
}

template <int N>
Eigen::MatrixXcd liouvillian(const CMatrix<N>& h, std::span<const CollapseChannel> channels) {
  Hamiltonian<N> dummy;
  const MasterEquation<N> eq(dummy, channels);
  return eq.matrix(h).topLeftCorner(N * N, N * N);
}

template <int N>
CMatrix<N> steady_state(const CMatrix<N>& h, std::span<const CollapseChannel> channels) {
  const Eigen::MatrixXcd l = liouvillian<N>(h, channels);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(l, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s[0]);
  Eigen::Index dim = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] <= tol) ++dim;
  if (dim != 1)
    throw SteadyStateError("steady-state manifold has dimension " + std::to_string(dim) +
                           " (expected 1)");
  Eigen::VectorXcd v = svd.matrixV().col(s.size() - 1);
  CMatrix<N> rho = Eigen::Map<CMatrix<N>>(v.data());
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

template <int N>
Histogram fluorescence_flux(const Trajectory<N>& traj, double start, double stop,
                            double bin_width, double background) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("fluorescence_flux: bin width must be > 0");
  if (traj.times.empty() || start < traj.times.front() - 1e-9 || stop > traj.times.back() + 1e-9)
    throw std::invalid_argument("fluorescence_flux: window outside trajectory span");
  const auto bins = static_cast<Eigen::Index>(std::floor((stop - start) / bin_width + 1e-9));
  if (bins < 1) throw std::invalid_argument("fluorescence_flux: empty window");

  const auto& ts = traj.times;
  auto cumulative = [&](double t) {
    auto it = std::lower_bound(ts.begin(), ts.end(), t - 1e-9);
    std::size_t i = static_cast<std::size_t>(it - ts.begin());
    if (i < ts.size() && std::abs(ts[i] - t) <= 1e-9) return traj.emitted_wg(i);
    if (i == 0) return traj.emitted_wg(0);
    if (i >= ts.size()) return traj.emitted_wg(ts.size() - 1);
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return (1.0 - w) * traj.emitted_wg(i - 1) + w * traj.emitted_wg(i);
  };

  Histogram hist;
  hist.background = background;
  hist.bin_centers.resize(bins);
  hist.counts.resize(bins);
  double prev = cumulative(start);
  for (Eigen::Index b = 0; b < bins; ++b) {
    const double hi = start + static_cast<double>(b + 1) * bin_width;
    const double next = cumulative(hi);
    hist.bin_centers[b] = start + (static_cast<double>(b) + 0.5) * bin_width;
    hist.counts[b] = (next - prev) / bin_width + background;
    prev = next;
  }
  return hist;
}

std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw std::invalid_argument("uniform_grid: bad range");
  const auto n = static_cast<std::size_t>(std::ceil((stop - start) / step - 1e-9));
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = std::min(stop, start + static_cast<double>(i) * step);
  return out;
}

#define QDSPIN_INSTANTIATE(N)                                                              \
  template struct Trajectory<N>;                                                           \
  template Trajectory<N> evolve<N>(const CMatrix<N>&, const Hamiltonian<N>&,               \
                                   std::span<const CollapseChannel>, std::span<const double>, \
                                   const EvolveOptions&);                                  \
  template Eigen::MatrixXcd liouvillian<N>(const CMatrix<N>&, std::span<const CollapseChannel>); \
  template CMatrix<N> steady_state<N>(const CMatrix<N>&, std::span<const CollapseChannel>); \
  template Histogram fluorescence_flux<N>(const Trajectory<N>&, double, double, double, double);

QDSPIN_INSTANTIATE(2)
QDSPIN_INSTANTIATE(4)

#undef QDSPIN_INSTANTIATE

}  // namespace qdspin
