#include "qdspin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "qdspin/rng.hpp"

namespace qdspin {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

Realizations realize(double sigma, NoiseAveraging mode, int nodes, std::size_t shots,
                     std::uint64_t seed, std::uint64_t stream) {
  Realizations r;
  if (sigma == 0.0) {
    r.values = {0.0};
    r.weights = {1.0};
  } else if (mode == NoiseAveraging::quadrature) {
    const auto& rule = normal_quadrature(nodes);
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      r.values.push_back(sigma * rule.nodes[i]);
      r.weights.push_back(rule.weights[i]);
    }
  } else {
    if (shots == 0) throw std::invalid_argument("noise: Monte Carlo averaging needs shots >= 1");
    const RandomStream rng(seed, stream);
    for (std::size_t i = 0; i < shots; ++i) r.values.push_back(sigma * rng.normal(i));
    r.weights.assign(shots, 1.0 / static_cast<double>(shots));
  }
  return r;
}

}  // namespace

Realizations optical_realizations(const NoiseModel& noise) {
  if (noise.diffusion.sigma < 0.0) throw std::invalid_argument("noise: sigma must be >= 0");
  return realize(noise.diffusion.sigma, noise.optical_averaging, noise.nodes, noise.optical_shots,
                 noise.diffusion.seed, 0);
}

Realizations spin_realizations(const NoiseModel& noise) {
  if (noise.spin.sigma_spin < 0.0) throw std::invalid_argument("noise: sigma_spin must be >= 0");
  return realize(noise.spin.sigma_spin, noise.spin_averaging, noise.nodes, noise.spin_shots,
                 noise.spin.seed, 1);
}

namespace {

DriveTerm resonant_drive(const SystemModel& system, const ResonantPulse& pulse,
                         const Envelope& envelope) {
  const double rabi = system.rates.gamma_0() * std::sqrt(pulse.power);
  return pulse.circular ? DriveTerm::circular(pulse.target, rabi, envelope, pulse.detuning)
                        : DriveTerm::linear(pulse.target, rabi, envelope, pulse.detuning);
}

/// Move a density matrix between diagonal frames at time t.
void change_frame(DensityMatrix& rho, const Eigen::Vector4d& from, const Eigen::Vector4d& to,
                  double t) {
  const Eigen::Vector4d d = to - from;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i)
      if (i != j) rho(i, j) *= std::polar(1.0, (d[i] - d[j]) * t);
}

DensityMatrix thermal_state(const SystemModel& system) {
  const auto pop = thermal_populations(system.env, system.scheme.delta_g());
  DensityMatrix rho = DensityMatrix::Zero();
  rho(g1, g1) = pop.upper;
  rho(g2, g2) = pop.lower;
  return rho;
}

struct Block {
  enum Kind { photocreation, resonant, raman } kind;
  std::vector<std::size_t> elements;  // indices into the sequence
  double start = 0.0;
  double stop = 0.0;
  double seg_start = 0.0;
  double seg_stop = 0.0;
  double rise = 0.0;
  int readout = -1;  // index of a coinciding ReadoutWindow
};

std::vector<Block> make_blocks(const PulseSequence& seq) {
  std::vector<Block> blocks;
  const auto& els = seq.elements;
  for (std::size_t i = 0; i < els.size(); ++i) {
    const auto& e = els[i];
    if (e.is<ReadoutWindow>()) continue;
    if (e.is<RamanPulse>() && !blocks.empty() && blocks.back().kind == Block::raman) {
      auto& b = blocks.back();
      b.elements.push_back(i);
      b.stop = std::max(b.stop, e.stop());
      b.rise = std::max(b.rise, e.rise);
      continue;
    }
    Block b;
    b.kind = e.is<PhotocreationPulse>() ? Block::photocreation
             : e.is<RamanPulse>()       ? Block::raman
                                        : Block::resonant;
    b.elements = {i};
    b.start = e.start;
    b.stop = e.stop();
    b.rise = e.rise;
    if (b.kind == Block::resonant) {
      for (std::size_t j = 0; j < els.size(); ++j) {
        if (!els[j].is<ReadoutWindow>()) continue;
        if (std::abs(els[j].start - e.start) < 1e-9 && std::abs(els[j].duration - e.duration) < 1e-9 &&
            els[j].as<ReadoutWindow>().monitored == e.as<ResonantPulse>().target)
          b.readout = static_cast<int>(j);
      }
    }
    blocks.push_back(b);
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto& b = blocks[k];
    if (b.stop > (k + 1 < blocks.size() ? blocks[k + 1].start : b.stop) + 1e-12)
      throw SequenceError("sequence: pulses overlap");
    b.seg_start = k == 0 ? b.start - 20.0 * b.rise : 0.5 * (blocks[k - 1].stop + b.start);
    b.seg_stop = k + 1 == blocks.size() ? b.stop + 20.0 * b.rise : 0.5 * (b.stop + blocks[k + 1].start);
  }
  return blocks;
}

/// Averaged action of a Raman block on the ground manifold, stored as the
/// images of |g1>, |g2>, |+> and |+i>.
struct GroundMap {
  std::array<CMatrix<2>, 4> images;

  CMatrix<2> apply(const CMatrix<2>& rho) const {
    const double a = rho(0, 1).real(), b = rho(0, 1).imag();
    const double p1 = rho(0, 0).real(), p2 = rho(1, 1).real();
    return p1 * images[0] + p2 * images[1] + a * (2.0 * images[2] - images[0] - images[1]) -
           b * (2.0 * images[3] - images[0] - images[1]);
  }
};

GroundMap raman_ground_map(const PulseSequence& seq, const Block& block, const SystemModel& system,
                           const Realizations& spins, const RunOptions& options) {
  std::vector<PulseElement> pulses;
  for (auto i : block.elements) pulses.push_back(seq.elements[i]);

  std::set<double> cuts = {block.seg_start, block.seg_stop};
  for (const auto& p : pulses) {
    for (double t : {p.start - 20.0 * p.rise, p.start, p.start + 20.0 * p.rise,
                     p.stop() - 20.0 * p.rise, p.stop(), p.stop() + 20.0 * p.rise})
      if (t > block.seg_start && t < block.seg_stop) cuts.insert(t);
  }
  const std::vector<double> grid(cuts.begin(), cuts.end());
  auto scattering_on = [&](double t0, double t1) {
    return std::any_of(pulses.begin(), pulses.end(), [&](const PulseElement& p) {
      return t0 >= p.start - 1e-12 && t1 <= p.stop() + 1e-12;
    });
  };

  std::array<CMatrix<2>, 4> basis;
  basis[0] << 1, 0, 0, 0;
  basis[1] << 0, 0, 0, 1;
  basis[2] << 0.5, 0.5, 0.5, 0.5;
  basis[3] << complex(0.5, 0), complex(0, -0.5), complex(0, 0.5), complex(0.5, 0);

  std::vector<std::array<CMatrix<2>, 4>> results(spins.values.size());
  parallel_for(spins.values.size(), options.threads, [&](std::size_t s) {
    const auto red = reduce_raman_to_two_level(pulses, system.scheme, system.rates, options.raman,
                                               spins.values[s]);
    const std::vector<CollapseChannel> none;
    for (int k = 0; k < 4; ++k) {
      CMatrix<2> rho = basis[k];
      for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
        const double span[2] = {grid[g], grid[g + 1]};
        const auto& ch = scattering_on(span[0], span[1]) ? red.channels : none;
        rho = evolve<2>(rho, red.hamiltonian, ch, span, options.evolve).states.back();
      }
      results[s][k] = rho;
    }
  });
  GroundMap map;
  for (auto& m : map.images) m.setZero();
  for (std::size_t s = 0; s < results.size(); ++s)
    for (int k = 0; k < 4; ++k) map.images[k] += spins.weights[s] * results[s][k];
  return map;
}

struct RealizationOutput {
  std::vector<Histogram> windows;
  double readout = 0.0;
  Eigen::Vector2d ground = Eigen::Vector2d::Zero();
};

}  // namespace

ExperimentResult run_experiment(const PulseSequence& seq, const SystemModel& system,
                                const NoiseModel& noise, const RunOptions& options) {
  seq.validate();
  if (!(options.bin_width > 0.0)) throw std::invalid_argument("run_experiment: bin width must be > 0");
  const auto blocks = make_blocks(seq);
  const auto optical = optical_realizations(noise);
  const auto channels = build_collapse_channels(system.rates, system.scheme, system.env);

  ExperimentResult result;
  std::vector<GroundMap> maps(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].kind == Block::photocreation)
      result.efficiency = seq.elements[blocks[k].elements[0]].as<PhotocreationPulse>().efficiency;
    if (blocks[k].kind != Block::raman) continue;
    maps[k] = raman_ground_map(seq, blocks[k], system, spin_realizations(noise), options);
  }

  std::vector<RealizationOutput> outputs(optical.values.size());
  parallel_for(optical.values.size(), options.threads, [&](std::size_t r) {
    const QuasiStaticShifts shifts{optical.values[r], 0.0};
    RealizationOutput& out = outputs[r];
    DensityMatrix rho = thermal_state(system);
    Eigen::Vector4d frame = Eigen::Vector4d::Zero();

    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Block& b = blocks[k];
      if (b.kind == Block::photocreation) {
        rho.setZero();
        rho(g1, g1) = rho(g2, g2) = 0.5;
        continue;
      }
      if (b.kind == Block::raman) {
        const RamanPulse& raman = seq.elements[b.elements[0]].as<RamanPulse>();
        const Eigen::Vector4d next = raman_frame(system.scheme, raman).energies;
        change_frame(rho, frame, next, b.seg_start);
        frame = next;
        CMatrix<2> ground = rho.topLeftCorner<2, 2>();
        ground /= ground.trace();
        rho.setZero();
        rho.topLeftCorner<2, 2>() = maps[k].apply(ground);
        continue;
      }
      const PulseElement& e = seq.elements[b.elements[0]];
      const DriveTerm drive = resonant_drive(system, e.as<ResonantPulse>(),
                                             Envelope{e.start, e.stop(), e.rise, 1});
      const RotatingFrame next = RotatingFrame::anchored(system.scheme, drive);
      change_frame(rho, frame, next.energies, b.seg_start);
      frame = next.energies;
      const auto h = build_hamiltonian(system.scheme, std::span(&drive, 1), next, shifts);

      std::vector<double> grid = {b.seg_start};
      for (double t : uniform_grid(e.start, e.stop(), options.bin_width)) grid.push_back(t);
      grid.push_back(b.seg_stop);
      const auto traj = evolve<4>(rho, h, channels, grid, options.evolve);

      const double bins = std::floor(e.duration / options.bin_width + 1e-9);
      if (bins >= 1.0)
        out.windows.push_back(
            fluorescence_flux(traj, e.start, e.start + bins * options.bin_width, options.bin_width));
      else
        out.windows.emplace_back();
      if (b.readout >= 0) {
        out.readout = traj.emitted_wg(grid.size() - 2) - traj.emitted_wg(1);
        out.ground << traj.states[1](g1, g1).real(), traj.states[1](g2, g2).real();
      }
      rho = traj.states.back();
    }
  });

  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const double w = optical.weights[r] * result.efficiency;
    const auto& out = outputs[r];
    if (r == 0) {
      result.windows = out.windows;
      for (auto& h : result.windows) h.counts.setZero();
    }
    for (std::size_t k = 0; k < out.windows.size(); ++k) result.windows[k].counts += w * out.windows[k].counts;
    result.readout += w * out.readout;
    result.ground_at_readout += optical.weights[r] * out.ground;
  }
  return result;
}

CMatrix<4> resonant_generator(const SystemModel& system, const ResonantPulse& pulse,
                              double optical_shift) {
  const DriveTerm drive = resonant_drive(system, pulse, Envelope{});
  const auto frame = RotatingFrame::anchored(system.scheme, drive);
  return build_hamiltonian(system.scheme, std::span(&drive, 1), frame, {optical_shift, 0.0})(0.0);
}

double lindblad_pumping_rate(const SystemModel& system, const ResonantPulse& probe,
                             double optical_shift) {
  const auto channels = build_collapse_channels(system.rates, system.scheme, system.env);
  const auto l = liouvillian<4>(resonant_generator(system, probe, optical_shift), channels);
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(l, false);
  std::vector<double> rates;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) rates.push_back(-eig.eigenvalues()[i].real());
  std::sort(rates.begin(), rates.end());
  // rates[0] is the steady state.
  return rates.at(1);
}

double steady_state_pumped_population(const SystemModel& system, const ResonantPulse& probe,
                                      double sigma, int nodes) {
  const auto channels = build_collapse_channels(system.rates, system.scheme, system.env);
  const int addressed = system.scheme.transition(probe.target).lower;
  const int other = addressed == g1 ? g2 : g1;
  return gauss_average(
      [&](double shift) {
        return steady_state<4>(resonant_generator(system, probe, shift), channels)(other, other).real();
      },
      sigma, nodes);
}

Eigen::MatrixXd raman_populations_full(const SystemModel& system, const PulseElement& pulse,
                                       const RamanCalibration& cal,
                                       std::span<const double> times,
                                       const EvolveOptions& options) {
  const auto& raman = pulse.as<RamanPulse>();
  const double omega = raman_effective_coupling(raman.power, raman.detuning, cal);
  const double tone = std::sqrt(2.0 * raman.detuning * omega);
  const auto tones = raman_tones(raman, system.scheme, tone,
                                 Envelope{pulse.start, pulse.stop(), pulse.rise, 1});
  const auto h = build_hamiltonian(system.scheme, tones, raman_frame(system.scheme, raman));
  const auto channels = build_collapse_channels(system.rates, system.scheme, system.env);
  DensityMatrix rho0 = DensityMatrix::Zero();
  rho0(g1, g1) = 1.0;
  const auto traj = evolve<4>(rho0, h, channels, times, options);
  Eigen::MatrixXd pops(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t i = 0; i < times.size(); ++i) {
    pops(static_cast<Eigen::Index>(i), 0) = traj.states[i](g1, g1).real();
    pops(static_cast<Eigen::Index>(i), 1) = traj.states[i](g2, g2).real();
  }
  return pops;
}

Eigen::MatrixXd raman_populations_reduced(const SystemModel& system, const PulseElement& pulse,
                                          const RamanCalibration& cal,
                                          std::span<const double> times,
                                          const EvolveOptions& options) {
  const auto red = reduce_raman_to_two_level(pulse, system.scheme, system.rates, cal);
  auto channels = red.channels;
  CMatrix<2> rho0 = CMatrix<2>::Zero();
  rho0(0, 0) = 1.0;
  const auto traj = evolve<2>(rho0, red.hamiltonian, channels, times, options);
  Eigen::MatrixXd pops(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t i = 0; i < times.size(); ++i) {
    pops(static_cast<Eigen::Index>(i), 0) = traj.states[i](0, 0).real();
    pops(static_cast<Eigen::Index>(i), 1) = traj.states[i](1, 1).real();
  }
  return pops;
}

Histogram add_counting_noise(const Histogram& hist, double counts_per_unit, std::uint64_t seed,
                             std::uint64_t stream) {
  if (!(counts_per_unit > 0.0)) throw std::invalid_argument("counting noise: scale must be > 0");
  const RandomStream rng(seed, stream);
  Histogram out = hist;
  out.background = hist.background * counts_per_unit;
  for (Eigen::Index i = 0; i < hist.size(); ++i)
    out.counts[i] = rng.poisson(static_cast<std::uint64_t>(i), hist.counts[i] * counts_per_unit);
  return out;
}

}  // namespace qdspin
