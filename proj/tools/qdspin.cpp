#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qdspin/bundles.hpp"
#include "qdspin/config.hpp"
#include "qdspin/inference.hpp"
#include "qdspin/runner.hpp"
#include "qdspin/spectra.hpp"
#include "qdspin/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qdspin;

namespace {

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory (default: $QDSPIN_OUT_DIR/<name> or qdspin-out/<name>)");
  app->add_option("--seed", c.seed, "Master seed, overrides the config");
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
}

fs::path output_dir(const Common& c, const std::string& config_dir, const std::string& name) {
  if (!c.out.empty()) return c.out;
  if (!config_dir.empty()) return config_dir;
  const fs::path stem = fs::path(name).stem();
  if (const char* env = std::getenv("QDSPIN_OUT_DIR"); env && *env) return fs::path(env) / stem;
  return fs::path("qdspin-out") / stem;
}

/// A file path, or the name of a bundled scenario.
ScenarioConfig resolve_config(const std::string& spec) {
  if (fs::exists(spec)) return load_config(spec);
  if (bundled_configs().count(spec)) return bundled_config(spec);
  throw ConfigError({spec + ": no such file or bundled scenario"});
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int fail(const std::string& type, const std::string& message, const std::vector<std::string>& problems = {}) {
  json j = {{"error", type}, {"message", message}};
  if (!problems.empty()) j["problems"] = problems;
  std::cerr << j.dump() << "\n";
  return type == "config_error" ? 2 : 1;
}

int cmd_simulate(const std::string& kind, const std::string& config, const Common& c) {
  const auto cfg = resolve_config(config);
  if (parse_experiment_kind(kind) != cfg.kind)
    throw ConfigError({fmt::format("{}: experiment.kind is {}, not {}", cfg.name, to_string(cfg.kind), kind)});
  RunnerOptions opt{c.threads, c.seed};
  const auto out = run_scenario(cfg, opt);
  const auto dir = output_dir(c, cfg.output_dir, cfg.name);
  write_outputs(out, dir, c.format);
  std::cout << out.summary.dump(2) << "\n";
  std::cerr << "wrote " << dir.string() << "\n";
  return 0;
}

struct FitArgs {
  std::string data;
  double gamma0 = 0.0;
  double sigma_mhz = 0.0;
  double fit_start = 0.0;
  bool poisson = false;
  double period = 0.0;
};

int cmd_fit(const std::string& kind, const FitArgs& a, const Common& c) {
  const auto [header, cols] = read_csv(a.data);
  auto column = [&](std::size_t i) {
    if (i >= cols.size())
      throw std::invalid_argument(fmt::format("{}: {} fit needs at least {} columns", a.data, kind, i + 1));
    return Eigen::Map<const Eigen::VectorXd>(cols[i].data(), static_cast<Eigen::Index>(cols[i].size()))
        .eval();
  };
  RunOutput out;
  out.name = fs::path(a.data).stem().string();
  out.summary = {{"kind", kind}, {"data", a.data}};
  auto params = [](const FitResult& f) {
    json p = json::object();
    for (std::size_t i = 0; i < f.names.size(); ++i)
      p[f.names[i]] = {{"value", f.values[static_cast<Eigen::Index>(i)]},
                       {"sigma", f.sigma[static_cast<Eigen::Index>(i)]},
                       {"text", format_uncertainty(f.values[static_cast<Eigen::Index>(i)],
                                                   f.sigma[static_cast<Eigen::Index>(i)])}};
    for (const auto& [k, v] : f.derived)
      p[k] = {{"value", v.first}, {"sigma", v.second}, {"text", format_uncertainty(v.first, v.second)}};
    return json{{"parameters", p}, {"chi2_reduced", f.chi2_reduced}, {"flags", f.flags}};
  };
  if (kind == "exponential") {
    Histogram h{column(0), column(1), 0.0};
    ExponentialFitOptions fo;
    fo.fit_start = a.fit_start;
    fo.weighting = a.poisson ? Weighting::poisson : Weighting::uniform;
    const auto f = fit_exponential(h, fo);
    out.summary["fit"] = params(f);
    out.summary["fidelity_lower_bound"] = fidelity_lower_bound(h, f);
  } else if (kind == "saturation") {
    if (!(a.gamma0 > 0.0)) throw std::invalid_argument("saturation fit needs --gamma0");
    SaturationFitOptions so;
    if (cols.size() > 2) so.point_sigma = column(2);
    out.summary["fit"] =
        params(fit_saturation(column(0), column(1), a.gamma0, units::mhz_to_angular(a.sigma_mhz), so));
  } else if (kind == "ramsey") {
    out.summary["fit"] = params(fit_ramsey(column(0), column(1), cols.size() > 2 ? column(2) : Eigen::VectorXd()));
  } else if (kind == "spectrum") {
    EmissionSpectrum s;
    s.frequencies = column(0);
    s.intensity = column(1);
    s.period = a.period;
    PeakFitOptions po;
    po.poisson = a.poisson;
    const auto f = fit_spectrum_peaks(s, po);
    json peaks = json::array();
    for (const auto& p : f.peaks)
      peaks.push_back({{"center_GHz", p.peak.center}, {"center_sigma", p.center_sigma},
                       {"fwhm_GHz", p.peak.fwhm}, {"fwhm_sigma", p.fwhm_sigma},
                       {"area", p.peak.area}, {"area_sigma", p.area_sigma}});
    out.summary["peaks"] = peaks;
    out.summary["chi2_reduced"] = f.chi2_reduced;
    out.summary["warnings"] = f.warnings;
  } else {
    throw std::invalid_argument("unknown fit kind '" + kind + "' (known: exponential, saturation, ramsey, spectrum)");
  }
  out.manifest.config_name = a.data;
  out.manifest.config_hash = fmt::format("{:016x}", fnv1a64(read_file(a.data)));
  out.manifest.version = version();
  out.summary["manifest"] = out.manifest.reproducible_json();
  const auto dir = output_dir(c, "", out.name + "_fit");
  write_outputs(out, dir, c.format);
  std::cout << out.summary.dump(2) << "\n";
  return 0;
}

int cmd_reproduce(const std::string& figure, const Common& c) {
  RunnerOptions opt{c.threads, c.seed};
  const auto rep = reproduce(figure, opt);
  const auto dir = output_dir(c, "", figure);
  for (const auto& run : rep.runs) write_outputs(run, dir / run.name, c.format);
  std::ofstream(dir / "comparison.json") << rep.to_json().dump(2) << "\n";
  std::cout << figure << "\n" << rep.table();
  return 0;
}

int cmd_validate(const std::string& config) {
  const auto cfg = resolve_config(config);
  std::cout << json{{"valid", true}, {"name", cfg.name}, {"kind", to_string(cfg.kind)}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-dot spin-photon interface simulator"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  Common common;
  std::string kind, config, figure;
  FitArgs fit;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write tables, summary and manifest");
  simulate->add_option("kind", kind, "pumping | saturation | rabi | ramsey | transmission | spectrum")
      ->required()
      ->check(CLI::IsMember({"pumping", "saturation", "rabi", "ramsey", "transmission", "spectrum"}));
  simulate->add_option("--config", config, "Scenario file or bundled scenario name")->required();
  add_common(simulate, common);

  auto* fitcmd = app.add_subcommand("fit", "Fit measured data from a CSV file");
  fitcmd->add_option("kind", kind, "exponential | saturation | ramsey | spectrum")
      ->required()
      ->check(CLI::IsMember({"exponential", "saturation", "ramsey", "spectrum"}));
  fitcmd->add_option("--data", fit.data, "CSV with a header row")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--gamma0", fit.gamma0, "Total decay rate, 1/ns (saturation)");
  fitcmd->add_option("--sigma-mhz", fit.sigma_mhz, "Spectral diffusion sigma/2pi, MHz (saturation)");
  fitcmd->add_option("--fit-start", fit.fit_start, "Skip bins before this time, ns (exponential)");
  fitcmd->add_flag("--poisson", fit.poisson, "Poisson weights");
  fitcmd->add_option("--period", fit.period, "Free spectral range of folded spectra, GHz");
  add_common(fitcmd, common);

  auto* repro = app.add_subcommand("reproduce", "Rerun a figure's bundled scenarios and compare with published values");
  repro->add_option("figure", figure, "fig2 | fig3a | fig3b | fig4b | fig4c")->required();
  add_common(repro, common);

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("config", config, "Scenario file or bundled scenario name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(kind, config, common);
    if (fitcmd->parsed()) return cmd_fit(kind, fit, common);
    if (repro->parsed()) return cmd_reproduce(figure, common);
    if (validate->parsed()) return cmd_validate(config);
  } catch (const ConfigError& e) {
    return fail("config_error", "invalid configuration", e.problems());
  } catch (const DegenerateFitError& e) {
    return fail("degenerate_fit", e.what());
  } catch (const FitError& e) {
    return fail("fit_error", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what());
  }
  return 1;
}
