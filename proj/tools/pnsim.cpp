// Command line front end: simulate pulse trains, reconstruct photon-number
// distributions from pulse-area histograms, sweep pump power, and estimate
// arm efficiencies from coincidences. Every output file carries the tool
// version, the seed, and a hash of the effective configuration.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnsim/config.hpp"
#include "pnsim/csv.hpp"
#include "pnsim/experiment.hpp"
#include "pnsim/metrics.hpp"
#include "pnsim/peak_fit.hpp"
#include "pnsim/reconstruct.hpp"
#include "pnsim/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pulses;
  int workers = 1;
};

void add_common(CLI::App* sub, CommonArgs& args, bool pulses_override) {
  sub->add_option("--config", args.config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args.out_dir, "output directory (created if missing)");
  sub->add_option("--seed", args.seed, "override the configured seed");
  sub->add_option("--workers", args.workers, "worker threads")->check(CLI::Range(1, 64));
  if (pulses_override)
    sub->add_option("--pulses", args.pulses, "override the configured pulse count");
}

pnsim::RunConfig load_effective(const CommonArgs& args) {
  pnsim::RunConfig cfg = pnsim::load_config(args.config_path);
  if (args.seed) cfg.experiment.seed = *args.seed;
  if (args.pulses) cfg.experiment.num_pulses = *args.pulses;
  cfg.experiment.validate();
  return cfg;
}

ordered_json meta_json(const pnsim::MetaInfo& meta) {
  ordered_json m;
  m["tool"] = std::string(pnsim::kToolName);
  m["version"] = meta.version;
  m["seed"] = meta.seed;
  m["config_hash"] = meta.config_hash;
  return m;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

int cmd_simulate(const CommonArgs& args, bool with_records) {
  const pnsim::RunConfig cfg = load_effective(args);
  const pnsim::MetaInfo meta{std::string(pnsim::kVersion), cfg.experiment.seed,
                             pnsim::config_hash(cfg)};
  fs::create_directories(args.out_dir);

  const pnsim::ExperimentResult res =
      pnsim::run_experiment(cfg.experiment, pnsim::RunOptions{args.workers, with_records});
  const pnsim::ExperimentSummary& sum = res.summary;

  const fs::path out(args.out_dir);
  pnsim::write_histogram_csv((out / "trigger_hist.csv").string(), sum.trigger_height, meta);
  pnsim::write_histogram_csv((out / "idler_hist_unconditioned.csv").string(), sum.idler_area,
                             meta);
  for (int n = 1; n <= cfg.n_max; ++n)
    pnsim::write_histogram_csv(
        (out / ("idler_hist_label_" + std::to_string(n) + ".csv")).string(),
        sum.idler_area_by_label[static_cast<std::size_t>(n)], meta);
  if (with_records) pnsim::write_records_csv((out / "records.csv").string(), res.records, meta);

  ordered_json j;
  j["meta"] = meta_json(meta);
  j["num_pulses"] = sum.num_pulses;
  j["unlabeled"] = sum.unlabeled;
  ordered_json labels = ordered_json::array();
  for (int n = 1; n <= cfg.n_max; ++n) {
    const std::uint64_t c = sum.label_counts[static_cast<std::size_t>(n)];
    ordered_json e;
    e["label"] = n;
    e["events"] = c;
    e["rate_hz"] = pnsim::generation_rate(c, sum.num_pulses, cfg.experiment.rep_rate_hz);
    labels.push_back(e);
  }
  j["labels"] = labels;
  j["trigger_counts"] = sum.trigger_counts;
  j["idler_counts"] = sum.idler_counts;
  j["coincidences"]["pulses"] = sum.coincidences.pulses;
  j["coincidences"]["singles_1"] = sum.coincidences.singles_1;
  j["coincidences"]["singles_2"] = sum.coincidences.singles_2;
  j["coincidences"]["coincidences"] = sum.coincidences.coincidences;
  write_json(out / "summary.json", j);
  std::cout << "simulate: " << sum.num_pulses << " pulses, outputs in " << out.string() << "\n";
  return 0;
}

int cmd_klyshko(const CommonArgs& args) {
  const pnsim::RunConfig cfg = load_effective(args);
  const pnsim::MetaInfo meta{std::string(pnsim::kVersion), cfg.experiment.seed,
                             pnsim::config_hash(cfg)};
  fs::create_directories(args.out_dir);

  const pnsim::ExperimentResult res =
      pnsim::run_experiment(cfg.experiment, pnsim::RunOptions{args.workers, false});
  const pnsim::CoincidenceCounts& c = res.summary.coincidences;

  ordered_json j;
  j["meta"] = meta_json(meta);
  j["pulses"] = c.pulses;
  j["singles_1"] = c.singles_1;
  j["singles_2"] = c.singles_2;
  j["coincidences"] = c.coincidences;
  const pnsim::KlyshkoEstimate raw = pnsim::klyshko_efficiency(c);
  j["raw"]["eta1"] = raw.eta1;
  j["raw"]["eta2"] = raw.eta2;
  try {
    const pnsim::KlyshkoEstimate cor = pnsim::klyshko_dark_corrected(
        c, cfg.experiment.trigger.dark_mean, cfg.experiment.monitor.dark_mean);
    j["dark_corrected"]["eta1"] = cor.eta1;
    j["dark_corrected"]["eta2"] = cor.eta2;
  } catch (const std::exception& e) {
    j["dark_corrected_error"] = e.what();
  }
  write_json(fs::path(args.out_dir) / "klyshko.json", j);
  std::cout << "klyshko: eta1=" << raw.eta1 << " eta2=" << raw.eta2 << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  pnsim::RunConfig cfg = load_effective(args);
  if (!cfg.sweep) throw pnsim::ConfigError("sweep: configuration has no 'sweep' section");
  const pnsim::MetaInfo meta{std::string(pnsim::kVersion), cfg.experiment.seed,
                             pnsim::config_hash(cfg)};
  fs::create_directories(args.out_dir);

  pnsim::SweepConfig sw;
  sw.base = cfg.experiment;
  sw.powers = cfg.sweep->powers;
  sw.pulses_per_point = cfg.sweep->pulses_per_point;
  sw.n_max = cfg.sweep->n_max;
  sw.workers = args.workers;
  bool calibrated = false;
  if (cfg.sweep->slope > 0.0) {
    sw.slope = cfg.sweep->slope;
  } else {
    const double target_p = cfg.sweep->target_rate_hz / cfg.experiment.rep_rate_hz;
    sw.slope = pnsim::calibrate_slope(cfg.experiment.source, cfg.experiment.trigger,
                                      cfg.experiment.windows, cfg.experiment.classification,
                                      target_p, cfg.sweep->anchor_power);
    calibrated = true;
  }

  const pnsim::SweepResult res = pnsim::sweep(sw);

  const fs::path out(args.out_dir);
  {
    std::ofstream os(out / "sweep.csv");
    if (!os) throw std::runtime_error("cannot open for writing: " + (out / "sweep.csv").string());
    os << meta.comment_line() << "\n";
    os << "power,mu,n,fidelity_signed,fidelity_clamped,fidelity_oracle,rate_hz\n";
    for (const auto& e : res.entries)
      os << pnsim::format_double(e.power) << ',' << pnsim::format_double(e.mu) << ',' << e.n
         << ',' << pnsim::format_double(e.fidelity_signed) << ','
         << pnsim::format_double(e.fidelity_clamped) << ','
         << pnsim::format_double(e.fidelity_oracle) << ',' << pnsim::format_double(e.rate_hz)
         << "\n";
    if (!os) throw std::runtime_error("write failed: " + (out / "sweep.csv").string());
  }

  ordered_json j;
  j["meta"] = meta_json(meta);
  j["slope"] = res.slope;
  j["calibrated"] = calibrated;
  if (calibrated) {
    j["calibration"]["target_rate_hz"] = cfg.sweep->target_rate_hz;
    j["calibration"]["anchor_power"] = cfg.sweep->anchor_power;
  }
  j["powers"] = sw.powers;
  j["pulses_per_point"] = sw.pulses_per_point;
  j["point_seeds"] = res.point_seeds;
  write_json(out / "metadata.json", j);
  std::cout << "sweep: " << sw.powers.size() << " points, slope " << res.slope << "\n";
  return 0;
}

struct ReconstructArgs {
  std::string hist_path;
  std::string out_dir = ".";
  double eta = 0.0;
  double dark = 0.0;
  int nmax = 0;
  std::string mode = "signed";
  int npeaks = 0;  // 0: nmax + 1
  double ghint = 1.0;
  bool shared_spacing = false;
};

int cmd_reconstruct(const ReconstructArgs& args) {
  const int npeaks = args.npeaks > 0 ? args.npeaks : args.nmax + 1;
  std::ostringstream canon;
  canon << "reconstruct eta=" << pnsim::format_double(args.eta)
        << " dark=" << pnsim::format_double(args.dark) << " nmax=" << args.nmax
        << " mode=" << args.mode << " npeaks=" << npeaks
        << " ghint=" << pnsim::format_double(args.ghint)
        << " shared=" << (args.shared_spacing ? 1 : 0);
  const pnsim::MetaInfo meta{std::string(pnsim::kVersion), 0,
                             pnsim::to_hex(pnsim::fnv1a(canon.str()))};
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  const pnsim::Histogram h = pnsim::read_histogram_csv(args.hist_path);
  pnsim::FitOptions opt;
  opt.shared_spacing = args.shared_spacing;
  const pnsim::PeakFit fit = pnsim::fit_peaks(h, npeaks, args.ghint, opt);

  ordered_json j;
  j["meta"] = meta_json(meta);
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  j["iterations"] = fit.iterations;
  j["residual_norm"] = fit.residual_norm;
  if (!fit.message.empty()) j["message"] = fit.message;
  ordered_json peaks = ordered_json::array();
  for (const auto& p : fit.peaks) {
    ordered_json e;
    e["center"] = p.center;
    e["sigma"] = p.sigma;
    e["area"] = p.area;
    peaks.push_back(e);
  }
  j["peaks"] = peaks;
  j["condition_infinity"] = pnsim::condition_report(args.eta, args.dark, args.nmax);
  write_json(out / "fit_report.json", j);

  if (!fit.converged) {
    std::cerr << "reconstruct: peak fit did not converge: " << fit.message << "\n";
    return 3;
  }

  const pnsim::PhotonNumberDistribution detected = pnsim::detected_distribution(fit);
  const pnsim::PhotonNumberDistribution rec =
      args.mode == "constrained"
          ? pnsim::invert_counts_constrained(detected, args.eta, args.dark, args.nmax)
          : pnsim::invert_counts(detected, args.eta, args.dark, args.nmax);
  pnsim::write_distribution_csv((out / "distribution.csv").string(), rec, meta);
  std::cout << "reconstruct: " << npeaks << " peaks, outputs in " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photon number statistics: simulation and reconstruction"};
  app.set_version_flag("--version", std::string(pnsim::kVersion));
  app.require_subcommand(1);

  CommonArgs sim_args;
  bool sim_records = false;
  CLI::App* sim = app.add_subcommand("simulate", "run a pulsed pair-source experiment");
  add_common(sim, sim_args, true);
  sim->add_flag("--records", sim_records, "also write one CSV row per pulse");

  CommonArgs kly_args;
  CLI::App* kly = app.add_subcommand("klyshko", "coincidence-based efficiency estimate");
  add_common(kly, kly_args, true);

  CommonArgs sweep_args;
  CLI::App* swp = app.add_subcommand("sweep", "pump power sweep");
  add_common(swp, sweep_args, false);

  ReconstructArgs rec_args;
  CLI::App* rec =
      app.add_subcommand("reconstruct", "photon-number distribution from a pulse-area histogram");
  rec->add_option("--hist", rec_args.hist_path, "pulse-area histogram CSV")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--out", rec_args.out_dir, "output directory (created if missing)");
  rec->add_option("--eta", rec_args.eta, "detector efficiency")
      ->required()
      ->check(CLI::Range(1e-12, 1.0));
  rec->add_option("--dark", rec_args.dark, "dark count mean per pulse")
      ->check(CLI::NonNegativeNumber);
  rec->add_option("--nmax", rec_args.nmax, "largest photon number to reconstruct")
      ->required()
      ->check(CLI::Range(0, 40));
  rec->add_option("--mode", rec_args.mode, "signed or constrained inversion")
      ->check(CLI::IsMember({"signed", "constrained"}));
  rec->add_option("--npeaks", rec_args.npeaks, "Gaussian peaks to fit (default nmax + 1)")
      ->check(CLI::Range(1, 12));
  rec->add_option("--ghint", rec_args.ghint, "initial peak spacing guess")
      ->check(CLI::PositiveNumber);
  rec->add_flag("--shared-spacing", rec_args.shared_spacing,
                "constrain peak centers to a common spacing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_args, sim_records);
    if (*kly) return cmd_klyshko(kly_args);
    if (*swp) return cmd_sweep(sweep_args);
    if (*rec) return cmd_reconstruct(rec_args);
  } catch (const pnsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
