// Command-line front end: simulate, calibrate, monitor, assess, diagnose, replay.
//
// Exit codes: 0 success, 2 input or schema error, 3 numerical failure,
// 4 fixed-point non-convergence under --strict.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbmu/damage.hpp"
#include "hbmu/diagnostics.hpp"
#include "hbmu/errors.hpp"
#include "hbmu/gibbs.hpp"
#include "hbmu/io.hpp"
#include "hbmu/synthetic.hpp"

#ifndef HBMU_VERSION
#define HBMU_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace hbmu;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitStrict = 4;

struct Options {
  std::string algorithm = "exact";
  long samples = 10000;
  std::optional<std::uint64_t> seed;
  int chains = 1;
  std::string sparse = "off";
  std::string burnin = "auto";
  bool strict = false;
  std::string out;

  std::string spec;
  std::string model;
  std::string data;
  std::string theta_hat;
  std::string calibration;
  std::string pairs;
  std::vector<std::string> chain_files;
  long warmup = -1;
  bool inject_during_burnin = false;
  bool laplace = false;
  bool no_phi = false;
  std::string manifest;
};

// Everything a subcommand reports back for the manifest.
struct Run {
  RunManifest manifest;
  long warnings = 0;
};

std::optional<long> parse_burnin(const std::string& s) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw InputError("--burnin must be 'auto' or a non-negative integer, got '" + s + "'");
}

bool parse_on_off(const std::string& s, const std::string& flag) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw InputError(flag + " must be 'on' or 'off', got '" + s + "'");
}

void add_input(Run& run, const fs::path& p) {
  run.manifest.inputs.emplace_back(fs::absolute(p).lexically_normal().string(), sha256_file(p));
}

void add_output(Run& run, const fs::path& out, const fs::path& file) {
  run.manifest.outputs.push_back(fs::relative(file, out).generic_string());
}

GibbsConfig gibbs_config(const Options& o) {
  GibbsConfig c;
  c.algorithm = parse_algorithm(o.algorithm);
  if (o.samples < 1) throw InputError("--samples must be at least 1");
  c.n_samples = o.samples;
  c.seed = o.seed.value_or(0);
  if (o.chains < 1) throw InputError("--chains must be at least 1");
  c.n_chains = o.chains;
  c.sparse_mode = parse_on_off(o.sparse, "--sparse");
  c.store_phi = !o.no_phi;
  c.fixed_point.throw_on_failure = false;
  return c;
}

Json config_json(const GibbsConfig& c) {
  return Json{{"algorithm", to_string(c.algorithm)}, {"samples", c.n_samples},
              {"seed", c.seed},                      {"chains", c.n_chains},
              {"sparse", c.sparse_mode},             {"beta_init", c.beta_init},
              {"store_phi", c.store_phi},            {"fixed_point_tol", c.fixed_point.tol},
              {"fixed_point_max_iter", c.fixed_point.max_iter}};
}

// Timing lives in the manifest so the chain files themselves are reproducible.
void write_chain_output(Run& run, const fs::path& out, Chain chain, const std::string& stem,
                        const Json& extra = {}) {
  run.manifest.timings[stem + "_seconds"] = chain.meta.elapsed_seconds;
  run.warnings += chain.meta.fixed_point_warnings;
  chain.meta.elapsed_seconds = 0.0;
  const fs::path csv = out / (stem + ".csv");
  write_chain(chain, csv, extra);
  add_output(run, out, csv);
  add_output(run, out, out / (stem + ".json"));
}

void cmd_simulate(const Options& o, Run& run) {
  const fs::path out(o.out);
  const Json spec_json = read_json_file(o.spec);
  add_input(run, o.spec);
  BenchmarkSpec spec = benchmark_spec_from_json(spec_json);
  if (o.seed) spec.seed = *o.seed;
  const StructuralModel model = build_shear_building(spec);
  const Vector theta_true = apply_damage(Vector::Ones(model.n_theta()), spec.damage);
  Rng rng(spec.seed, 0);
  auto [data, truth] = simulate_modal_data(model, theta_true, spec, rng);
  write_json_file(out / "model.json", model_to_json(model));
  write_json_file(out / "dataset.json", dataset_to_json(data));
  write_json_file(out / "ground_truth.json", truth_to_json(truth));
  for (const char* f : {"model.json", "dataset.json", "ground_truth.json"})
    add_output(run, out, out / f);
  run.manifest.seed = spec.seed;
  run.manifest.config = Json{{"spec", benchmark_spec_to_json(spec)}};
}

void cmd_calibrate(const Options& o, Run& run) {
  const fs::path out(o.out);
  const StructuralModel model = model_from_json(read_json_file(o.model));
  add_input(run, o.model);
  const ModalDataset data = dataset_from_json(read_json_file(o.data));
  add_input(run, o.data);
  data.check_against(model.n_dof());
  GibbsConfig config = gibbs_config(o);
  if (!o.theta_hat.empty()) {
    config.theta_hat = vector_from_json(read_json_file(o.theta_hat), "$");
    add_input(run, o.theta_hat);
  }
  const std::optional<long> burn = parse_burnin(o.burnin);
  run.manifest.seed = config.seed;
  run.manifest.config = config_json(config);

  if (config.n_chains == 1) {
    write_chain_output(run, out, calibrate(data, model, config), "chain");
    return;
  }
  if (config.sparse_mode && !config.theta_hat)
    throw InputError("sparse calibration needs --theta-hat");
  ParallelRun pr = run_parallel_chains(data, model, config, burn);
  for (std::size_t c = 0; c < pr.chains.size(); ++c)
    write_chain_output(run, out, std::move(pr.chains[c]), "chain_" + std::to_string(c + 1));
  write_json_file(out / "ergodicity.json", ergodicity_to_json(pr.report));
  add_output(run, out, out / "ergodicity.json");
  if (pr.report.degenerate)
    std::cerr << "warning: chains are identical; split R-hat is undefined\n";
}

void cmd_monitor(const Options& o, Run& run) {
  const fs::path out(o.out);
  const StructuralModel model = model_from_json(read_json_file(o.model));
  add_input(run, o.model);
  const ModalDataset data = dataset_from_json(read_json_file(o.data));
  add_input(run, o.data);
  data.check_against(model.n_dof());
  const Chain calib = read_chain(o.calibration);
  add_input(run, o.calibration);
  GibbsConfig config = gibbs_config(o);
  MonitorOptions mo;
  mo.calibration_burn_in = parse_burnin(o.burnin);
  if (o.warmup >= 0) mo.warmup = o.warmup;
  mo.inject_during_burnin = o.inject_during_burnin;
  mo.laplace_shortcut = o.laplace;
  run.manifest.seed = config.seed;
  Json cfg = config_json(config);
  cfg["sparse"] = true;
  cfg["burnin"] = o.burnin;
  cfg["warmup"] = o.warmup;
  cfg["inject_during_burnin"] = o.inject_during_burnin;
  cfg["laplace"] = o.laplace;
  run.manifest.config = cfg;

  MonitorResult r = monitor(data, model, calib, config, mo);
  if (!r.calibration_stationary)
    std::cerr << "warning: calibration chain never passed the burn-in scan; its second half was used\n";
  const Json extra{{"calibration_burn_in", r.calibration_burn_in},
                   {"calibration_stationary", r.calibration_stationary},
                   {"warmup", r.warmup},
                   {"calibration_mean", vector_to_json(r.calibration_mean)}};
  write_chain_output(run, out, std::move(r.chain), "monitor_chain", extra);
  write_pairs_csv(r.pairs, out / "pairs.csv");
  add_output(run, out, out / "pairs.csv");
}

void cmd_assess(const Options& o, Run& run) {
  const fs::path out(o.out);
  const PairedSamples pairs = read_pairs_csv(o.pairs);
  add_input(run, o.pairs);
  const DamageCurves curves = damage_probability(pairs);
  write_curves_csv(curves, out / "curves.csv");
  Json summary = curves_summary(curves);
  const DamageCurves at_02 = damage_probability(pairs, Vector::Constant(1, 0.2));
  for (Eigen::Index j = 0; j < at_02.probabilities.rows(); ++j)
    summary["substructures"][static_cast<std::size_t>(j)]["p_loss_0.2"] = at_02.probabilities(j, 0);
  write_json_file(out / "curves.json", summary);
  const auto med = median_loss(curves);
  {
    std::ofstream t(out / "median_loss.csv");
    t << "label,median_loss,bracketed\n";
    for (std::size_t j = 0; j < med.size(); ++j)
      t << curves.labels[j] << ',' << format_double(med[j].value) << ','
        << (med[j].bracketed ? "true" : "false") << '\n';
    if (!t) throw InputError("cannot write " + (out / "median_loss.csv").string());
  }
  for (const char* f : {"curves.csv", "curves.json", "median_loss.csv"}) add_output(run, out, out / f);
  for (std::size_t j = 0; j < med.size(); ++j)
    std::cout << curves.labels[j] << "  median loss " << format_double(med[j].value)
              << (med[j].bracketed ? "" : " (not bracketed)") << '\n';
}

// One CSV per theta component, columns iter then one per chain.
void write_traces(Run& run, const fs::path& out, const std::vector<Chain>& chains) {
  const Chain& first = chains.front();
  long n = first.size();
  for (const auto& c : chains) n = std::min(n, c.size());
  for (int j = 0; j < first.theta.cols(); ++j) {
    const fs::path p = out / "traces" / (first.theta_labels[static_cast<std::size_t>(j)] + ".csv");
    fs::create_directories(p.parent_path());
    std::ofstream t(p);
    t << "iter";
    for (std::size_t c = 0; c < chains.size(); ++c) t << ",chain_" << c + 1;
    t << '\n';
    for (long r = 0; r < n; ++r) {
      t << r;
      for (const auto& c : chains) t << ',' << format_double(c.theta(r, j));
      t << '\n';
    }
    if (!t) throw InputError("cannot write " + p.string());
    add_output(run, out, p);
  }
}

void cmd_diagnose(const Options& o, Run& run) {
  const fs::path out(o.out);
  if (o.chain_files.empty()) throw InputError("diagnose needs at least one --chain");
  std::vector<Chain> chains;
  for (const auto& f : o.chain_files) {
    chains.push_back(read_chain(f));
    add_input(run, f);
    if (chains.back().theta_labels != chains.front().theta_labels)
      throw InputError(f + ": parameter labels differ from " + o.chain_files.front());
  }
  const std::optional<long> fixed = parse_burnin(o.burnin);
  run.manifest.config = Json{{"burnin", o.burnin}, {"chains", o.chain_files.size()}};

  const auto& labels = chains.front().theta_labels;
  Json per_chain = Json::array();
  long burn = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const BurnInResult b = detect_burn_in(chains[c]);
    per_chain.push_back(burn_in_to_json(b, labels));
    burn = std::max(burn, b.stationary ? b.index : chains[c].size() / 2);
    const std::string stem = chains.size() == 1 ? "burnin_trace" : "burnin_trace_" + std::to_string(c + 1);
    write_burn_in_trace(b, labels, out / (stem + ".csv"));
    add_output(run, out, out / (stem + ".csv"));
    std::cout << o.chain_files[c] << ": burn-in " << b.index
              << (b.stationary ? "" : " (never stationary)") << '\n';
    if (!b.stationary) std::cerr << "warning: " << o.chain_files[c] << " never passed the burn-in scan\n";
  }
  if (fixed) burn = *fixed;
  Json report{{"chains", per_chain}, {"burn_in_used", burn}};
  write_traces(run, out, chains);

  if (chains.size() > 1) {
    long n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (burn > n - 4) throw InputError("burn-in leaves fewer than four draws per chain");
    const ErgodicityReport er = ergodicity_report(chains, burn);
    report["ergodicity"] = ergodicity_to_json(er);
    if (er.degenerate) std::cerr << "warning: chains are identical; split R-hat is undefined\n";
    for (Eigen::Index j = 0; j < er.rhat.size(); ++j)
      std::cout << labels[static_cast<std::size_t>(j)] << "  split R-hat "
                << format_double(er.rhat[j]) << '\n';
  }
  write_json_file(out / "diagnosis.json", report);
  add_output(run, out, out / "diagnosis.json");
}

void add_shared(CLI::App* sub, Options& o, bool sampling) {
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_flag("--strict", o.strict, "Exit 4 when any fixed point stopped unconverged");
  sub->add_option("--burnin", o.burnin, "Burn-in: auto or a sample count");
  if (!sampling) return;
  sub->add_option("--algorithm", o.algorithm, "exact | marginal");
  sub->add_option("--samples", o.samples, "Samples per chain");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--chains", o.chains, "Independent chains");
  sub->add_option("--sparse", o.sparse, "Sparse pseudo-datum prior: on | off");
  sub->add_flag("--no-phi", o.no_phi, "Do not store mode-shape columns");
}

int run_command(const std::string& name, const std::vector<std::string>& args);

int replay(const Options& o) {
  const RunManifest m = manifest_from_json(read_json_file(o.manifest));
  for (const auto& [path, digest] : m.inputs)
    if (sha256_file(path) != digest) throw InputError("input changed since the run: " + path);
  if (!m.config.contains("args")) throw InputError("missing required field $.config.args");
  auto args = m.config.at("args").get<std::vector<std::string>>();
  args.push_back("--out");
  args.push_back(o.out);
  return run_command(m.command, args);
}

int execute(int argc, char** argv);

int run_command(const std::string& name, const std::vector<std::string>& args) {
  std::vector<std::string> full{"hbmu", name};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> ptrs;
  for (auto& s : full) ptrs.push_back(s.data());
  return execute(static_cast<int>(ptrs.size()), ptrs.data());
}

int execute(int argc, char** argv) {
  CLI::App app{"Hierarchical sparse Bayesian model updating from modal data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HBMU_VERSION);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic model and noisy modal dataset");
  sim->add_option("--spec", o.spec, "Benchmark spec JSON")->required();
  sim->add_option("--seed", o.seed, "Override the benchmark file's seed");
  sim->add_option("--out", o.out, "Output directory")->required();

  auto* cal = app.add_subcommand("calibrate", "Sample the calibration-stage posterior");
  cal->add_option("--model", o.model, "Model JSON")->required();
  cal->add_option("--data", o.data, "Dataset JSON")->required();
  cal->add_option("--theta-hat", o.theta_hat, "JSON array, the pseudo-datum for --sparse on");
  add_shared(cal, o, true);

  auto* mon = app.add_subcommand("monitor", "Sample the monitoring stage against a calibration chain");
  mon->add_option("--model", o.model, "Model JSON")->required();
  mon->add_option("--data", o.data, "Monitoring dataset JSON")->required();
  mon->add_option("--calibration", o.calibration, "Calibration chain CSV")->required();
  mon->add_option("--warmup", o.warmup, "Iterations before pool draws are injected");
  mon->add_flag("--inject-during-burnin", o.inject_during_burnin,
                "Inject pool draws from the first iteration");
  mon->add_flag("--laplace", o.laplace, "Use the calibration mean as the pseudo-datum throughout");
  add_shared(mon, o, true);

  auto* assess_cmd = app.add_subcommand("assess", "Damage probability curves from paired samples");
  assess_cmd->add_option("--pairs", o.pairs, "Paired samples CSV")->required();
  assess_cmd->add_option("--out", o.out, "Output directory")->required();

  auto* dia = app.add_subcommand("diagnose", "Burn-in scan, traces and split R-hat");
  dia->add_option("--chain", o.chain_files, "Chain CSV (repeat for several chains)")->required();
  add_shared(dia, o, false);

  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rep->add_option("manifest", o.manifest, "manifest.json")->required();
  rep->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "replay") return replay(o);

  // Arguments as given, minus --out, so a replay can point elsewhere.
  std::vector<std::string> args;
  for (int i = 2; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0) continue;
    args.push_back(a);
  }
  // Input paths are recorded absolute so the manifest works from any directory.
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    for (const char* f : {"--spec", "--model", "--data", "--theta-hat", "--calibration", "--pairs", "--chain"})
      if (args[i] == f) args[i + 1] = fs::absolute(args[i + 1]).lexically_normal().string();

  const fs::path out(o.out);
  fs::create_directories(out);
  Run run;
  run.manifest.command = name;
  run.manifest.tool_version = HBMU_VERSION;
  run.manifest.timings = Json::object();
  const auto t0 = std::chrono::steady_clock::now();
  if (name == "simulate") cmd_simulate(o, run);
  else if (name == "calibrate") cmd_calibrate(o, run);
  else if (name == "monitor") cmd_monitor(o, run);
  else if (name == "assess") cmd_assess(o, run);
  else cmd_diagnose(o, run);
  run.manifest.timings["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (run.manifest.config.is_null()) run.manifest.config = Json::object();
  run.manifest.config["args"] = args;
  run.manifest.timings["fixed_point_warnings"] = run.warnings;
  write_json_file(out / "manifest.json", manifest_to_json(run.manifest));

  if (run.warnings > 0) {
    std::cerr << "warning: " << run.warnings << " fixed-point solves stopped before converging\n";
    if (o.strict) return kExitStrict;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return execute(argc, argv);
  } catch (const AtIteration<NumericalError>& e) {
    std::cerr << "numerical error at iteration " << e.iteration() << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const AtIteration<ConvergenceError>& e) {
    std::cerr << "fixed point did not converge at iteration " << e.iteration() << ": " << e.what()
              << '\n';
    return kExitStrict;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  }
}
