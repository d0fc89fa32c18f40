#include "hbmu/gibbs.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include "hbmu/errors.hpp"

namespace hbmu {

std::string to_string(Algorithm a) { return a == Algorithm::exact ? "exact" : "marginal"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "exact" || s == "1") return Algorithm::exact;
  if (s == "marginal" || s == "2") return Algorithm::marginal;
  throw InputError("unknown algorithm '" + s + "' (expected exact or marginal)");
}

SystemState Chain::state(long n) const {
  SystemState s;
  s.theta = theta.row(n).transpose();
  s.omega_sq = omega_sq.row(n).transpose();
  if (has_phi()) s.phi = phi.row(n).transpose();
  if (beta.size() > 0) s.beta = beta[n];
  return s;
}

Matrix Chain::theta_after(long from) const { return theta.bottomRows(size() - from); }

bool Chain::operator==(const Chain& o) const {
  return meta.algorithm == o.meta.algorithm && meta.seed == o.meta.seed &&
         meta.stream == o.meta.stream && meta.sparse_mode == o.meta.sparse_mode &&
         theta_labels == o.theta_labels && n_dof == o.n_dof && n_modes == o.n_modes &&
         theta == o.theta && omega_sq == o.omega_sq && phi.rows() == o.phi.rows() &&
         phi.cols() == o.phi.cols() && phi == o.phi && beta == o.beta &&
         hyper_names == o.hyper_names && hyper.rows() == o.hyper.rows() &&
         hyper.cols() == o.hyper.cols() &&
         (hyper.array() == o.hyper.array() || (hyper.array().isNaN() && o.hyper.array().isNaN()))
             .all();
}

namespace {

using Clock = std::chrono::steady_clock;

void validate(const ModalDataset& data, const StructuralModel& model, const GibbsConfig& config,
              const RunHooks& hooks) {
  data.check_against(model.n_dof());
  if (config.n_samples < 1) throw InputError("n_samples must be at least 1");
  if (!(config.beta_init > 0.0)) throw InputError("beta_init must be positive");
  if (config.sparse_mode && !config.theta_hat && !hooks.theta_hat)
    throw InputError("sparse mode needs theta_hat");
  if (config.theta_hat && config.theta_hat->size() != model.n_theta())
    throw InputError("theta_hat length must equal n_theta");
  if (config.theta_init && config.theta_init->size() != model.n_theta())
    throw InputError("theta_init length must equal n_theta");
  const auto nphi = static_cast<Eigen::Index>(model.n_dof()) * data.n_modes();
  if (hooks.clamp.phi && hooks.clamp.phi->size() != nphi)
    throw InputError("clamped phi has the wrong length");
  if (hooks.clamp.omega_sq && hooks.clamp.omega_sq->size() != data.n_modes())
    throw InputError("clamped omega_sq has the wrong length");
}

Vector initial_theta(const GibbsConfig& config, const StructuralModel& model) {
  if (config.theta_init) return *config.theta_init;
  if (config.sparse_mode && config.theta_hat) return *config.theta_hat;
  return Vector::Ones(model.n_theta());
}

Chain empty_chain(const ModalDataset& data, const StructuralModel& model,
                  const GibbsConfig& config, Algorithm algorithm, const Rng& rng) {
  Chain c;
  c.meta.algorithm = algorithm;
  c.meta.seed = rng.seed();
  c.meta.stream = rng.stream();
  c.meta.sparse_mode = config.sparse_mode;
  c.theta_labels = model.labels();
  c.n_dof = model.n_dof();
  c.n_modes = data.n_modes();
  const auto n = config.n_samples;
  c.theta.resize(n, model.n_theta());
  c.omega_sq.resize(n, data.n_modes());
  c.phi.resize(config.store_phi ? n : 0, config.store_phi ? model.n_dof() * data.n_modes() : 0);
  if (algorithm == Algorithm::exact) {
    c.beta.resize(n);
    c.hyper_names = {"eta", "rho", "b0"};
    if (config.sparse_mode)
      for (const auto& l : model.labels()) c.hyper_names.push_back("alpha_" + l);
  } else {
    c.hyper_names = {"tau", "v", "b0_phi", "b0_w", "b0_theta"};
    if (config.sparse_mode)
      for (const auto& l : model.labels()) c.hyper_names.push_back("gamma_" + l);
  }
  c.hyper.setConstant(n, static_cast<Eigen::Index>(c.hyper_names.size()),
                      std::numeric_limits<double>::quiet_NaN());
  return c;
}

void note(Chain& chain, const FixedPointReport& r) {
  if (!r.converged) ++chain.meta.fixed_point_warnings;
  chain.meta.max_fixed_point_iterations = std::max(chain.meta.max_fixed_point_iterations, r.iterations);
}

void store(Chain& chain, long n, const Vector& phi, const Vector& omega, const Vector& theta) {
  chain.theta.row(n) = theta.transpose();
  chain.omega_sq.row(n) = omega.transpose();
  if (chain.has_phi()) chain.phi.row(n) = phi.transpose();
}

template <typename F>
void at_iteration(long n, F&& step) {
  try {
    step();
  } catch (const ConvergenceError& e) {
    throw AtIteration<ConvergenceError>(e, n);
  } catch (const NumericalError& e) {
    throw AtIteration<NumericalError>(e, n);
  }
}

}  // namespace

Chain run_algorithm1(const ModalDataset& data, const StructuralModel& model,
                     const GibbsConfig& config, Rng& rng, const RunHooks& hooks) {
  validate(data, model, config, hooks);
  const auto start = Clock::now();
  Chain chain = empty_chain(data, model, config, Algorithm::exact, rng);
  const ClampSpec& clamp = hooks.clamp;
  const FixedPointOptions& fp = config.fixed_point;

  HyperStateExact hyper;
  hyper.sparse_mode = config.sparse_mode;
  Vector phi = clamp.phi ? *clamp.phi : Vector::Zero(model.n_dof() * data.n_modes());
  Vector omega = clamp.omega_sq ? *clamp.omega_sq : data.mean_freq_sq();
  Vector theta = initial_theta(config, model);
  double beta = clamp.beta ? *clamp.beta : config.beta_init;
  Vector theta_hat;

  for (long n = 0; n < config.n_samples; ++n) {
    if (config.sparse_mode) theta_hat = hooks.theta_hat ? hooks.theta_hat(n) : *config.theta_hat;
    at_iteration(n, [&] {
      if (!clamp.phi) {
        GaussianDraw d = cond_phi(data, model, omega, theta, beta, hyper, rng, fp);
        phi = std::move(d.sample);
        note(chain, d.report);
      }
      if (!clamp.omega_sq) {
        GaussianDraw d = cond_omega2(data, model, phi, theta, beta, hyper, rng, fp);
        omega = std::move(d.sample);
        note(chain, d.report);
      }
      if (!clamp.beta) {
        const BetaDraw d = cond_beta(model, phi, omega, theta, rng);
        beta = d.sample;
        hyper.b0 = d.b0;
      }
      GaussianDraw d = cond_theta(model, phi, omega, beta,
                                  config.sparse_mode ? &theta_hat : nullptr, hyper, rng, fp);
      theta = std::move(d.sample);
      note(chain, d.report);
    });
    store(chain, n, phi, omega, theta);
    chain.beta[n] = beta;
    auto h = chain.hyper.row(n);
    if (!clamp.phi) h[0] = hyper.eta;
    if (!clamp.omega_sq) h[1] = hyper.rho;
    if (!clamp.beta) h[2] = hyper.b0;
    if (config.sparse_mode)
      for (Eigen::Index j = 0; j < hyper.alpha.size(); ++j) h[3 + j] = hyper.alpha[j];
  }
  chain.meta.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return chain;
}

Chain run_algorithm2(const ModalDataset& data, const StructuralModel& model,
                     const GibbsConfig& config, Rng& rng, const RunHooks& hooks) {
  validate(data, model, config, hooks);
  const auto start = Clock::now();
  Chain chain = empty_chain(data, model, config, Algorithm::marginal, rng);
  const ClampSpec& clamp = hooks.clamp;
  const FixedPointOptions& fp = config.fixed_point;

  HyperStateMarginal hyper;
  hyper.sparse_mode = config.sparse_mode;
  Vector phi = clamp.phi ? *clamp.phi : Vector::Zero(model.n_dof() * data.n_modes());
  Vector omega = clamp.omega_sq ? *clamp.omega_sq : data.mean_freq_sq();
  Vector theta = initial_theta(config, model);
  Vector theta_hat;

  for (long n = 0; n < config.n_samples; ++n) {
    if (config.sparse_mode) theta_hat = hooks.theta_hat ? hooks.theta_hat(n) : *config.theta_hat;
    at_iteration(n, [&] {
      if (!clamp.phi) {
        StudentDraw d = cond_phi_marginal(data, model, omega, theta, hyper, rng, fp);
        phi = std::move(d.sample);
        note(chain, d.report);
      }
      if (!clamp.omega_sq) {
        StudentDraw d = cond_omega2_marginal(data, model, phi, theta, hyper, rng, fp);
        omega = std::move(d.sample);
        note(chain, d.report);
      }
      StudentDraw d = cond_theta_marginal(model, phi, omega,
                                          config.sparse_mode ? &theta_hat : nullptr, hyper, rng, fp);
      theta = std::move(d.sample);
      note(chain, d.report);
    });
    store(chain, n, phi, omega, theta);
    auto h = chain.hyper.row(n);
    if (!clamp.phi) {
      h[0] = hyper.tau;
      h[2] = hyper.b0_phi;
    }
    if (!clamp.omega_sq) {
      h[1] = hyper.v;
      h[3] = hyper.b0_w;
    }
    h[4] = hyper.b0_theta;
    if (config.sparse_mode)
      for (Eigen::Index j = 0; j < hyper.gamma.size(); ++j) h[5 + j] = hyper.gamma[j];
  }
  chain.meta.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return chain;
}

Chain run_chain(const ModalDataset& data, const StructuralModel& model, const GibbsConfig& config,
                Rng& rng, const RunHooks& hooks) {
  return config.algorithm == Algorithm::exact ? run_algorithm1(data, model, config, rng, hooks)
                                              : run_algorithm2(data, model, config, rng, hooks);
}

ParallelRun run_parallel_chains(const ModalDataset& data, const StructuralModel& model,
                                const GibbsConfig& config, std::optional<long> burn_in,
                                const RunHooks& hooks) {
  if (config.n_chains < 2) throw InputError("parallel run needs at least two chains");
  if (!config.chain_seeds.empty() &&
      static_cast<int>(config.chain_seeds.size()) != config.n_chains)
    throw InputError("chain_seeds must list one seed per chain");
  const auto nc = static_cast<std::size_t>(config.n_chains);
  ParallelRun out;
  out.chains.resize(nc);
  std::vector<std::exception_ptr> errors(nc);

  auto work = [&](std::size_t c) {
    try {
      Rng rng = config.chain_seeds.empty() ? Rng(config.seed, c) : Rng(config.chain_seeds[c], 0);
      out.chains[c] = run_chain(data, model, config, rng, hooks);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(nc, std::thread::hardware_concurrency()));
  if (n_threads == 1) {
    for (std::size_t c = 0; c < nc; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < nc; c += n_threads) work(c);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  long b = 0;
  const long n = out.chains.front().size();
  if (burn_in) {
    b = *burn_in;
  } else if (n > 20) {
    for (const auto& c : out.chains) b = std::max(b, detect_burn_in(c).index);
    b = std::min(b, n / 2);
  }
  out.report = ergodicity_report(out.chains, b);
  return out;
}

}  // namespace hbmu
