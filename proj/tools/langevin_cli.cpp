#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "langevin/diagnostics.hpp"
#include "langevin/error.hpp"
#include "langevin/estimation.hpp"
#include "langevin/experiments.hpp"
#include "langevin/io.hpp"

namespace {

using namespace langevin;

/// Options shared by every subcommand: a key=value config file plus
/// command-line overrides, merged into one map.
struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::size_t> d;
  std::optional<double> tau;
  std::optional<double> c0;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key=value configuration file");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--n", n, "sample size");
    app->add_option("--d", d, "dimension");
    app->add_option("--tau", tau, "quantile level");
    app->add_option("--c0", c0, "step-size constant (skips tuning)");
    app->add_option("--out", out, "output directory");
  }

  io::KeyValues merged() const {
    io::KeyValues kv;
    if (!config.empty()) kv = io::read_key_values(std::filesystem::path(config));
    if (seed) kv["seed"] = std::to_string(*seed);
    if (n) kv["n"] = std::to_string(*n);
    if (d) kv["d"] = std::to_string(*d);
    if (tau) kv["tau"] = io::format_double(*tau);
    if (c0) kv["c0"] = io::format_double(*c0);
    if (!out.empty()) kv["out"] = out;
    return kv;
  }
};

std::string take(io::KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::string v = it->second;
  kv.erase(it);
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  const double v = io::parse_double(text);
  if (v < 0.0 || v != std::floor(v)) throw InvalidInput(key + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_list(const std::string& text) {
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(s);
  std::vector<std::string> out;
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

void reject_leftovers(const io::KeyValues& kv, const char* command) {
  if (!kv.empty()) {
    throw InvalidInput(std::string(command) + ": unknown config key '" + kv.begin()->first + "'");
  }
}

int cmd_sample(io::KeyValues kv) {
  const std::string data_path = take(kv, "data", "");
  if (data_path.empty()) throw InvalidInput("sample: a dataset is required (data=path or --data)");
  const double tau = io::parse_double(take(kv, "tau", "0.5"));
  const std::string sampler = take(kv, "sampler", "pmala");
  const std::string c0_text = take(kv, "c0", "");
  const std::size_t steps = to_size("steps", take(kv, "steps", "5000"));
  const std::size_t chains = to_size("chains", take(kv, "chains", "4"));
  const std::size_t thin = to_size("thin", take(kv, "thin", "1"));
  const std::size_t warmup = to_size("warmup", take(kv, "warmup", "500"));
  const double spread = io::parse_double(take(kv, "spread", "5"));
  const double halfwidth = io::parse_double(take(kv, "prior_halfwidth", "100"));
  const std::uint64_t seed = to_size("seed", take(kv, "seed", "1"));
  const std::filesystem::path out = take(kv, "out", "sample_out");
  kv.erase("n");
  kv.erase("d");
  reject_leftovers(kv, "sample");

  auto data = std::make_shared<const Dataset>(io::read_dataset_csv(std::filesystem::path(data_path)));
  const Eigen::Index d = data->dim();
  GibbsSpec spec;
  spec.data = data;
  spec.loss = std::make_shared<const CheckLoss>(tau);
  spec.prior = UniformBoxPrior{Box::cube(d, -halfwidth, halfwidth)};
  spec.validate();
  const TargetDensity target = gibbs_potential(spec);

  const Vector theta_hat = minimize_empirical_risk(spec, Vector::Zero(d)).theta;
  const SpdMatrix gram_inv(empirical_gram_precond(*data));
  const bool preconditioned = sampler == "pmala" || sampler == "pmrw";
  const SamplerKind kind = (sampler == "mrw" || sampler == "pmrw") ? SamplerKind::Mrw : SamplerKind::Mala;
  if (sampler != "mrw" && sampler != "pmrw" && sampler != "mala" && sampler != "pmala") {
    throw InvalidInput("sample: sampler must be mrw, mala, pmala or pmrw");
  }
  const SpdMatrix precond = preconditioned ? gram_inv : SpdMatrix::identity(d);

  StepSizeInputs base;
  base.dim = static_cast<double>(d);
  const double base_step = mala_step_size(base) / static_cast<double>(data->n());
  double c0 = 0.0;
  if (c0_text.empty()) {
    const bool mala = kind == SamplerKind::Mala;
    c0 = tune_c0(target, kind, base_step, precond, theta_hat, warmup, seed ^ 0x5eedULL, mala ? 0.5 : 0.2,
                 mala ? 0.7 : 0.35)
             .c0;
  } else {
    c0 = io::parse_double(c0_text);
  }
  const ProposalSpec proposal(kind, c0 * base_step, precond);

  RngStream start_rng(seed, 1u << 20);
  std::vector<Vector> starts;
  for (std::size_t i = 0; i < chains; ++i) {
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = start_rng.normal();
    starts.push_back(theta_hat + spread / std::sqrt(static_cast<double>(data->n())) * (gram_inv.sqrt() * z));
  }
  const auto traces = run_chains(target, proposal, starts, steps, thin, seed);
  std::filesystem::create_directories(out);
  for (const auto& t : traces) {
    const std::string stem = "chain_" + std::to_string(t.chain_id);
    io::write_trace_csv(out / (stem + ".csv"), t);
    io::write_key_values(out / (stem + ".meta.txt"),
                         {{"seed", std::to_string(t.seed)},
                          {"chain_id", std::to_string(t.chain_id)},
                          {"sampler", sampler},
                          {"step", io::format_double(proposal.step())},
                          {"c0", io::format_double(c0)},
                          {"tau", io::format_double(tau)},
                          {"thin", std::to_string(t.thin)},
                          {"acceptance_rate", io::format_double(t.acceptance_rate)},
                          {"target", target.id()}});
  }
  io::write_matrix_csv(out / "theta_hat.csv", Matrix(theta_hat.transpose()));
  io::write_matrix_csv(out / "precond.csv", precond.mat());
  std::cout << "wrote " << traces.size() << " traces to " << out.string() << "\n";
  return 0;
}

int cmd_diagnose(const std::vector<std::string>& trace_paths, std::size_t stride, double threshold,
                 const CommonOptions& common) {
  io::KeyValues kv = common.merged();
  const std::filesystem::path out = take(kv, "out", "diagnose_out");
  if (trace_paths.size() < 2) throw InvalidInput("diagnose: at least two traces are needed");
  std::vector<Trace> traces;
  for (const auto& p : trace_paths) traces.push_back(io::read_trace_csv(std::filesystem::path(p)));
  const DiagnosticsReport rep = diagnose(traces, static_cast<Eigen::Index>(stride), threshold);
  std::filesystem::create_directories(out);
  std::ofstream rhat(out / "rhat.csv");
  io::write_rhat_csv(rhat, rep);
  std::ofstream ess(out / "ess.csv");
  io::write_ess_csv(ess, rep);
  std::cout << "iterations to rhat < " << threshold << ": "
            << (rep.iters_to_threshold_max ? std::to_string(*rep.iters_to_threshold_max) : "not reached")
            << "\n";
  return 0;
}

int cmd_quantile(const CommonOptions& common) {
  ExperimentConfig cfg;
  cfg.out = "quantile_out";
  cfg.apply(common.merged());
  const auto res = run_quantile_experiment(cfg);
  write_summary_csv(std::cout, res, cfg.tau);
  return 0;
}

int cmd_scaling(const CommonOptions& common) {
  io::KeyValues kv = common.merged();
  ScalingConfig cfg;
  cfg.out = "scaling_out";
  if (const auto dims = take(kv, "dims", ""); !dims.empty()) {
    cfg.dims.clear();
    for (const auto& w : split_list(dims)) cfg.dims.push_back(to_size("dims", w));
  }
  if (const auto d = take(kv, "d", ""); !d.empty()) cfg.dims = {to_size("d", d)};
  cfg.c0 = io::parse_double(take(kv, "c0", io::format_double(cfg.c0)));
  cfg.steps = to_size("steps", take(kv, "steps", std::to_string(cfg.steps)));
  cfg.seed = to_size("seed", take(kv, "seed", std::to_string(cfg.seed)));
  cfg.tolerance = io::parse_double(take(kv, "tolerance", io::format_double(cfg.tolerance)));
  cfg.constant_arm = take(kv, "constant_arm", "1") != "0";
  cfg.out = take(kv, "out", cfg.out.string());
  kv.erase("n");
  kv.erase("tau");
  reject_leftovers(kv, "scaling");
  write_summary_csv(std::cout, run_scaling_study(cfg));
  return 0;
}

int cmd_conductance(const CommonOptions& common, std::optional<std::size_t> count, bool inject) {
  io::KeyValues kv = common.merged();
  ConductanceBatchConfig cfg;
  cfg.out = "conductance_out";
  cfg.seed = to_size("seed", take(kv, "seed", std::to_string(cfg.seed)));
  cfg.count = to_size("count", take(kv, "count", std::to_string(cfg.count)));
  if (count) cfg.count = *count;
  if (const auto sizes = take(kv, "sizes", ""); !sizes.empty()) {
    cfg.sizes.clear();
    for (const auto& w : split_list(sizes)) cfg.sizes.push_back(static_cast<Eigen::Index>(to_size("sizes", w)));
  }
  cfg.lazy = io::parse_double(take(kv, "lazy", io::format_double(cfg.lazy)));
  cfg.warmness = io::parse_double(take(kv, "warmness", io::format_double(cfg.warmness)));
  cfg.eps = io::parse_double(take(kv, "eps", io::format_double(cfg.eps)));
  cfg.inject_disconnected = inject || take(kv, "inject_disconnected", "0") != "0";
  cfg.out = take(kv, "out", cfg.out.string());
  reject_leftovers(kv, "conductance");
  const auto rows = run_conductance_batch(cfg);
  write_summary_csv(std::cout, rows);
  for (const auto& r : rows) {
    if (!r.check.holds) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin and random-walk Metropolis samplers for Gibbs posteriors"};
  app.require_subcommand(1);

  CommonOptions sample_opts, diag_opts, quant_opts, scaling_opts, cond_opts;
  std::string data_path, sampler;
  std::optional<std::size_t> steps, chains;

  auto* sample = app.add_subcommand("sample", "run chains on a check-loss Gibbs posterior");
  sample_opts.attach(sample);
  sample->add_option("--data", data_path, "dataset CSV with header y,x1,...,xd");
  sample->add_option("--sampler", sampler, "mrw, mala, pmala or pmrw");
  sample->add_option("--steps", steps, "iterations per chain");
  sample->add_option("--chains", chains, "number of chains");

  std::vector<std::string> trace_paths;
  std::size_t stride = 50;
  double threshold = 1.01;
  auto* diag = app.add_subcommand("diagnose", "Gelman-Rubin and ESS for trace CSVs");
  diag_opts.attach(diag);
  diag->add_option("traces", trace_paths, "trace CSV files")->required();
  diag->add_option("--stride", stride, "prefix stride");
  diag->add_option("--threshold", threshold, "shrink-factor threshold");

  auto* quant = app.add_subcommand("quantile-exp", "quantile-regression comparison of MRW, MALA and preconditioned MALA");
  quant_opts.attach(quant);

  auto* scaling = app.add_subcommand("scaling", "MALA acceptance across dimensions");
  scaling_opts.attach(scaling);

  std::optional<std::size_t> count;
  bool inject = false;
  auto* cond = app.add_subcommand("conductance", "check the mixing bound on random finite chains");
  cond_opts.attach(cond);
  cond->add_option("--count", count, "number of random chains");
  cond->add_flag("--inject-disconnected", inject, "append a disconnected chain");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) {
      io::KeyValues kv = sample_opts.merged();
      if (!data_path.empty()) kv["data"] = data_path;
      if (!sampler.empty()) kv["sampler"] = sampler;
      if (steps) kv["steps"] = std::to_string(*steps);
      if (chains) kv["chains"] = std::to_string(*chains);
      return cmd_sample(kv);
    }
    if (diag->parsed()) return cmd_diagnose(trace_paths, stride, threshold, diag_opts);
    if (quant->parsed()) return cmd_quantile(quant_opts);
    if (scaling->parsed()) return cmd_scaling(scaling_opts);
    if (cond->parsed()) return cmd_conductance(cond_opts, count, inject);
  } catch (const langevin::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
