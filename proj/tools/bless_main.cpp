// Command-line driver. Every subcommand reads an optional key=value config
// file, applies flag overrides, writes a resolved snapshot next to its
// outputs, and exits 0 on success, 2 on configuration problems, 3 on
// numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "bless/bless.hpp"

namespace fs = std::filesystem;
using namespace bless;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs from --set
};

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  for (const std::string& kv : c.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw config_error("--set expects key=value, got: " + kv);
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key=value config file");
  app->add_option("--set", c.overrides, "override a config key, e.g. --set model.nu1=10")
      ->take_all();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw config_error("cannot create directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void snapshot(const RunConfig& cfg, const std::string& dir,
              const std::map<std::string, std::string>& extra = {}) {
  write_config(join(dir, "config_resolved.txt"), cfg.kv, extra);
}

Volume matrix_volume(const LatticeMask& mask, const Eigen::MatrixXd& field) {
  Volume v;
  v.dims = mask.dims;
  v.count = static_cast<std::uint32_t>(field.cols());
  v.dtype = 1;
  v.f64.reserve(static_cast<std::size_t>(mask.lattice_size()) * field.cols());
  for (std::int64_t c = 0; c < field.cols(); ++c) {
    const std::vector<double> frame = embed_dense(mask, field.col(c));
    v.f64.insert(v.f64.end(), frame.begin(), frame.end());
  }
  return v;
}

Volume vector_volume(const LatticeMask& mask, const Eigen::VectorXd& field) {
  return matrix_volume(mask, field);
}

Volume mask_volume(const LatticeMask& mask,
                   const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& act) {
  Volume v;
  v.dims = mask.dims;
  v.count = static_cast<std::uint32_t>(act.cols());
  v.dtype = 0;
  v.u8.assign(static_cast<std::size_t>(mask.lattice_size()) * act.cols(), 0);
  for (std::int64_t c = 0; c < act.cols(); ++c)
    for (std::int64_t j = 0; j < mask.n_voxels; ++j)
      v.u8[c * mask.lattice_size() + mask.full_of[j]] = act(j, c);
  return v;
}

SimConfig sim_config(const RunConfig& cfg) {
  SimConfig sc;
  sc.nx = cfg.get_int("sim.nx");
  sc.ny = cfg.get_int("sim.ny");
  sc.n = cfg.get_int("sim.n");
  sc.lambda = cfg.get_double("sim.lambda");
  sc.sex_multiplier = cfg.get_double("sim.sex_multiplier");
  sc.group_multiplier = cfg.get_double("sim.group_multiplier");
  sc.lesion_size = cfg.get_int("sim.lesion_size");
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("sim.seed"));
  return sc;
}

Hyperparams model_hp(const RunConfig& cfg) {
  Hyperparams hp;
  hp.nu1 = cfg.get_double("model.nu1");
  hp.nu0 = std::exp(cfg.get_double("model.log_nu0_min"));
  hp.sigma0_sq = cfg.get_double("model.sigma0_sq");
  hp.wishart_df = cfg.get_double("model.wishart_df");
  return hp;
}

ViOptions vi_options(const RunConfig& cfg) {
  ViOptions opt;
  opt.epsilon = cfg.get_double("model.epsilon");
  opt.max_sweeps = cfg.get_int("model.max_sweeps");
  opt.workers = cfg.get_int("run.workers");
  opt.jitter_spike_only = cfg.get_bool("model.jitter_spike_only");
  return opt;
}

// Firth-initialized annealing run shared by fit-vi, fit-bb and export-plots.
DpePath run_annealing(const Dataset& data, const RunConfig& cfg) {
  const Hyperparams hp = model_hp(cfg);
  const ViOptions opt = vi_options(cfg);
  const FirthVoxelwise firth = fit_firth_all(data, {}, opt.workers);
  VariationalState init = make_initial_state(data, hp, &firth);
  const std::vector<double> grid =
      nu0_grid(cfg.get_double("model.log_nu0_min"), cfg.get_double("model.log_nu0_max"),
               cfg.get_int("model.nu0_steps"));
  return run_dpe(data, hp, grid, opt, std::move(init));
}

void write_marginal_trace(const DpePath& path, const std::string& csv_path) {
  CsvWriter out(csv_path);
  out.row({"step", "nu0", "log_nu0", "elbo", "log_marginal", "sweeps", "converged",
           "n_active"});
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const DpeStep& st = path.steps[k];
    std::int64_t na = 0;
    for (std::int64_t j = 0; j < st.active.rows(); ++j)
      for (std::int64_t c = 0; c < st.active.cols(); ++c) na += st.active(j, c);
    out.row({std::to_string(k), fmt_double(st.nu0), fmt_double(std::log(st.nu0)),
             fmt_double(st.elbo), fmt_double(st.log_marginal), std::to_string(st.sweeps),
             st.converged ? "1" : "0", std::to_string(na)});
  }
  out.close();
}

void write_vi_outputs(const Dataset& data, const DpePath& path, const std::string& out) {
  const VariationalState& vs = path.final_state;
  write_state(join(out, "state.blst"), vs);
  write_volume(join(out, "coef_mean.blsv"), matrix_volume(data.mask, vs.m_beta));
  write_volume(join(out, "intercept_mean.blsv"), vector_volume(data.mask, vs.m_beta0));
  write_volume(join(out, "inclusion.blsv"), matrix_volume(data.mask, vs.q_gamma));
  write_volume(join(out, "theta_mean.blsv"), matrix_volume(data.mask, vs.m_theta));
  write_volume(join(out, "active.blsv"),
               mask_volume(data.mask, path.steps.back().active));
  export_regularization_path(path, join(out, "path.csv"));
  write_marginal_trace(path, join(out, "marginal.csv"));
}

int cmd_simulate(const Common& com, const std::string& out) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const SimResult sim = generate_dataset(sim_config(cfg));
  write_dataset(out, sim.data);
  write_volume(join(out, "truth_active.blsv"), mask_volume(sim.data.mask, sim.truth.active));
  write_volume(join(out, "truth_beta.blsv"), matrix_volume(sim.data.mask, sim.truth.beta));
  write_volume(join(out, "truth_beta0.blsv"),
               vector_volume(sim.data.mask, sim.truth.beta0));
  snapshot(cfg, out);
  return 0;
}

int cmd_fit_vi(const Common& com, const std::string& data_dir, const std::string& out) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Dataset data = read_dataset(data_dir);
  const DpePath path = run_annealing(data, cfg);
  write_vi_outputs(data, path, out);
  snapshot(cfg, out, {{"selected_nu0", fmt_double(path.steps.back().nu0)}});
  return 0;
}

int cmd_fit_bb(const Common& com, const std::string& data_dir, const std::string& out,
               const std::string& state_path, double nu0_flag) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Dataset data = read_dataset(data_dir);
  const Hyperparams hp = model_hp(cfg);
  const ViOptions opt = vi_options(cfg);

  VariationalState warm;
  double nu0_target = nu0_flag;
  if (!state_path.empty()) {
    warm = read_state(state_path);
    if (!(nu0_target > 0.0))
      throw config_error("fit-bb: --nu0 is required when warm-starting from --state");
  } else {
    DpePath path = run_annealing(data, cfg);
    nu0_target = path.steps.back().nu0;
    warm = std::move(path.final_state);
  }

  BootstrapConfig bc;
  bc.replicates = cfg.get_int("bb.replicates");
  bc.alpha = cfg.get_double("bb.alpha");
  bc.seed = static_cast<std::uint64_t>(cfg.get_int("bb.seed"));
  bc.nu0_target = nu0_target;
  bc.epsilon = cfg.get_double("bb.epsilon");
  bc.max_failure_fraction = cfg.get_double("bb.max_failure_fraction");

  const PosteriorEnsemble ens = run_bootstrap(data, hp, opt, bc, warm);
  write_ensemble(join(out, "ensemble.blsb"), ens.samples);
  write_volume(join(out, "bb_mean.blsv"), matrix_volume(data.mask, ens.mean));
  write_volume(join(out, "bb_sd.blsv"), matrix_volume(data.mask, ens.sd));
  write_volume(join(out, "bb_tstat.blsv"), matrix_volume(data.mask, ens.tstat));
  if (!ens.failed.empty())
    std::cerr << "fit-bb: " << ens.failed.size() << " replicate(s) failed and were excluded"
              << std::endl;
  snapshot(cfg, out, {{"nu0_target", fmt_double(nu0_target)},
                      {"failed_replicates", std::to_string(ens.failed.size())}});
  return 0;
}

int cmd_fit_gibbs(const Common& com, const std::string& data_dir, const std::string& out,
                  const std::string& state_path, double nu0_flag) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Dataset data = read_dataset(data_dir);
  Hyperparams hp = model_hp(cfg);
  if (nu0_flag > 0.0) hp.nu0 = nu0_flag;

  ModelState init;
  if (!state_path.empty())
    init = state_from_vi(read_state(state_path));
  else
    init = default_gibbs_init(data);

  GibbsConfig gc;
  gc.iterations = cfg.get_int("gibbs.iterations");
  gc.burn_in = cfg.get_int("gibbs.burnin");
  gc.thin = cfg.get_int("gibbs.thin");
  gc.seed = static_cast<std::uint64_t>(cfg.get_int("gibbs.seed"));
  gc.theta_mh = cfg.get_bool("gibbs.theta_mh");
  gc.mh_step = cfg.get_double("gibbs.mh_step");
  gc.save_draws = cfg.get_bool("gibbs.save_draws");
  gc.workers = cfg.get_int("run.workers");

  const ChainOutput chain = run_gibbs(data, hp, gc, init);
  write_volume(join(out, "gibbs_mean.blsv"), matrix_volume(data.mask, chain.mean));
  write_volume(join(out, "gibbs_sd.blsv"), matrix_volume(data.mask, chain.sd));
  write_volume(join(out, "gibbs_tstat.blsv"), matrix_volume(data.mask, chain.tstat));
  write_volume(join(out, "gibbs_gamma.blsv"), matrix_volume(data.mask, chain.gamma_mean));
  write_volume(join(out, "gibbs_theta.blsv"), matrix_volume(data.mask, chain.theta_mean));
  if (chain.has_draws) write_ensemble(join(out, "draws.blsb"), chain.draws);
  snapshot(cfg, out, {{"retained_draws", std::to_string(chain.retained)},
                      {"nu0", fmt_double(hp.nu0)}});
  return 0;
}

int cmd_fit_firth(const Common& com, const std::string& data_dir, const std::string& out) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Dataset data = read_dataset(data_dir);
  const int workers = cfg.get_int("run.workers");
  const double bh_level = cfg.get_double("run.bh_level");
  const FirthVoxelwise fit = fit_firth_all(data, {}, workers);

  write_volume(join(out, "firth_coef.blsv"), matrix_volume(data.mask, fit.coef));
  write_volume(join(out, "firth_se.blsv"), matrix_volume(data.mask, fit.se));
  write_volume(join(out, "firth_zstat.blsv"), matrix_volume(data.mask, fit.zstat));
  write_volume(join(out, "firth_pvalue.blsv"), matrix_volume(data.mask, fit.pvalue));

  // BH across voxels, per covariate, degenerate voxels excluded
  const std::int64_t m = data.m(), p = data.p();
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> active(m, p);
  active.setZero();
  for (std::int64_t c = 0; c < p; ++c) {
    std::vector<std::int64_t> idx;
    for (std::int64_t j = 0; j < m; ++j)
      if (!fit.degenerate[j]) idx.push_back(j);
    Eigen::VectorXd pv(static_cast<std::int64_t>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) pv[k] = fit.pvalue(idx[k], c + 1);
    const Eigen::VectorXd adj = bh_adjust(pv);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (adj[k] <= bh_level) active(idx[k], c) = 1;
  }
  write_volume(join(out, "firth_active.blsv"), mask_volume(data.mask, active));
  snapshot(cfg, out);
  return 0;
}

int cmd_evaluate(const Common& com, const std::string& sim_dir, const std::string& out,
                 const std::string& active_path, const std::vector<std::string>& coef_paths) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Dataset data = read_dataset(sim_dir);
  const Volume truth_active = read_volume(join(sim_dir, "truth_active.blsv"));
  const Volume truth_beta = read_volume(join(sim_dir, "truth_beta.blsv"));
  const std::int64_t m = data.m(), p = truth_active.count;
  const std::int64_t lat = data.mask.lattice_size();

  if (!active_path.empty()) {
    const Volume est = read_volume(active_path);
    if (est.dtype != 0 || static_cast<std::int64_t>(est.count) != p)
      throw config_error("evaluate: active volume must be binary with one frame per covariate");
    CsvWriter csv(join(out, "confusion.csv"));
    csv.row({"covariate", "tpr", "tdr", "fpr", "fdr", "tp", "fp", "tn", "fn"});
    for (std::int64_t c = 0; c < p; ++c) {
      std::vector<std::uint8_t> truth_c(m), est_c(m);
      for (std::int64_t j = 0; j < m; ++j) {
        truth_c[j] = truth_active.u8[c * lat + data.mask.full_of[j]];
        est_c[j] = est.u8[c * lat + data.mask.full_of[j]];
      }
      const ConfusionRates r = confusion_rates(est_c, truth_c);
      csv.row({std::to_string(c), fmt_double(r.tpr), fmt_double(r.tdr), fmt_double(r.fpr),
               fmt_double(r.fdr), std::to_string(r.tp), std::to_string(r.fp),
               std::to_string(r.tn), std::to_string(r.fn)});
    }
    csv.close();
  }

  if (coef_paths.size() >= 2) {
    CsvWriter csv(join(out, "bias_var_mse.csv"));
    csv.row({"covariate", "subset", "voxels", "bias", "var", "mse", "mse_pervoxel"});
    for (std::int64_t c = 0; c < p; ++c) {
      std::vector<std::vector<double>> reps;
      for (const std::string& path : coef_paths) {
        const Volume v = read_volume(path);
        if (v.dtype != 1 || static_cast<std::int64_t>(v.count) < p)
          throw config_error("evaluate: coefficient volume malformed: " + path);
        std::vector<double> dense(m);
        for (std::int64_t j = 0; j < m; ++j) dense[j] = v.f64[c * lat + data.mask.full_of[j]];
        reps.push_back(std::move(dense));
      }
      std::vector<double> truth_c(m);
      std::vector<std::uint8_t> act(m), inact(m), all(m, 1);
      for (std::int64_t j = 0; j < m; ++j) {
        truth_c[j] = truth_beta.f64[c * lat + data.mask.full_of[j]];
        act[j] = truth_active.u8[c * lat + data.mask.full_of[j]];
        inact[j] = act[j] ? 0 : 1;
      }
      const BiasVarMse bvm = bias_var_mse(reps, truth_c);
      const auto emit = [&](const char* name, const std::vector<std::uint8_t>& subset) {
        const AggregateTrio t = aggregate_trio(bvm, subset);
        csv.row({std::to_string(c), name, std::to_string(t.voxels), fmt_double(t.bias),
                 fmt_double(t.var), fmt_double(t.mse), fmt_double(t.mse_pervoxel)});
      };
      emit("active", act);
      emit("inactive", inact);
      emit("all", all);
    }
    csv.close();
  }
  snapshot(cfg, out);
  return 0;
}

int cmd_cluster(const Common& com, const std::string& ensemble_path,
                const std::string& mask_path, const std::string& out,
                int covariate, bool two_sided) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  const Volume mv = read_volume(mask_path);
  if (mv.dtype != 0 || mv.count != 1)
    throw config_error("cluster: mask volume must be a single binary frame");
  const LatticeMask mask = make_mask(std::vector<std::uint32_t>(mv.dims), mv.u8);
  const NeighborGraph graph = build_graph(mask);
  const Ensemble ens = read_ensemble(ensemble_path);
  if (static_cast<std::int64_t>(ens.M) != mask.n_voxels)
    throw config_error("cluster: ensemble voxel count does not match mask");

  const ClusterReport rep = cluster_size_inference(
      mask, graph, ens, covariate, cfg.get_double("run.cdt"),
      cfg.get_double("run.ci_level"), 0.5, two_sided, cfg.get_int("run.workers"));

  CsvWriter csv(join(out, "clusters.csv"));
  csv.row({"cluster", "observed_size", "mean_size", "sd_size", "ci_lo", "ci_hi"});
  for (const ObservedCluster& c : rep.clusters)
    csv.row({std::to_string(c.id), std::to_string(c.size), fmt_double(c.mean_size),
             fmt_double(c.sd_size), fmt_double(c.ci_lo), fmt_double(c.ci_hi)});
  csv.close();

  CsvWriter dist(join(out, "cluster_sizes.csv"));
  dist.row({"cluster", "replicate", "size"});
  for (const ObservedCluster& c : rep.clusters)
    for (std::size_t b = 0; b < c.boot_sizes.size(); ++b)
      dist.row({std::to_string(c.id), std::to_string(b), fmt_double(c.boot_sizes[b])});
  dist.close();

  auto field_volume = [&](const std::vector<double>& field) {
    Volume v;
    v.dims = mask.dims;
    v.count = 1;
    v.dtype = 1;
    v.f64.assign(static_cast<std::size_t>(mask.lattice_size()), 0.0);
    for (std::int64_t j = 0; j < mask.n_voxels; ++j) v.f64[mask.full_of[j]] = field[j];
    return v;
  };
  write_volume(join(out, "prevalence.blsv"), field_volume(rep.prevalence));
  write_volume(join(out, "size_mean.blsv"), field_volume(rep.size_mean));
  write_volume(join(out, "size_sd.blsv"), field_volume(rep.size_sd));
  std::vector<double> labels(mask.n_voxels);
  for (std::int64_t j = 0; j < mask.n_voxels; ++j)
    labels[j] = static_cast<double>(rep.observed_label[j]);
  write_volume(join(out, "observed_clusters.blsv"), field_volume(labels));
  snapshot(cfg, out, {{"covariate", std::to_string(covariate)}});
  return 0;
}

int cmd_export_plots(const Common& com, const std::string& fit_dir,
                     const std::string& out) {
  RunConfig cfg = resolve_config(com);
  ensure_dir(out);
  // re-key the fit tables on log nu0, the natural plotting axis
  {
    std::ifstream in(join(fit_dir, "path.csv"));
    if (!in) throw config_error("export-plots: missing path.csv in " + fit_dir);
    CsvWriter outcsv(join(out, "shrinkage_curves.csv"));
    outcsv.row({"log_nu0", "voxel", "covariate", "coef", "active"});
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (line.empty()) continue;
      const std::vector<std::string> f = csv_split_line(line);
      if (f.size() != 5) throw config_error("export-plots: malformed path.csv row");
      outcsv.row({fmt_double(std::log(std::stod(f[0]))), f[1], f[2], f[3], f[4]});
    }
    outcsv.close();
  }
  {
    std::ifstream in(join(fit_dir, "marginal.csv"));
    if (!in) throw config_error("export-plots: missing marginal.csv in " + fit_dir);
    CsvWriter outcsv(join(out, "marginal_trace.csv"));
    outcsv.row({"log_nu0", "log_marginal", "n_active"});
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (line.empty()) continue;
      const std::vector<std::string> f = csv_split_line(line);
      if (f.size() != 8) throw config_error("export-plots: malformed marginal.csv row");
      outcsv.row({f[2], f[4], f[7]});
    }
    outcsv.close();
  }
  snapshot(cfg, out);
  return 0;
}

int cmd_import_nifti(const std::string& input, const std::string& output,
                     std::optional<double> threshold) {
  const Volume v = read_nifti(input);
  if (threshold) {
    Volume b;
    b.dims = v.dims;
    b.count = v.count;
    b.dtype = 0;
    b.u8.resize(v.f64.size());
    for (std::size_t i = 0; i < v.f64.size(); ++i)
      b.u8[i] = v.f64[i] > *threshold ? 1 : 0;
    write_volume(output, b);
  } else {
    write_volume(output, v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial spike-and-slab probit lesion modeling"};
  app.require_subcommand(1);

  Common com;
  std::string out, data_dir, state_path, active_path, ensemble_path, mask_path;
  std::string sim_dir, fit_dir, input, output;
  std::vector<std::string> coef_paths;
  double nu0_flag = 0.0;
  int covariate = 0;
  bool two_sided = false;
  std::optional<double> threshold;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic lesion dataset");
  add_common(sim, com);
  sim->add_option("--out", out, "output directory")->required();

  auto* vi = app.add_subcommand("fit-vi", "variational fit with spike-variance annealing");
  add_common(vi, com);
  vi->add_option("--data", data_dir, "dataset directory")->required();
  vi->add_option("--out", out, "output directory")->required();

  auto* bb = app.add_subcommand("fit-bb", "bootstrapped variational posterior");
  add_common(bb, com);
  bb->add_option("--data", data_dir, "dataset directory")->required();
  bb->add_option("--out", out, "output directory")->required();
  bb->add_option("--state", state_path, "warm-start state file from fit-vi");
  bb->add_option("--nu0", nu0_flag, "spike variance for the replicates");

  auto* gibbs = app.add_subcommand("fit-gibbs", "Gibbs sampler reference posterior");
  add_common(gibbs, com);
  gibbs->add_option("--data", data_dir, "dataset directory")->required();
  gibbs->add_option("--out", out, "output directory")->required();
  gibbs->add_option("--state", state_path, "initial state file from fit-vi");
  gibbs->add_option("--nu0", nu0_flag, "spike variance for the chain");

  auto* firth = app.add_subcommand("fit-firth", "voxelwise bias-reduced probit baseline");
  add_common(firth, com);
  firth->add_option("--data", data_dir, "dataset directory")->required();
  firth->add_option("--out", out, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "score fits against simulation truth");
  add_common(eval, com);
  eval->add_option("--sim", sim_dir, "simulated dataset directory (with truth volumes)")
      ->required();
  eval->add_option("--out", out, "output directory")->required();
  eval->add_option("--active", active_path, "estimated activation volume (u8, P frames)");
  eval->add_option("--coef", coef_paths, "replicate coefficient volumes (repeatable)")
      ->take_all();

  auto* clus = app.add_subcommand("cluster", "bootstrap cluster-size inference");
  add_common(clus, com);
  clus->add_option("--ensemble", ensemble_path, "bootstrap ensemble file")->required();
  clus->add_option("--mask", mask_path, "analysis mask volume")->required();
  clus->add_option("--out", out, "output directory")->required();
  clus->add_option("--covariate", covariate, "covariate index (default 0)");
  clus->add_flag("--two-sided", two_sided, "threshold |t| instead of t");

  auto* plots = app.add_subcommand("export-plots", "plot-ready tables from a fit-vi run");
  add_common(plots, com);
  plots->add_option("--fit", fit_dir, "fit-vi output directory")->required();
  plots->add_option("--out", out, "output directory")->required();

  auto* imp = app.add_subcommand("import-nifti", "convert a NIfTI-1 volume");
  imp->add_option("--input", input, "NIfTI file (.nii or .nii.gz)")->required();
  imp->add_option("--output", output, "output volume file")->required();
  imp->add_option("--threshold", threshold, "binarize at this cutoff");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(com, out);
    if (vi->parsed()) return cmd_fit_vi(com, data_dir, out);
    if (bb->parsed()) return cmd_fit_bb(com, data_dir, out, state_path, nu0_flag);
    if (gibbs->parsed()) return cmd_fit_gibbs(com, data_dir, out, state_path, nu0_flag);
    if (firth->parsed()) return cmd_fit_firth(com, data_dir, out);
    if (eval->parsed()) return cmd_evaluate(com, sim_dir, out, active_path, coef_paths);
    if (clus->parsed())
      return cmd_cluster(com, ensemble_path, mask_path, out, covariate, two_sided);
    if (plots->parsed()) return cmd_export_plots(com, fit_dir, out);
    if (imp->parsed()) return cmd_import_nifti(input, output, threshold);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
