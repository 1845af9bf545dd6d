// typpert: config-driven front end. See README.md for the schema.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "typpert/conditions.hpp"
#include "typpert/config.hpp"
#include "typpert/dynamics.hpp"
#include "typpert/io.hpp"
#include "typpert/kernels.hpp"
#include "typpert/metrics.hpp"
#include "typpert/typicality.hpp"

namespace fs = std::filesystem;
using namespace typpert;

namespace {

constexpr std::uint64_t kDosStream = 0x646f73ULL;
constexpr std::uint64_t kSignStream = 0x7369676eULL;

struct Run {
  RunConfig config;
  fs::path out;
  Json manifest;
  std::vector<std::string> warnings;

  void warn(const std::string& w) {
    if (std::find(warnings.begin(), warnings.end(), w) != warnings.end()) return;
    std::cerr << "warning: " << w << '\n';
    warnings.push_back(w);
  }

  void emit(const std::string& name, const std::string& content) {
    write_file(out / name, content);
    manifest["outputs"].push_back(name);
  }

  void finish() {
    manifest["warnings"] = warnings;
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
  }
};

std::string numbered(const std::string& stem, std::size_t i, const std::string& ext = ".csv") {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return stem + "_" + buf + ext;
}

std::shared_ptr<const Spectrum> h0_spectrum(const Model& m, std::size_t cap) {
  return std::make_shared<const Spectrum>(exact_diag(m.h0, true, cap));
}

// ---- dynamics ------------------------------------------------------------

void write_series(Run& run, const DynamicsResult& r, const std::string& stem = "lambda") {
  Json list = Json::array();
  std::size_t i = 0;
  for (const auto& [lambda, ts] : r.series) {
    const std::string name = numbered(stem, i++);
    run.emit(name, series_csv(ts));
    list.push_back({{"lambda", lambda}, {"file", name}, {"rows", ts.size()}, {"seed", ts.meta.seed},
                    {"normalization", ts.meta.normalization}, {"window", ts.meta.window}});
  }
  run.manifest["series"] = list;
  run.manifest["dim"] = r.dim;
  run.manifest["preparation"] = r.preparation;
  if (r.soft_edge) run.manifest["soft_edge"] = *r.soft_edge;
  for (const auto& w : r.warnings) run.warn(w);
}

void cmd_dynamics(Run& run) { write_series(run, run_dynamics(run.config.plan)); }

// ---- conditions ----------------------------------------------------------

void cmd_conditions(Run& run) {
  const ExperimentPlan& plan = run.config.plan;
  const ConditionsConfig& cc = run.config.conditions;
  const Model model = build_model(plan.model);
  const StateSpec spec = initial_state_spec(plan.model, plan.window, plan.filter);
  run.manifest["dim"] = model.h0.dim();

  const bool ed_ok = model.h0.dim() <= plan.ed_cap;
  std::shared_ptr<const Spectrum> spec0;
  if (ed_ok) spec0 = h0_spectrum(model, plan.ed_cap);
  RealizeOptions ro;
  ro.h0_spectrum = spec0;
  ro.ed_cap = plan.ed_cap;
  ro.allow_soft_window = plan.allow_soft_window;
  const Preparation prep = realize(model, spec, ro);
  if (prep.soft_edge) run.warn("soft energy window with edge width " + format_short(*prep.soft_edge));

  // DOS / LDOS on one shared energy range
  const std::vector<double> lambdas = cc.lambdas.value_or(plan.lambdas);
  std::vector<SparseHermitian> hs;
  Range range{INFINITY, -INFINITY};
  for (double l : lambdas) {
    hs.push_back(l == 0.0 ? model.h0 : model.hamiltonian(l));
    const Range r = detail::ritz_range(hs.back());
    range.lower = std::min(range.lower, r.lower);
    range.upper = std::max(range.upper, r.upper);
  }
  HistogramOptions ho;
  ho.range = range;
  ho.samples = cc.histogram.samples;
  ho.chebyshev_order = cc.histogram.chebyshev_order;
  ho.ed_cap = plan.ed_cap;
  Json hist = Json::array();
  const bool ldos_ok = prep.scheme == Scheme::pure;
  if (!ldos_ok) run.warn("LDOS skipped: the " + to_string(plan.model.kind) + " preparation is not a density matrix");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const std::uint64_t seed = sample_seed(plan.seed ^ kDosStream, i);
    Json entry{{"lambda", lambdas[i]}};
    std::ostringstream dos;
    dos_histogram(hs[i], cc.histogram.bins, cc.histogram.method, seed, ho).write_csv(dos);
    entry["dos"] = numbered("dos", i);
    run.emit(numbered("dos", i), dos.str());
    if (ldos_ok) {
      std::ostringstream ldos;
      ldos_histogram(prep, hs[i], cc.histogram.ldos_bins, cc.histogram.method, splitmix64(seed), ho).write_csv(ldos);
      entry["ldos"] = numbered("ldos", i);
      run.emit(numbered("ldos", i), ldos.str());
    }
    hist.push_back(entry);
  }
  run.manifest["histograms"] = hist;

  // sign randomization per window
  if (!cc.windows.empty()) {
    require(ed_ok, ErrorKind::capacity, "sign randomization needs the H0 eigenbasis; dimension above the cap");
    const double unit = cc.window_units == WindowUnits::energy_scale ? energy_scale(model.h0) : 1.0;
    run.manifest["window_unit"] = unit;
    std::string table = "half_width,rank,ks,null_threshold,correlated,semicircle_radius\n";
    for (std::size_t i = 0; i < cc.windows.size(); ++i) {
      const EnergyWindow w{cc.window_center, cc.windows[i] * unit};
      const SignRandomizationResult r = sign_randomization_check(
          model.v, spec0, w, sample_seed(plan.seed ^ kSignStream, i), cc.null_realizations, cc.spectrum_bins, plan.ed_cap);
      table += format_double(w.half_width) + ',' + std::to_string(r.rank) + ',' + format_double(r.ks) + ',' +
               format_double(r.null_threshold) + ',' + (r.correlated() ? "1" : "0") + ',' + format_double(r.radius) + '\n';
      std::string eig = "eigenvalue,sign_randomized\n";
      for (std::size_t k = 0; k < r.rank; ++k)
        eig += format_double(r.comparison.eigenvalues_a[k]) + ',' + format_double(r.comparison.eigenvalues_b[k]) + '\n';
      run.emit(numbered("spectrum_window", i), eig);
      std::string h = "bin_center,density,sign_randomized_density,semicircle\n";
      const Histogram& a = r.comparison.histogram_a;
      const Histogram& b = r.comparison.histogram_b;
      for (std::size_t k = 0; k < a.bins(); ++k)
        h += format_double(a.center(k)) + ',' + format_double(a.weights[k]) + ',' + format_double(b.weights[k]) + ',' +
             format_double(wigner_semicircle(a.center(k), r.radius)) + '\n';
      run.emit(numbered("spectrum_histogram_window", i), h);
    }
    run.emit("sign_randomization.csv", table);
  }

  // perturbation profile
  if (cc.profile) {
    require(ed_ok, ErrorKind::capacity, "the profile needs the H0 eigenbasis; dimension above the cap");
    const ProfileConfig& pc = run.config.conditions.profile_options;
    ProfileOptions po;
    po.bins = pc.bins;
    po.omega_max = pc.omega_max;
    po.levels = central_levels(spec0->dim(), pc.central_fraction);
    po.smoothing = pc.smoothing;
    po.excluded_bins = pc.excluded_bins;
    ProfileEstimate p = perturbation_profile(model.v, *spec0, po);
    Json fits = Json::object();
    for (ProfileFamily f : {ProfileFamily::exponential, ProfileFamily::lorentzian}) {
      try {
        const ProfileFit fit = fit_profile(p, f);
        fits[to_string(f)] = {{"sigma2_0", fit.sigma2_0}, {"delta_v", fit.delta_v}, {"residual", fit.residual},
                              {"bins_used", fit.bins_used}};
        (f == ProfileFamily::exponential ? p.exponential : p.lorentzian) = fit;
      } catch (const Error& e) {
        run.warn(std::string("profile fit ") + to_string(f) + ": " + e.what());
        fits[to_string(f)] = {{"error", e.what()}};
      }
    }
    if (p.exponential && p.lorentzian)
      fits["preferred"] = p.exponential->residual <= p.lorentzian->residual ? "exponential" : "lorentzian";
    std::ostringstream csv;
    p.write_csv(csv);
    run.emit("profile.csv", csv.str());
    Json pj{{"bin_width", p.bin_width}, {"levels_first", po.levels->first}, {"levels_count", po.levels->count},
            {"dropped", p.dropped}, {"fits", fits}};
    run.emit("profile_fits.json", pj.dump(2) + "\n");
  }
}

// ---- fit -----------------------------------------------------------------

std::map<double, TimeSeries> load_series(Run& run) {
  const FitConfig& fc = run.config.fit;
  if (!fc.input) {
    const DynamicsResult r = run_dynamics(run.config.plan);
    write_series(run, r);
    return r.series;
  }
  const fs::path dir(*fc.input);
  const fs::path mpath = dir / "manifest.json";
  require(fs::exists(mpath), ErrorKind::config, "fit.input: no manifest.json in '" + dir.string() + "'");
  Json m;
  try {
    m = Json::parse(read_file(mpath));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, "fit.input: unreadable manifest: " + std::string(e.what()));
  }
  require(m.contains("series") && m["series"].is_array(), ErrorKind::config,
          "fit.input: manifest lists no series; run `dynamics` first");
  std::map<double, TimeSeries> out;
  for (const auto& e : m["series"]) {
    const fs::path f = dir / e.at("file").get<std::string>();
    require(fs::exists(f), ErrorKind::config, "fit.input: missing " + f.string());
    TimeSeries ts = parse_series_csv(read_file(f), f.string());
    ts.meta.lambda = e.at("lambda").get<double>();
    out.emplace(ts.meta.lambda, std::move(ts));
  }
  run.manifest["input"] = dir.string();
  return out;
}

double fit_epsilon(Run& run) {
  const FitConfig& fc = run.config.fit;
  if (fc.epsilon) return *fc.epsilon;
  const ExperimentPlan& plan = run.config.plan;
  const Model model = build_model(plan.model);
  const Spectrum s = exact_diag(model.h0, false, plan.ed_cap);
  const double eps = mean_level_spacing(s, plan.window);
  run.manifest["epsilon_from_spectrum"] = eps;
  return eps;
}

Json fit_json(const FitResult& r) {
  Json j;
  j["kernel"] = to_string(r.kind);
  if (is_adhoc(r.kind)) {
    j["alpha"] = r.alpha;
  } else {
    j["sigma2_0"] = r.params.sigma2_0;
    j["delta_v"] = r.params.delta_v;
    j["epsilon"] = r.params.epsilon;
  }
  j["total"] = r.total;
  j["trace_length"] = r.trace_length;
  j["converged"] = r.converged;
  if (!r.unconstrained.empty()) j["unconstrained"] = r.unconstrained;
  Json rows = Json::array();
  for (const auto& d : r.per_lambda)
    rows.push_back({{"lambda", d.lambda}, {"tau", d.tau}, {"tau_from_horizon", d.tau_from_horizon},
                    {"longtime", d.longtime}, {"deviation", d.deviation}, {"delta0", d.delta0}});
  j["per_lambda"] = rows;
  return j;
}

bool cmd_fit(Run& run) {
  const FitConfig& fc = run.config.fit;
  const std::map<double, TimeSeries> series = load_series(run);
  require(series.count(0.0) == 1, ErrorKind::config, "fit needs the lambda = 0 reference series");
  std::size_t perturbed = 0;
  for (const auto& [l, s] : series) perturbed += l > 0.0;
  require(perturbed >= 1, ErrorKind::config, "fit needs at least one lambda > 0");
  if (perturbed < 2 && fc.mode == FitMode::fit) run.warn("fitting against a single lambda");
  const double eps = fit_epsilon(run);

  KernelFitOptions o;
  o.mode = fc.mode;
  o.longtime = fc.longtime;
  o.weighting = fc.weighting;
  o.tau = fc.tau;
  o.fixed_params = {fc.sigma2_0, fc.delta_v, eps, 0.0};
  o.fixed_alpha = fc.alpha;

  bool ok = true;
  std::vector<std::optional<FitResult>> results;
  Json summary = Json::array();
  for (KernelKind k : fc.kernels) {
    try {
      FitResult r = fit_kernel(k, series.at(0.0), series, eps, o);
      run.emit("fit_" + to_string(k) + ".json", fit_json(r).dump(2) + "\n");
      summary.push_back({{"kernel", to_string(k)}, {"total", r.total}});
      for (const auto& d : r.per_lambda)
        if (d.tau_from_horizon) run.warn("lambda=" + format_short(d.lambda) + ": no relaxation within the horizon, tau set to t_max");
      results.emplace_back(std::move(r));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fit_failure) throw;
      ok = false;
      run.warn(to_string(k) + ": " + e.what());
      run.emit("fit_" + to_string(k) + ".json", Json{{"kernel", to_string(k)}, {"error", e.what()}}.dump(2) + "\n");
      summary.push_back({{"kernel", to_string(k)}, {"error", e.what()}});
      results.emplace_back(std::nullopt);
    }
  }
  // combined Delta(lambda) table
  const FitResult* ref = nullptr;
  for (const auto& r : results)
    if (r) ref = &*r;
  if (ref) {
    std::string t = "lambda,tau,delta0";
    for (KernelKind k : fc.kernels) t += "," + to_string(k);
    t += '\n';
    for (std::size_t i = 0; i < ref->per_lambda.size(); ++i) {
      const auto& d = ref->per_lambda[i];
      t += format_double(d.lambda) + ',' + format_double(d.tau) + ',' + format_double(d.delta0);
      for (const auto& r : results) t += "," + (r ? format_double(r->per_lambda[i].deviation) : std::string("nan"));
      t += '\n';
    }
    run.emit("deviations.csv", t);
  }
  run.manifest["epsilon"] = eps;
  run.manifest["fits"] = summary;
  return ok;
}

// ---- report --------------------------------------------------------------

void cmd_report(Run& run) {
  const ReportConfig& rc = run.config.report;
  Json j;
  const MesoscopicEstimate m = mesoscopic_estimate(rc.heat_capacity, rc.temperature, rc.taus);
  j["mesoscopic"] = {{"heat_capacity", rc.heat_capacity}, {"temperature", rc.temperature},
                     {"omega_rel", m.omega_rel}, {"taus", rc.taus}, {"products", m.products}};
  if (rc.tau) j["width_products"] = {{"tau", *rc.tau}, {"widths", rc.widths}, {"products", width_time_products(rc.widths, *rc.tau)}};
  if (rc.params) {
    const ResponseParams& p = *rc.params;
    Json rates = Json::array();
    for (double l : run.config.plan.lambdas) {
      const ResponseParams q = p.with_lambda(l);
      rates.push_back({{"lambda", l}, {"Gamma", q.Gamma()}, {"gamma", q.gamma()}, {"gamma0", q.gamma0()},
                       {"discriminant", q.discriminant()}, {"overdamped", q.overdamped()}});
    }
    j["rates"] = rates;
    if (p.sigma2_0 > 0.0) j["lambda_c"] = lambda_c(p);
  }
  run.emit("report.json", j.dump(2) + "\n");
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::specification:
    case ErrorKind::size:
    case ErrorKind::empty_sector:
      return 2;
    case ErrorKind::capacity:
    case ErrorKind::capability:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typicality-based perturbation theory toolkit"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  const char* names[] = {"dynamics", "conditions", "fit", "report"};
  const char* help[] = {"perturbed and unperturbed time series per lambda",
                        "DOS/LDOS histograms, sign-randomization table and perturbation profile",
                        "kernel fits and the Delta(lambda) table", "rates and mesoscopic estimates"};
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--threads", threads, "worker threads (default: TYPPERT_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Run run;
    run.config = load_config(config_path);
    if (seed) run.config.plan.seed = *seed;
    if (threads > 0) set_thread_count(threads);
    run.out = out_dir;
    fs::create_directories(run.out);
    run.manifest["schema"] = kSchema;
    run.manifest["version"] = kVersion;
    run.manifest["subcommand"] = cmd;
    run.manifest["config"] = to_json(run.config);
    run.manifest["outputs"] = Json::array();
    bool ok = true;
    if (cmd == "dynamics") cmd_dynamics(run);
    else if (cmd == "conditions") cmd_conditions(run);
    else if (cmd == "fit") ok = cmd_fit(run);
    else cmd_report(run);
    run.finish();
    return ok ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "typpert " << cmd << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "typpert " << cmd << ": internal error: " << e.what() << '\n';
    return 1;
  }
}
