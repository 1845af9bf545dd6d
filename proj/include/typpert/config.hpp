#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "typpert/conditions.hpp"
#include "typpert/dynamics.hpp"
#include "typpert/error.hpp"
#include "typpert/kernels.hpp"
#include "typpert/metrics.hpp"

namespace typpert {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "typpert/1";
inline constexpr const char* kVersion = "0.1.0";

struct HistogramConfig {
  std::size_t bins = 50;        // DOS
  std::size_t ldos_bins = 100;  // LDOS; delta E is the bin width
  SpectralMethod method = SpectralMethod::ed;
  std::size_t samples = 20;
  int chebyshev_order = 4096;
};

enum class WindowUnits { absolute, energy_scale };

struct ProfileConfig {
  std::size_t bins = 40;
  std::optional<double> omega_max;
  double central_fraction = 1.0;
  std::size_t smoothing = 5;
  std::size_t excluded_bins = 3;
};

struct ConditionsConfig {
  std::optional<std::vector<double>> lambdas;  // default: the dynamics list
  HistogramConfig histogram;
  std::vector<double> windows;                 // half-widths for the sign-randomization table
  WindowUnits window_units = WindowUnits::absolute;
  double window_center = 0.0;
  std::size_t null_realizations = 200;
  std::size_t spectrum_bins = 50;
  bool profile = true;
  ProfileConfig profile_options;
};

struct FitConfig {
  std::vector<KernelKind> kernels{KernelKind::g1, KernelKind::g2, KernelKind::g3, KernelKind::gauss,
                                  KernelKind::lorentz};
  FitMode mode = FitMode::fit;
  std::optional<double> epsilon;  // empty: mean level spacing of H0 in the window
  double sigma2_0 = 0.0, delta_v = 1.0, alpha = 1.0;  // fixed mode
  LongtimeMode longtime = LongtimeMode::tail_mean;
  Weighting weighting = Weighting::inverse_lambda;
  std::optional<double> tau;
  std::optional<std::string> input;  // directory written by `dynamics`
};

struct ReportConfig {
  double heat_capacity = 0.45;
  double temperature = 273.15;
  std::vector<double> taus;      // seconds, multiplied by omega_rel
  std::vector<double> widths;    // model units, multiplied by `tau`
  std::optional<double> tau;
  std::optional<ResponseParams> params;  // lambda ignored; rates reported per dynamics lambda
};

struct RunConfig {
  ExperimentPlan plan;  // model, dynamics block and seed
  ConditionsConfig conditions;
  FitConfig fit;
  ReportConfig report;
};

inline std::string to_string(SpectralMethod m) { return m == SpectralMethod::ed ? "ed" : "typicality"; }
inline std::string to_string(FitMode m) { return m == FitMode::fit ? "fit" : "fixed"; }
inline std::string to_string(LongtimeMode m) { return m == LongtimeMode::tail_mean ? "tail_mean" : "free"; }
inline std::string to_string(Weighting w) {
  return w == Weighting::inverse_lambda ? "inverse_lambda" : "inverse_lambda_squared";
}
inline std::string to_string(WindowUnits u) { return u == WindowUnits::absolute ? "absolute" : "energy_scale"; }
inline std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

namespace detail {

/// Strict view of one JSON object: every key must be consumed.
class ConfigReader {
 public:
  ConfigReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorKind::config, where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(j_.at(key), key);
  }

  std::optional<ConfigReader> child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return ConfigReader(j_.at(key), path_ + "." + key);
  }

  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<E> options) {
    const std::string s = get<std::string>(key, to_string(fallback));
    for (E e : options)
      if (to_string(e) == s) return e;
    std::string allowed;
    for (E e : options) allowed += (allowed.empty() ? "" : ", ") + to_string(e);
    throw Error(ErrorKind::config, where(key) + " must be one of " + allowed + ", got '" + s + "'");
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      require(used_.count(k) > 0, ErrorKind::config, "unknown key '" + where(k) + "'");
  }

  std::string where(const std::string& key = "") const { return key.empty() ? path_ : path_ + "." + key; }

 private:
  template <class T>
  T convert(const Json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        require(v.is_number(), ErrorKind::config, where(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t> ||
                           std::is_same_v<T, int>) {
        require(v.is_number_integer(), ErrorKind::config, where(key) + " must be an integer");
        require(std::is_same_v<T, int> || v.is_number_unsigned() || v.get<long long>() >= 0, ErrorKind::config,
                where(key) + " must be non-negative");
      } else if constexpr (std::is_same_v<T, bool>) {
        require(v.is_boolean(), ErrorKind::config, where(key) + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        require(v.is_string(), ErrorKind::config, where(key) + " must be a string");
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        require(v.is_array(), ErrorKind::config, where(key) + " must be an array of numbers");
        for (const auto& x : v) require(x.is_number(), ErrorKind::config, where(key) + " must hold numbers only");
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        require(v.is_array(), ErrorKind::config, where(key) + " must be an array of strings");
        for (const auto& x : v) require(x.is_string(), ErrorKind::config, where(key) + " must hold strings only");
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::config, where(key) + ": " + e.what());
    }
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline void check_finite(double v, const std::string& what, bool positive = false) {
  require(std::isfinite(v), ErrorKind::config, what + " must be finite");
  if (positive) require(v > 0.0, ErrorKind::config, what + " must be > 0");
}

}  // namespace detail

/// Validates and converts a parsed configuration. Throws config errors.
inline RunConfig parse_config(const Json& root) {
  detail::ConfigReader r(root, "config");
  const std::string schema = r.get<std::string>("schema", "");
  require(schema == kSchema, ErrorKind::config,
          "schema must be \"" + std::string(kSchema) + "\", got \"" + schema + "\"");
  RunConfig c;
  ExperimentPlan& p = c.plan;
  p.seed = r.get<std::uint64_t>("seed", 1);

  auto m = r.child("model");
  require(m.has_value(), ErrorKind::config, "config.model is required");
  p.model.kind = m->choice("kind", ModelKind::cross_ladder,
                           {ModelKind::cross_ladder, ModelKind::chain_ladder, ModelKind::lattice});
  p.model.L = m->get<int>("L", 5);
  p.model.boundary = m->choice("boundary", p.model.resolved_boundary(), {Boundary::periodic, Boundary::open});
  require(p.model.boundary == Boundary::periodic || p.model.kind == ModelKind::lattice, ErrorKind::config,
          "ladders are periodic");
  p.model.includes_symmetry_breaker = m->get<bool>("symmetry_breaker", true);
  p.model.lattice_bonds = m->choice("lattice_bonds", LatticeBonds::literal, {LatticeBonds::literal, LatticeBonds::all_nn});
  m->finish();

  if (auto d = r.child("dynamics")) {
    p.lambdas = d->get<std::vector<double>>("lambdas", {0.0});
    if (auto w = d->child("window")) {
      EnergyWindow win;
      win.center = w->get<double>("center", 0.0);
      win.half_width = w->get<double>("half_width", 0.0);
      detail::check_finite(win.center, w->where("center"));
      detail::check_finite(win.half_width, w->where("half_width"), true);
      w->finish();
      p.window = win;
    }
    if (auto f = d->child("filter")) {
      GaussianFilter g;
      g.sigma_e = f->get<double>("sigma_e", 2.0);
      detail::check_finite(g.sigma_e, f->where("sigma_e"), true);
      f->finish();
      p.filter = g;
    }
    p.t_max = d->get<double>("t_max", p.t_max);
    p.dt = d->get<double>("dt", p.dt);
    detail::check_finite(p.t_max, "dynamics.t_max", true);
    detail::check_finite(p.dt, "dynamics.dt", true);
    p.method = d->choice("method", DynamicsMethod::ed, {DynamicsMethod::ed, DynamicsMethod::krylov_typicality});
    p.samples = d->get<std::size_t>("samples", p.samples);
    if (auto k = d->child("krylov")) {
      p.krylov.order = k->get<int>("order", p.krylov.order);
      p.krylov.tolerance = k->get<double>("tolerance", p.krylov.tolerance);
      p.krylov.max_halvings = k->get<int>("max_halvings", p.krylov.max_halvings);
      require(p.krylov.order >= 2, ErrorKind::config, "dynamics.krylov.order must be >= 2");
      detail::check_finite(p.krylov.tolerance, "dynamics.krylov.tolerance", true);
      k->finish();
    }
    p.ed_cap = d->get<std::size_t>("ed_cap", p.ed_cap);
    p.allow_soft_window = d->get<bool>("allow_soft_window", p.allow_soft_window);
    p.normalization = d->choice("normalization", SeriesNormalization::initial_one,
                                {SeriesNormalization::initial_one, SeriesNormalization::none});
    d->finish();
  }
  for (double l : p.lambdas) detail::check_finite(l, "dynamics.lambdas entry");
  try {
    p.validate();
  } catch (const Error& e) {
    // plan problems found before any computation are configuration problems
    if (e.kind() == ErrorKind::specification || e.kind() == ErrorKind::size) throw;
    throw Error(ErrorKind::config, e.what());
  }

  if (auto k = r.child("conditions")) {
    ConditionsConfig& cc = c.conditions;
    cc.lambdas = k->optional<std::vector<double>>("lambdas");
    if (auto h = k->child("histogram")) {
      cc.histogram.bins = h->get<std::size_t>("bins", cc.histogram.bins);
      cc.histogram.ldos_bins = h->get<std::size_t>("ldos_bins", cc.histogram.ldos_bins);
      cc.histogram.method = h->choice("method", SpectralMethod::ed, {SpectralMethod::ed, SpectralMethod::typicality});
      cc.histogram.samples = h->get<std::size_t>("samples", cc.histogram.samples);
      cc.histogram.chebyshev_order = h->get<int>("chebyshev_order", cc.histogram.chebyshev_order);
      require(cc.histogram.bins >= 10 && cc.histogram.ldos_bins >= 10, ErrorKind::config,
              "conditions.histogram bin counts must be >= 10");
      require(cc.histogram.chebyshev_order >= 2, ErrorKind::config, "chebyshev_order must be >= 2");
      h->finish();
    }
    cc.windows = k->get<std::vector<double>>("windows", {});
    for (double w : cc.windows) detail::check_finite(w, "conditions.windows entry", true);
    cc.window_units = k->choice("window_units", WindowUnits::absolute, {WindowUnits::absolute, WindowUnits::energy_scale});
    cc.window_center = k->get<double>("window_center", 0.0);
    cc.null_realizations = k->get<std::size_t>("null_realizations", cc.null_realizations);
    require(cc.null_realizations >= 1, ErrorKind::config, "conditions.null_realizations must be >= 1");
    cc.spectrum_bins = k->get<std::size_t>("spectrum_bins", cc.spectrum_bins);
    cc.profile = k->get<bool>("profile", true);
    if (auto pr = k->child("profile_options")) {
      ProfileConfig& po = cc.profile_options;
      po.bins = pr->get<std::size_t>("bins", po.bins);
      po.omega_max = pr->optional<double>("omega_max");
      po.central_fraction = pr->get<double>("central_fraction", po.central_fraction);
      po.smoothing = pr->get<std::size_t>("smoothing", po.smoothing);
      po.excluded_bins = pr->get<std::size_t>("excluded_bins", po.excluded_bins);
      require(po.bins >= 1, ErrorKind::config, "profile bins must be >= 1");
      require(po.central_fraction > 0.0 && po.central_fraction <= 1.0, ErrorKind::config,
              "central_fraction must lie in (0, 1]");
      if (po.omega_max) detail::check_finite(*po.omega_max, "omega_max", true);
      pr->finish();
    }
    k->finish();
  }

  if (auto f = r.child("fit")) {
    FitConfig& fc = c.fit;
    if (auto ks = f->optional<std::vector<std::string>>("kernels")) {
      fc.kernels.clear();
      for (const auto& name : *ks) fc.kernels.push_back(kernel_from_string(name));
      require(!fc.kernels.empty(), ErrorKind::config, "fit.kernels is empty");
    }
    fc.mode = f->choice("mode", FitMode::fit, {FitMode::fit, FitMode::fixed});
    fc.epsilon = f->optional<double>("epsilon");
    if (fc.epsilon) detail::check_finite(*fc.epsilon, "fit.epsilon", true);
    fc.sigma2_0 = f->get<double>("sigma2_0", fc.sigma2_0);
    fc.delta_v = f->get<double>("delta_v", fc.delta_v);
    fc.alpha = f->get<double>("alpha", fc.alpha);
    if (fc.mode == FitMode::fixed) {
      detail::check_finite(fc.sigma2_0, "fit.sigma2_0", true);
      detail::check_finite(fc.delta_v, "fit.delta_v", true);
      detail::check_finite(fc.alpha, "fit.alpha", true);
    }
    fc.longtime = f->choice("longtime", LongtimeMode::tail_mean, {LongtimeMode::tail_mean, LongtimeMode::free});
    fc.weighting = f->choice("weighting", Weighting::inverse_lambda,
                             {Weighting::inverse_lambda, Weighting::inverse_lambda_squared});
    fc.tau = f->optional<double>("tau");
    if (fc.tau) detail::check_finite(*fc.tau, "fit.tau", true);
    fc.input = f->optional<std::string>("input");
    f->finish();
  }

  if (auto rp = r.child("report")) {
    ReportConfig& rc = c.report;
    rc.heat_capacity = rp->get<double>("heat_capacity", rc.heat_capacity);
    rc.temperature = rp->get<double>("temperature", rc.temperature);
    detail::check_finite(rc.heat_capacity, "report.heat_capacity", true);
    detail::check_finite(rc.temperature, "report.temperature", true);
    rc.taus = rp->get<std::vector<double>>("taus", {});
    rc.widths = rp->get<std::vector<double>>("widths", {});
    rc.tau = rp->optional<double>("tau");
    require(rc.widths.empty() || rc.tau, ErrorKind::config, "report.widths needs report.tau");
    if (auto pp = rp->child("params")) {
      ResponseParams q;
      q.sigma2_0 = pp->get<double>("sigma2_0", 0.0);
      q.delta_v = pp->get<double>("delta_v", 1.0);
      q.epsilon = pp->get<double>("epsilon", 1.0);
      pp->finish();
      try {
        q.validate();
      } catch (const Error& e) {
        throw Error(ErrorKind::config, std::string("report.params: ") + e.what());
      }
      rc.params = q;
    }
    rp->finish();
  }
  r.finish();
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("cannot parse configuration: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::config, "cannot open configuration '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Fully resolved configuration; parse_config(to_json(c)) reproduces c.
inline Json to_json(const RunConfig& c) {
  const ExperimentPlan& p = c.plan;
  Json j;
  j["schema"] = kSchema;
  j["seed"] = p.seed;
  j["model"] = {{"kind", to_string(p.model.kind)},
                {"L", p.model.L},
                {"boundary", to_string(p.model.resolved_boundary())},
                {"symmetry_breaker", p.model.includes_symmetry_breaker},
                {"lattice_bonds", to_string(p.model.lattice_bonds)}};
  Json d;
  d["lambdas"] = p.lambdas;
  if (p.window) d["window"] = {{"center", p.window->center}, {"half_width", p.window->half_width}};
  if (p.filter) d["filter"] = {{"sigma_e", p.filter->sigma_e}};
  d["t_max"] = p.t_max;
  d["dt"] = p.dt;
  d["method"] = to_string(p.method);
  d["samples"] = p.samples;
  d["krylov"] = {{"order", p.krylov.order}, {"tolerance", p.krylov.tolerance}, {"max_halvings", p.krylov.max_halvings}};
  d["ed_cap"] = p.ed_cap;
  d["allow_soft_window"] = p.allow_soft_window;
  d["normalization"] = to_string(p.normalization);
  j["dynamics"] = d;

  const ConditionsConfig& cc = c.conditions;
  Json k;
  if (cc.lambdas) k["lambdas"] = *cc.lambdas;
  k["histogram"] = {{"bins", cc.histogram.bins},
                    {"ldos_bins", cc.histogram.ldos_bins},
                    {"method", to_string(cc.histogram.method)},
                    {"samples", cc.histogram.samples},
                    {"chebyshev_order", cc.histogram.chebyshev_order}};
  k["windows"] = cc.windows;
  k["window_units"] = to_string(cc.window_units);
  k["window_center"] = cc.window_center;
  k["null_realizations"] = cc.null_realizations;
  k["spectrum_bins"] = cc.spectrum_bins;
  k["profile"] = cc.profile;
  Json po{{"bins", cc.profile_options.bins},
          {"central_fraction", cc.profile_options.central_fraction},
          {"smoothing", cc.profile_options.smoothing},
          {"excluded_bins", cc.profile_options.excluded_bins}};
  if (cc.profile_options.omega_max) po["omega_max"] = *cc.profile_options.omega_max;
  k["profile_options"] = po;
  j["conditions"] = k;

  const FitConfig& fc = c.fit;
  Json f;
  std::vector<std::string> kernels;
  for (KernelKind kk : fc.kernels) kernels.push_back(to_string(kk));
  f["kernels"] = kernels;
  f["mode"] = to_string(fc.mode);
  if (fc.epsilon) f["epsilon"] = *fc.epsilon;
  f["sigma2_0"] = fc.sigma2_0;
  f["delta_v"] = fc.delta_v;
  f["alpha"] = fc.alpha;
  f["longtime"] = to_string(fc.longtime);
  f["weighting"] = to_string(fc.weighting);
  if (fc.tau) f["tau"] = *fc.tau;
  if (fc.input) f["input"] = *fc.input;
  j["fit"] = f;

  const ReportConfig& rc = c.report;
  Json rp{{"heat_capacity", rc.heat_capacity}, {"temperature", rc.temperature}, {"taus", rc.taus}, {"widths", rc.widths}};
  if (rc.tau) rp["tau"] = *rc.tau;
  if (rc.params)
    rp["params"] = {{"sigma2_0", rc.params->sigma2_0}, {"delta_v", rc.params->delta_v}, {"epsilon", rc.params->epsilon}};
  j["report"] = rp;
  return j;
}

}  // namespace typpert
