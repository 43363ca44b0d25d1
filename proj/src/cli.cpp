#include "ntkspec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "ntkspec/errors.hpp"
#include "ntkspec/io.hpp"
#include "ntkspec/spectra.hpp"
#include "ntkspec/svg.hpp"

namespace ntkspec {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMpSimSeed = 20211;
constexpr int kMpSimSamples = 4000;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out);
  return (fs::path(cfg.out) / name).string();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (cur.empty()) throw InvalidArgument("empty entry in list '" + text + "'");
    parts.push_back(cur);
  }
  if (parts.empty()) throw InvalidArgument("empty list");
  return parts;
}

template <class T, class Conv>
std::vector<T> parse_list(const std::string& text, Conv conv) {
  std::vector<T> out;
  for (const auto& part : split_list(text)) {
    const auto x = part.find('x');
    std::size_t reps = 1;
    std::string value = part;
    if (x != std::string::npos) {
      value = part.substr(0, x);
      std::size_t used = 0;
      long r = 0;
      try {
        r = std::stol(part.substr(x + 1), &used);
      } catch (const std::exception&) {
        throw InvalidArgument("bad repetition in '" + part + "'");
      }
      if (used != part.size() - x - 1 || r < 1) throw InvalidArgument("bad repetition in '" + part + "'");
      reps = static_cast<std::size_t>(r);
    }
    const T v = conv(value, part);
    out.insert(out.end(), reps, v);
  }
  return out;
}

double to_real(const std::string& value, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + context + "'");
  }
  if (used != value.size() || !std::isfinite(v)) throw InvalidArgument("not a number: '" + context + "'");
  return v;
}

json curve_meta(const RunConfig& cfg, const Activation* act, const LimitParams* params,
                const std::vector<double>& grid, double eta) {
  json meta = {{"tool", "ntkspec"}, {"version", kVersion}, {"config", cfg.to_json()}};
  if (act) {
    meta["activation"] = {{"name", act->name()},
                          {"b_sigma", act->b_sigma()},
                          {"a_sigma", act->a_sigma()},
                          {"lambda_sigma", act->lambda_sigma()},
                          {"unsafe", act->unsafe()}};
  }
  if (params) {
    meta["shape"] = {{"gammas", params->gammas}, {"L", params->layers()}};
    meta["constants"] = {{"q", params->constants.q}, {"r", params->constants.r},
                         {"r_plus", params->constants.r_plus}};
    meta["mu0_atoms"] = params->mu0.size();
  }
  if (!grid.empty()) meta["grid"] = {{"lo", grid.front()}, {"hi", grid.back()}, {"points", grid.size()}};
  meta["eta"] = eta;
  return meta;
}

void write_error_report(const RunConfig& cfg, const std::exception& e) {
  json doc = {{"error", e.what()}, {"config", cfg.to_json()}, {"tool", "ntkspec"}, {"version", kVersion}};
  if (const auto* se = dynamic_cast<const SolverError*>(&e)) {
    doc["best_residual"] = se->best_residual();
    doc["layer"] = se->layer();
  }
  try {
    write_json(out_path(cfg, "error.json"), doc);
  } catch (const std::exception&) {
  }
}

int curve_exit_code(const DensityCurve& curve) {
  return curve.unconverged_fraction() > 0.0 ? kExitPartial : kExitOk;
}

GridSpec default_limit_grid(LimitKind kind, const LimitParams& params) {
  const auto c = limit_coefficients(kind, params);
  double spread = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) spread += std::abs(c[i]);
  const double gmax = *std::max_element(params.gammas.begin(), params.gammas.end());
  const double mumax = std::max(1.0, params.mu0.max_location());
  const double edge = std::pow(1.0 + std::sqrt(gmax), 2);
  return {c[0] - 0.5, c[0] + std::max(1.0, spread) * mumax * edge + 0.5, 400};
}

// Grid resolving the Cauchy kernel at `eta`: spacing eta / 4, capped.
std::vector<double> fine_grid(double lo, double hi, double eta, int cap = 8000) {
  const int points = std::clamp(static_cast<int>(std::ceil((hi - lo) / (eta / 4))) + 1, 400, cap);
  return linspace(lo, hi, points);
}

EigenSpectrum gram_spectrum(const Matrix& X, const std::string& source) {
  if (X.rows() >= X.cols()) return eigenvalues_symmetric(X.transpose() * X, source);
  EigenSpectrum small = eigenvalues_symmetric(X * X.transpose(), source);
  std::vector<double> values(static_cast<std::size_t>(X.cols() - X.rows()), 0.0);
  values.insert(values.end(), small.values.begin(), small.values.end());
  return spectrum_from_values(std::move(values), source);
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

json RunConfig::to_json() const {
  return {{"command", command}, {"kind", kind},       {"L", L},
          {"gamma", gamma},     {"gammas", gammas},   {"n", n},
          {"dims", dims},       {"k", k},             {"activation", activation},
          {"activation_table", activation_table},     {"unsafe_activation", unsafe_activation},
          {"lambda", lambda},   {"mu0", mu0},         {"input", input},
          {"taus", taus},       {"coeffs", coeffs},   {"eta", eta},
          {"grid", grid},       {"tol", tol},         {"max_iter", max_iter},
          {"damping", damping}, {"seed", seed},       {"threads", threads},
          {"remove_pcs", remove_pcs},                 {"center", center},
          {"epsilon", epsilon}, {"B", B},             {"bins", bins},
          {"eigs", eigs},       {"curve", curve}};
}

void RunConfig::validate() const {
  if (L < 0) throw InvalidArgument("--L must be >= 1");
  if (gammas.empty() && L > 0 && !(gamma > 0.0)) throw InvalidArgument("--gamma must be positive");
  if (!gammas.empty()) {
    for (double g : parse_real_list(gammas)) {
      if (!(g > 0.0)) throw InvalidArgument("--gammas entries must be positive");
    }
  }
  if (n < 0) throw InvalidArgument("--n must be >= 1");
  if (k < 1) throw InvalidArgument("--k must be >= 1");
  if (!(lambda > 0.0)) throw InvalidArgument("--lambda must be positive");
  if (!(eta > 0.0)) throw InvalidArgument("--eta must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("--tol must be positive");
  if (max_iter < 1) throw InvalidArgument("--max-iter must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("--damping must lie in (0, 1]");
  if (threads < 1) throw InvalidArgument("--threads must be >= 1");
  if (remove_pcs < 0) throw InvalidArgument("--remove-pcs must be >= 0");
  if (!(epsilon >= 0.0) || !(B >= 0.0)) throw InvalidArgument("--epsilon and --B must be nonnegative");
  if (bins < 1) throw InvalidArgument("--bins must be >= 1");
  if (!grid.empty()) parse_grid(grid);
  if (!taus.empty()) {
    for (double t : parse_real_list(taus)) {
      if (!(t > 0.0)) throw InvalidArgument("--taus entries must be positive");
    }
  }
  if (!coeffs.empty()) parse_real_list(coeffs);
  if (!dims.empty()) parse_int_list(dims);
}

std::vector<double> parse_real_list(const std::string& text) {
  return parse_list<double>(text, to_real);
}

std::vector<int> parse_int_list(const std::string& text) {
  return parse_list<int>(text, [](const std::string& v, const std::string& ctx) {
    const double d = to_real(v, ctx);
    if (d != std::floor(d) || d < 1 || d > 1e9) throw InvalidArgument("not a positive integer: '" + ctx + "'");
    return static_cast<int>(d);
  });
}

GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ':')) parts.push_back(cur);
  if (parts.size() != 3) throw InvalidArgument("--grid expects lo:hi:n, got '" + text + "'");
  GridSpec g{to_real(parts[0], text), to_real(parts[1], text), 0};
  const double pts = to_real(parts[2], text);
  if (pts != std::floor(pts) || pts < 2 || pts > 1e7) throw InvalidArgument("--grid point count must be an integer >= 2");
  g.points = static_cast<int>(pts);
  if (!(g.hi > g.lo)) throw InvalidArgument("--grid needs lo < hi");
  return g;
}

Activation resolve_activation(const RunConfig& cfg) {
  if (!cfg.activation_table.empty()) return activation_from_table_file(cfg.activation_table, cfg.lambda);
  return builtin_activation(cfg.activation, cfg.unsafe_activation);
}

std::vector<double> resolve_gammas(const RunConfig& cfg) {
  std::vector<double> g;
  if (!cfg.gammas.empty()) {
    g = parse_real_list(cfg.gammas);
  } else if (cfg.L > 0) {
    if (!(cfg.gamma > 0.0)) throw InvalidArgument("--gamma must be positive");
    g.assign(static_cast<std::size_t>(cfg.L), cfg.gamma);
  } else if (cfg.n > 0 && !cfg.dims.empty()) {
    g = resolve_shape(cfg).gammas();
  } else {
    throw InvalidArgument("layer ratios missing: give --gammas, --L with --gamma, or --n with --dims");
  }
  if (cfg.L > 0 && g.size() != static_cast<std::size_t>(cfg.L)) {
    throw InvalidArgument("--L disagrees with the number of --gammas entries");
  }
  for (double x : g) {
    if (!(x > 0.0)) throw InvalidArgument("layer ratios gamma must be positive");
  }
  return g;
}

NetworkShape resolve_shape(const RunConfig& cfg) {
  if (cfg.n < 1) throw InvalidArgument("--n is required");
  if (cfg.dims.empty()) throw InvalidArgument("--dims is required (d0,d1,...,dL)");
  NetworkShape shape;
  shape.n = cfg.n;
  shape.dims = parse_int_list(cfg.dims);
  shape.k = cfg.k;
  if (!cfg.taus.empty()) shape.taus = parse_real_list(cfg.taus);
  if (cfg.L > 0 && shape.layers() != cfg.L) throw InvalidArgument("--L disagrees with --dims");
  shape.validate();
  return shape;
}

Matrix resolve_input(const RunConfig& cfg) {
  Matrix X;
  if (cfg.input == "gaussian" || cfg.input == "sphere") {
    if (cfg.n < 1 || cfg.dims.empty()) throw InvalidArgument("--input " + cfg.input + " needs --n and --dims");
    const int d0 = parse_int_list(cfg.dims).front();
    X = sample_input(parse_input_kind(cfg.input), cfg.n, d0, cfg.seed);
  } else {
    X = read_matrix(cfg.input);
    if (cfg.n > 0 && X.cols() != cfg.n) {
      throw IngestionError("input '" + cfg.input + "' has " + std::to_string(X.cols()) + " columns, --n is " +
                           std::to_string(cfg.n));
    }
    if (!cfg.dims.empty() && X.rows() != parse_int_list(cfg.dims).front()) {
      throw IngestionError("input '" + cfg.input + "' has " + std::to_string(X.rows()) + " rows, --dims starts at " +
                           std::to_string(parse_int_list(cfg.dims).front()));
    }
  }
  if (cfg.remove_pcs > 0 || cfg.center) X = remove_top_pcs(X, cfg.remove_pcs, cfg.center).X;
  return X;
}

SpectralMeasure resolve_mu0(const RunConfig& cfg) {
  const std::string& spec = cfg.mu0;
  if (spec == "empirical") {
    return SpectralMeasure::from_samples(gram_spectrum(resolve_input(cfg), "input").values);
  }
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InvalidArgument("bad --mu0 '" + spec + "' (point:v, mp:g, mp-sim:g, file:path, empirical)");
  const std::string head = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (head == "point") {
    const double v = to_real(arg, spec);
    if (v < 0.0) throw InvalidArgument("--mu0 point mass must be >= 0");
    return SpectralMeasure::point_mass(v);
  }
  if (head == "mp" || head == "mp-sim") {
    const double g = to_real(arg, spec);
    if (!(g > 0.0)) throw InvalidArgument("--mu0 MP ratio must be positive");
    if (head == "mp") return SpectralMeasure::marchenko_pastur(g);
    const int d0 = std::max(1, static_cast<int>(std::lround(kMpSimSamples / g)));
    const Matrix X = sample_input(InputKind::gaussian, kMpSimSamples, d0, kMpSimSeed);
    return SpectralMeasure::from_samples(gram_spectrum(X, "mp-sim").values);
  }
  if (head == "file") return SpectralMeasure::from_samples(read_eigenvalues(arg));
  throw InvalidArgument("unknown --mu0 kind '" + head + "'");
}

SolverOptions resolve_solver(const RunConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  o.damping = cfg.damping;
  o.seed = cfg.seed;
  o.validate();
  return o;
}

namespace {

LimitParams resolve_limit_params(const RunConfig& cfg, LimitKind kind, const Activation& act,
                                 SpectralMeasure mu0) {
  LimitParams p = make_limit_params(std::move(mu0), resolve_gammas(cfg), act);
  const auto L = static_cast<std::size_t>(p.layers());
  if (kind == LimitKind::ntk_multi) {
    p.taus = cfg.taus.empty() ? std::vector<double>(L + 1, 1.0) : parse_real_list(cfg.taus);
    if (p.taus.size() != L + 1) throw InvalidArgument("--taus needs L+1 entries");
  }
  if (kind == LimitKind::combo) {
    if (cfg.coeffs.empty()) throw InvalidArgument("limit combo needs --coeffs c_-1,c_0,...,c_L");
    p.coeffs = parse_real_list(cfg.coeffs);
    if (p.coeffs.size() != L + 2) throw InvalidArgument("--coeffs needs L+2 entries");
  }
  return p;
}

void write_curve_outputs(const RunConfig& cfg, const std::string& stem, const DensityCurve& curve,
                         const json& meta, const Histogram* hist, const std::string& title) {
  write_curve_csv(out_path(cfg, stem + ".csv"), curve, meta);
  write_curve_json(out_path(cfg, stem + ".json"), curve, meta);
  SvgPlot plot;
  plot.title = title;
  plot.histogram = hist;
  plot.series.push_back(series_from_curve(curve));
  write_text(out_path(cfg, stem + ".svg"), render_svg(plot));
}

}  // namespace

int cmd_limit(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const LimitKind kind = parse_limit_kind(cfg.kind);
  const Activation act = resolve_activation(cfg);
  if (act.unsafe()) log << "warning: activation '" << act.name() << "' is outside the smooth class\n";
  const LimitParams params = resolve_limit_params(cfg, kind, act, resolve_mu0(cfg));
  const SolverOptions opts = resolve_solver(cfg);
  const GridSpec g = cfg.grid.empty() ? default_limit_grid(kind, params) : parse_grid(cfg.grid);
  const std::vector<double> grid = linspace(g.lo, g.hi, g.points);
  const json meta = curve_meta(cfg, &act, &params, grid, cfg.eta);
  const std::string stem = "limit_" + cfg.kind;

  DensityCurve curve;
  int code = kExitOk;
  try {
    curve = limit_density(kind, params, grid, cfg.eta, opts, cfg.threads);
    code = curve_exit_code(curve);
  } catch (const CurveQualityError& e) {
    curve = e.curve();
    write_error_report(cfg, e);
    log << "error: " << e.what() << '\n';
    code = kExitError;
  }
  write_curve_outputs(cfg, stem, curve, meta, nullptr, "limit " + cfg.kind);
  log << "wrote " << out_path(cfg, stem + ".csv") << " (mass " << curve.mass() << ", unconverged "
      << curve.unconverged_fraction() << ")\n";
  return code;
}

namespace {

struct Simulation {
  Matrix X0;
  LayerStack stack;
  Matrix K;
  EigenSpectrum spectrum;
};

Simulation simulate(const RunConfig& cfg, const std::string& which, const Activation& act) {
  NetworkShape shape = resolve_shape(cfg);
  Simulation s;
  s.X0 = resolve_input(cfg);
  if (which != "ntk-multi") shape.k = 1;
  s.stack = forward(s.X0, shape, act, cfg.seed);
  if (which == "ck") {
    s.K = ck_matrix(s.stack, shape.layers());
  } else if (which == "ntk") {
    s.K = ntk_explicit(s.stack, act);
  } else if (which == "ntk-multi") {
    s.K = ntk_multi_explicit(s.stack, act, shape.taus);
  } else if (which == "surrogate") {
    s.K = ntk_surrogate(s.stack, layer_constants(act, shape.layers()));
  } else {
    throw InvalidArgument("unknown simulate kind '" + which + "' (ck|ntk|ntk-multi|surrogate)");
  }
  s.spectrum = eigenvalues_symmetric(s.K, which);
  return s;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Activation act = resolve_activation(cfg);
  if (act.unsafe()) log << "warning: activation '" << act.name() << "' is outside the smooth class\n";
  const Simulation s = simulate(cfg, cfg.kind, act);
  const json meta = curve_meta(cfg, &act, nullptr, {}, cfg.eta);
  const std::string stem = "sim_" + cfg.kind;
  const Histogram hist = histogram(s.spectrum, cfg.bins);
  write_eigenvalues_csv(out_path(cfg, stem + "_eigs.csv"), s.spectrum, meta);
  write_histogram_csv(out_path(cfg, stem + "_hist.csv"), hist, meta);
  json ortho = to_json(check_orthonormal(s.X0, cfg.epsilon, cfg.B));
  ortho["metadata"] = meta;
  write_json(out_path(cfg, stem + "_orthonormality.json"), ortho);
  SvgPlot plot;
  plot.title = "simulated " + cfg.kind;
  plot.histogram = &hist;
  write_text(out_path(cfg, stem + ".svg"), render_svg(plot));
  log << "wrote " << out_path(cfg, stem + "_eigs.csv") << " (" << s.spectrum.n << " eigenvalues in ["
      << s.spectrum.values.front() << ", " << s.spectrum.values.back() << "])\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.eigs.empty() || cfg.curve.empty()) throw InvalidArgument("compare needs --eigs and --curve");
  const EigenSpectrum spec = spectrum_from_values(read_eigenvalues(cfg.eigs), cfg.eigs);
  json curve_meta_in;
  DensityCurve curve = read_curve_csv(cfg.curve, &curve_meta_in);
  if (!(curve.eta > 0.0)) curve.eta = cfg.eta;
  const ComparisonReport r = compare(spec, curve);
  json doc = to_json(r);
  doc["metadata"] = {{"tool", "ntkspec"}, {"version", kVersion}, {"config", cfg.to_json()}, {"eta", curve.eta}};
  write_json(out_path(cfg, "compare.json"), doc);
  if (r.coverage_warning) log << "warning: curve grid does not cover the spectrum\n";
  log << "kolmogorov " << r.kolmogorov << ", stieltjes_sup " << r.stieltjes_sup << '\n';
  return kExitOk;
}

int cmd_check(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const OrthonormalityReport r = check_orthonormal(resolve_input(cfg), cfg.epsilon, cfg.B);
  json doc = to_json(r);
  doc["metadata"] = {{"tool", "ntkspec"}, {"version", kVersion}, {"config", cfg.to_json()}};
  write_json(out_path(cfg, "orthonormality.json"), doc);
  log << "epsilon_offdiag " << r.epsilon_offdiag << ", epsilon_diag " << r.epsilon_diag << ", op_norm "
      << r.op_norm << ", pass " << (r.pass() ? "yes" : "no") << '\n';
  return kExitOk;
}

namespace {

struct Panel {
  std::string name;
  EigenSpectrum spectrum;
  DensityCurve curve;
  ComparisonReport report;
};

Panel run_panel(const RunConfig& cfg, const std::string& prefix, const std::string& name,
                EigenSpectrum spectrum, const std::function<DensityCurve(const std::vector<double>&)>& limit,
                const json& meta) {
  Panel p;
  p.name = name;
  p.spectrum = std::move(spectrum);
  const double lo = p.spectrum.values.front() - 0.5;
  const double hi = p.spectrum.values.back() + 0.5;
  const std::vector<double> grid = fine_grid(lo, hi, cfg.eta);
  try {
    p.curve = limit(grid);
  } catch (const CurveQualityError& e) {
    p.curve = e.curve();
  }
  p.report = compare(p.spectrum, p.curve);
  json m = meta;
  m["grid"] = {{"lo", lo}, {"hi", hi}, {"points", grid.size()}};
  m["panel"] = name;
  const std::string stem = prefix + "_" + name;
  const Histogram hist = histogram(p.spectrum, cfg.bins);
  write_eigenvalues_csv(out_path(cfg, stem + "_eigs.csv"), p.spectrum, m);
  write_histogram_csv(out_path(cfg, stem + "_hist.csv"), hist, m);
  write_curve_outputs(cfg, stem + "_limit", p.curve, m, &hist, prefix + " " + name);
  return p;
}

}  // namespace

int cmd_demo(const RunConfig& base, std::ostream& log) {
  RunConfig cfg = base;
  const bool fig1 = cfg.kind == "fig1";
  if (!fig1 && cfg.kind != "fig2-synthetic") throw InvalidArgument("unknown demo '" + cfg.kind + "' (fig1|fig2-synthetic)");
  if (cfg.n == 0) cfg.n = fig1 ? 1500 : 1000;
  if (cfg.dims.empty()) cfg.dims = fig1 ? "500,3000x5" : "400,2000x5";
  if (!fig1 && cfg.remove_pcs == 0) cfg.remove_pcs = 10;
  cfg.L = 0;
  cfg.validate();
  Timer timer;
  const Activation act = resolve_activation(cfg);
  NetworkShape shape = resolve_shape(cfg);
  const int L = shape.layers();

  Matrix X0 = sample_input(InputKind::gaussian, cfg.n, shape.dims.front(), cfg.seed);
  if (!fig1) {
    // Low-rank spike: ten strong shared directions across all samples.
    const int rank = std::min(10, static_cast<int>(std::min(X0.rows(), X0.cols())));
    const Matrix U = sample_input(InputKind::sphere, rank, shape.dims.front(), cfg.seed + 1);
    const Matrix V = sample_input(InputKind::gaussian, cfg.n, rank, cfg.seed + 2);
    X0 += 3.0 * U * V;
    X0 = remove_top_pcs(X0, cfg.remove_pcs, cfg.center).X;
  }
  const LayerStack stack = forward(X0, shape, act, cfg.seed);
  const EigenSpectrum input_spec = gram_spectrum(X0, "input");
  const SpectralMeasure mu0 = fig1 ? SpectralMeasure::marchenko_pastur(shape.gamma0())
                                   : SpectralMeasure::from_samples(input_spec.values);
  const LimitParams params = make_limit_params(mu0, shape.gammas(), act);
  const SolverOptions opts = resolve_solver(cfg);
  const std::string prefix = cfg.kind;
  const json meta = curve_meta(cfg, &act, &params, {}, cfg.eta);

  std::vector<Panel> panels;
  panels.push_back(run_panel(cfg, prefix, "input", input_spec, [&](const std::vector<double>& grid) {
    return density_from_stieltjes([&](cplx z) { return stieltjes(mu0, z); }, grid, cfg.eta);
  }, meta));
  panels.push_back(run_panel(cfg, prefix, "ck", eigenvalues_symmetric(ck_matrix(stack, L), "ck"),
                             [&](const std::vector<double>& grid) {
                               return limit_density(LimitKind::ck, params, grid, cfg.eta, opts, cfg.threads);
                             }, meta));
  panels.push_back(run_panel(cfg, prefix, "ntk", eigenvalues_symmetric(ntk_explicit(stack, act), "ntk"),
                             [&](const std::vector<double>& grid) {
                               return limit_density(LimitKind::ntk, params, grid, cfg.eta, opts, cfg.threads);
                             }, meta));

  json report = {{"metadata", meta}, {"panels", json::object()}};
  int code = kExitOk;
  for (const auto& p : panels) {
    json entry = to_json(p.report);
    entry["min_eigenvalue"] = p.spectrum.values.front();
    entry["max_eigenvalue"] = p.spectrum.values.back();
    report["panels"][p.name] = entry;
    log << prefix << ' ' << p.name << ": kolmogorov " << p.report.kolmogorov << ", unconverged "
        << p.report.unconverged_fraction << '\n';
    if (p.report.unconverged_fraction > 0.0) code = kExitPartial;
  }
  report["ntk_gap"] = {{"min_eigenvalue", panels[2].spectrum.values.front()},
                       {"half_r_plus", params.constants.r_plus / 2.0}};
  write_json(out_path(cfg, prefix + "_report.json"), report);
  log << prefix << " finished in " << timer.seconds() << " s\n";
  return code;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Limit spectra of conjugate and neural tangent kernels"};
  app.set_version_flag("--version", std::string("ntkspec ") + kVersion);
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--L", cfg.L, "number of hidden layers");
  app.add_option("--gamma", cfg.gamma, "common ratio n/d_l for all layers");
  app.add_option("--gammas", cfg.gammas, "per-layer ratios, e.g. 0.5x5 or 0.5,0.25");
  app.add_option("--n", cfg.n, "sample count");
  app.add_option("--dims", cfg.dims, "widths d0,d1,...,dL, e.g. 500,3000x5");
  app.add_option("--k", cfg.k, "output dimension (simulate ntk-multi)");
  app.add_option("--activation", cfg.activation, "identity|atan|tanh|sigmoid-centered|cos-centered");
  app.add_option("--activation-table", cfg.activation_table, "two-column CSV x,raw(x) (spline, approximate)");
  app.add_flag("--unsafe-activation", cfg.unsafe_activation, "admit non-smooth activations such as relu");
  app.add_option("--lambda", cfg.lambda, "declared derivative bound for table activations");
  app.add_option("--mu0", cfg.mu0, "point:v | mp:g | mp-sim:g | file:path | empirical");
  app.add_option("--input", cfg.input, "gaussian | sphere | path to a CSV or KSPC matrix");
  app.add_option("--taus", cfg.taus, "per-layer rates tau_1..tau_{L+1}");
  app.add_option("--coeffs", cfg.coeffs, "combo coefficients c_-1,c_0,...,c_L");
  app.add_option("--eta", cfg.eta, "imaginary offset of the smoothed density");
  app.add_option("--grid", cfg.grid, "lo:hi:n");
  app.add_option("--tol", cfg.tol, "fixed-point tolerance");
  app.add_option("--max-iter", cfg.max_iter, "iterations per initialization");
  app.add_option("--damping", cfg.damping, "damping in (0, 1]");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--threads", cfg.threads, "worker threads for limit curves");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--remove-pcs", cfg.remove_pcs, "leading principal components removed from the input");
  app.add_flag("--center", cfg.center, "subtract each column's mean before PC removal");
  app.add_option("--epsilon", cfg.epsilon, "orthonormality epsilon");
  app.add_option("--B", cfg.B, "orthonormality bound B");
  app.add_option("--bins", cfg.bins, "histogram bins");
  app.add_option("--eigs", cfg.eigs, "eigenvalue file (compare)");
  app.add_option("--curve", cfg.curve, "curve CSV (compare)");

  auto* limit = app.add_subcommand("limit", "limit density of ck | ntk | ntk-multi | combo");
  limit->add_option("kind", cfg.kind)->required();
  auto* sim = app.add_subcommand("simulate", "finite-width spectrum of ck | ntk | ntk-multi | surrogate");
  sim->add_option("kind", cfg.kind)->required();
  auto* cmp = app.add_subcommand("compare", "compare an eigenvalue file with a limit curve");
  auto* chk = app.add_subcommand("check", "(epsilon, B)-orthonormality report of an input matrix");
  auto* demo = app.add_subcommand("demo", "desk-scale figure pipeline: fig1 | fig2-synthetic");
  demo->add_option("figure", cfg.kind)->required();
  for (auto* sub : {limit, sim, cmp, chk, demo}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "ntkspec " << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (limit->parsed()) {
      cfg.command = "limit";
      return cmd_limit(cfg, err);
    }
    if (sim->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg, err);
    }
    if (cmp->parsed()) {
      cfg.command = "compare";
      return cmd_compare(cfg, err);
    }
    if (chk->parsed()) {
      cfg.command = "check";
      return cmd_check(cfg, err);
    }
    cfg.command = "demo";
    return cmd_demo(cfg, err);
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    write_error_report(cfg, e);
    return kExitError;
  }
}

}  // namespace ntkspec
