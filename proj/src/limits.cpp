#include "ntkspec/limits.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace ntkspec {

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("solver tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (max_reinits < 0) throw InvalidArgument("max_reinits must be >= 0");
  if (!(reinit_re_min < reinit_re_max) || !(reinit_im_min > 0.0) ||
      !(reinit_im_min < reinit_im_max)) {
    throw InvalidArgument("re-initialization box must be a nonempty rectangle in C^+");
  }
  if (stagnation_window < 1) throw InvalidArgument("stagnation_window must be >= 1");
  if (newton_interval < 0) throw InvalidArgument("newton_interval must be >= 0");
}

ZVector::ZVector(std::vector<cplx> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2) throw InvalidArgument("ZVector needs at least (z_{-1}, z_0)");
}

bool ZVector::in_domain(double slack) const {
  const int l = level();
  auto tol = [&](cplx v) { return slack * (1.0 + std::abs(v)); };
  const cplx first = (*this)[-1];
  if (first.imag() > tol(first)) return false;
  for (int k = 0; k < l; ++k) {
    const cplx v = (*this)[k];
    if (std::abs(v.imag()) > tol(v)) return false;
  }
  const cplx last = (*this)[l];
  if (last.imag() > tol(last) || last == cplx(0.0, 0.0)) return false;
  for (const cplx& v : entries_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

ZVector z_prev(cplx s, const ZVector& z, double b_sigma) {
  const int l = z.level();
  if (l < 1) throw ContractViolation("z_prev needs a ZVector of level >= 1");
  const double b2 = b_sigma * b_sigma;
  std::vector<cplx> out(z.entries().begin(), z.entries().end() - 1);
  out[0] += (1.0 - b2) / s;
  out.back() += b2 / s;
  return ZVector(std::move(out));
}

namespace {

using FixedPointMap = std::function<bool(std::span<const cplx>, std::span<cplx>)>;

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

bool in_upper_half(std::span<const cplx> s) {
  for (const cplx& v : s) {
    if (!finite(v) || !(v.imag() > 0.0)) return false;
  }
  return true;
}

double scaled_residual(std::span<const cplx> s, std::span<const cplx> g) {
  double r = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    r = std::max(r, std::abs(g[i] - s[i]) / std::max(1.0, std::abs(s[i])));
  }
  return r;
}

struct EngineResult {
  std::vector<cplx> s;
  int iterations = 0;
  int reinits = 0;
  double residual = 0.0;
};

// Simultaneous fixed-point iteration s <- map(s) with random restarts inside
// C^+ and periodic Newton polishing of the same fixed point.
class FixedPointEngine {
 public:
  FixedPointEngine(FixedPointMap map, std::size_t dim, const SolverOptions& opts)
      : map_(std::move(map)), dim_(dim), opts_(opts) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(opts.stream),
                      static_cast<std::uint32_t>(opts.stream >> 32)};
    rng_.seed(seq);
  }

  EngineResult run(std::span<const cplx> warm) {
    std::vector<cplx> s(dim_), g(dim_);
    if (warm.size() == dim_ && in_upper_half(warm)) {
      s.assign(warm.begin(), warm.end());
    } else {
      random_start(s);
    }
    double damping = opts_.damping;
    int iterations = 0;
    int reinits = 0;
    double best = std::numeric_limits<double>::infinity();

    for (;;) {
      double window_ref = std::numeric_limits<double>::infinity();
      for (int it = 0; it < opts_.max_iter; ++it) {
        ++iterations;
        if (!map_(s, g)) break;
        const double res = scaled_residual(s, g);
        best = std::min(best, res);
        if (res <= opts_.tol) {
          if (in_upper_half(s)) return {s, iterations, reinits, res};
          break;  // converged outside C^+
        }
        // Intermediate iterates may leave C^+ and return; only a limit
        // outside C^+ triggers a restart.
        for (std::size_t i = 0; i < dim_; ++i) s[i] = (1.0 - damping) * s[i] + damping * g[i];
        if (it % opts_.stagnation_window == 0) {
          if (it > 0 && res > 0.1 * window_ref) break;
          window_ref = res;
        }
        if (opts_.newton_interval > 0 && (it + 1) % opts_.newton_interval == 0) {
          std::vector<cplx> trial = s;
          double trial_res = 0.0;
          int steps = 0;
          const bool ok = newton(trial, trial_res, steps);
          iterations += steps;
          if (ok) return {trial, iterations, reinits, trial_res};
        }
      }
      ++reinits;
      if (reinits > opts_.max_reinits) {
        std::ostringstream msg;
        msg << "fixed-point iteration did not converge in C^+ after " << opts_.max_reinits
            << " re-initializations (best residual " << best << ")";
        throw SolverError(msg.str(), best);
      }
      damping = std::min(damping, 0.5);
      random_start(s);
    }
  }

 private:
  void random_start(std::vector<cplx>& s) {
    std::uniform_real_distribution<double> re(opts_.reinit_re_min, opts_.reinit_re_max);
    std::uniform_real_distribution<double> im(opts_.reinit_im_min, opts_.reinit_im_max);
    for (auto& v : s) {
      const double a = re(rng_);
      const double b = im(rng_);
      v = cplx(a, b);
    }
  }

  // Newton on F(s) = map(s) - s with a forward-difference Jacobian; the map
  // is holomorphic in s so a real step gives the complex derivative.
  bool newton(std::vector<cplx>& s, double& res, int& steps) {
    const std::size_t n = dim_;
    std::vector<cplx> g(n), trial(n), gt(n), sp(n), gp(n);
    if (!map_(s, g)) return false;
    res = scaled_residual(s, g);
    Eigen::MatrixXcd jac(n, n);
    Eigen::VectorXcd rhs(n);
    for (steps = 0; steps < 40; ++steps) {
      if (res <= opts_.tol) return in_upper_half(s);
      for (std::size_t j = 0; j < n; ++j) {
        sp = s;
        const double h = 1e-7 * std::max(1.0, std::abs(s[j]));
        sp[j] += h;
        if (!map_(sp, gp)) return false;
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (gp[i] - g[i]) / h;
        jac(j, j) -= 1.0;
      }
      for (std::size_t i = 0; i < n; ++i) rhs(i) = s[i] - g[i];
      const Eigen::VectorXcd delta = jac.partialPivLu().solve(rhs);
      if (!delta.allFinite()) return false;
      bool accepted = false;
      double lambda = 1.0;
      for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = s[i] + lambda * delta(i);
        if (!map_(trial, gt)) continue;
        const double r = scaled_residual(trial, gt);
        if (r < res) {
          s = trial;
          g = gt;
          res = r;
          accepted = true;
          break;
        }
      }
      if (!accepted) return false;
    }
    return res <= opts_.tol && in_upper_half(s);
  }

  FixedPointMap map_;
  std::size_t dim_;
  const SolverOptions& opts_;
  std::mt19937_64 rng_;
};

void check_gammas(std::span<const double> gammas) {
  if (gammas.empty()) throw InvalidArgument("need at least one layer ratio gamma");
  for (double g : gammas) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("layer ratios gamma must be finite and > 0");
  }
}

// Evaluation of the s-update given a trial chain s_1..s_L.
class ChainMap {
 public:
  ChainMap(const ZVector& z_top, const SpectralMeasure& mu0, std::span<const double> gammas,
           double b_sigma)
      : z_top_(z_top), mu0_(mu0), gammas_(gammas), b_sigma_(b_sigma),
        b2_(b_sigma * b_sigma), L_(static_cast<int>(gammas.size())) {}

  void build_chain(std::span<const cplx> s, std::vector<ZVector>& chain) const {
    chain.resize(static_cast<std::size_t>(L_) + 1);
    chain[L_] = z_top_;
    for (int l = L_; l >= 1; --l) chain[l - 1] = z_prev(s[l - 1], chain[l], b_sigma_);
  }

  bool operator()(std::span<const cplx> s, std::span<cplx> out) const {
    std::vector<ZVector> chain;
    build_chain(s, chain);
    const cplx a = chain[0][-1];
    const cplx b = chain[0][0];
    cplx inv_sum = 0.0, x_sum = 0.0;
    for (const Atom& atom : mu0_.atoms()) {
      const cplx r = atom.weight / (a + b * atom.location);
      inv_sum += r;
      x_sum += r * atom.location;
    }
    if (!finite(inv_sum) || !finite(x_sum)) return false;

    std::vector<cplx> w;
    for (int l = 1; l <= L_; ++l) {
      // t_{l-1}(z_{l-1}, (1-b^2, 0, ..., 0, b^2)) unrolled to the base case.
      w.assign(static_cast<std::size_t>(l) + 1, cplx(0.0, 0.0));
      w.front() += 1.0 - b2_;
      w.back() += b2_;
      cplx acc = 0.0;
      for (int k = l - 1; k >= 1; --k) {
        const ZVector& zk = chain[k];
        const cplx c = w[k + 1] / zk[k];
        acc += c;
        for (int j = -1; j < k; ++j) w[j + 1] -= c * zk[j];
      }
      acc += w[0] * inv_sum + w[1] * x_sum;
      out[l - 1] = 1.0 / chain[l][l] + gammas_[l - 1] * acc;
      if (!finite(out[l - 1])) return false;
    }
    return true;
  }

 private:
  const ZVector& z_top_;
  const SpectralMeasure& mu0_;
  std::span<const double> gammas_;
  double b_sigma_;
  double b2_;
  int L_;
};

SolverError with_layer(const SolverError& e, int layer) {
  std::ostringstream msg;
  msg << e.what() << " [layer " << layer << "]";
  return SolverError(msg.str(), e.best_residual(), layer);
}

}  // namespace

cplx mp_stieltjes(const SpectralMeasure& mu, double gamma, cplx z, const SolverOptions& opts,
                  cplx warm, FixedPointState* state) {
  opts.validate();
  if (!(gamma > 0.0)) throw InvalidArgument("MP ratio gamma must be > 0");
  if (!(z.imag() > 0.0)) throw ContractViolation("mp_stieltjes: Im z must be positive");
  auto map = [&](std::span<const cplx> m, std::span<cplx> out) {
    const cplx c = 1.0 - gamma - gamma * z * m[0];
    cplx sum = 0.0;
    for (const Atom& a : mu.atoms()) sum += a.weight / (a.location * c - z);
    out[0] = sum;
    return finite(sum);
  };
  FixedPointEngine engine(map, 1, opts);
  const cplx seed[1] = {warm};
  EngineResult r = engine.run(warm.imag() > 0.0 ? std::span<const cplx>(seed) : std::span<const cplx>());
  if (state) {
    state->s = r.s;
    state->z_chain.clear();
    state->converged = true;
    state->iterations = r.iterations;
    state->reinits = r.reinits;
    state->residual = r.residual;
  }
  return r.s[0];
}

FixedPointState solve_chain(const ZVector& z_top, const SpectralMeasure& mu0,
                            std::span<const double> gammas, double b_sigma,
                            const SolverOptions& opts, std::span<const cplx> warm) {
  opts.validate();
  check_gammas(gammas);
  const int L = static_cast<int>(gammas.size());
  if (z_top.level() != L) {
    throw ContractViolation("solve_chain: z_top level does not match the number of layers");
  }
  if (!z_top.in_domain()) throw ContractViolation("solve_chain: z_top outside C^- x R^L x C*");
  if (std::abs(b_sigma) < kZeroBSigma) {
    throw ContractViolation("solve_chain: b_sigma = 0 has no well-posed chain; use the MP reduction");
  }
  ChainMap map(z_top, mu0, gammas, b_sigma);
  FixedPointEngine engine(std::cref(map), static_cast<std::size_t>(L), opts);
  EngineResult r = engine.run(warm);

  FixedPointState state;
  state.s = std::move(r.s);
  map.build_chain(state.s, state.z_chain);
  state.converged = true;
  state.iterations = r.iterations;
  state.reinits = r.reinits;
  state.residual = r.residual;
  return state;
}

cplx t_value(const FixedPointState& state, const ZVector& z_top, std::span<const cplx> w,
             const SpectralMeasure& mu0) {
  const int l = z_top.level();
  if (state.z_chain.size() != static_cast<std::size_t>(l) + 1 || !(state.z_chain.back() == z_top)) {
    throw ContractViolation("t_value: state was not solved for this z_top");
  }
  if (w.size() != static_cast<std::size_t>(l) + 2) {
    throw ContractViolation("t_value: w must have length level + 2");
  }
  std::vector<cplx> cur(w.begin(), w.end());
  cplx acc = 0.0;
  for (int k = l; k >= 1; --k) {
    const ZVector& zk = state.z_chain[k];
    const cplx c = cur[k + 1] / zk[k];
    acc += c;
    for (int j = -1; j < k; ++j) cur[j + 1] -= c * zk[j];
  }
  const ZVector& z0 = state.z_chain[0];
  return acc + rational_moment(mu0, z0[-1], z0[0], cur[0], cur[1]);
}

LimitKind parse_limit_kind(const std::string& name) {
  if (name == "ck") return LimitKind::ck;
  if (name == "ntk") return LimitKind::ntk;
  if (name == "ntk-multi") return LimitKind::ntk_multi;
  if (name == "combo") return LimitKind::combo;
  throw InvalidArgument("unknown limit kind '" + name + "' (expected ck|ntk|ntk-multi|combo)");
}

std::string to_string(LimitKind kind) {
  switch (kind) {
    case LimitKind::ck: return "ck";
    case LimitKind::ntk: return "ntk";
    case LimitKind::ntk_multi: return "ntk-multi";
    case LimitKind::combo: return "combo";
  }
  return "?";
}

LimitParams make_limit_params(SpectralMeasure mu0, std::vector<double> gammas,
                              const Activation& act) {
  LimitParams p;
  p.mu0 = std::move(mu0);
  p.gammas = std::move(gammas);
  p.b_sigma = act.b_sigma();
  p.constants = layer_constants(act, p.layers());
  return p;
}

std::vector<double> limit_coefficients(LimitKind kind, const LimitParams& params) {
  const int L = params.layers();
  check_gammas(params.gammas);
  std::vector<double> c(static_cast<std::size_t>(L) + 2, 0.0);
  auto need_constants = [&] {
    if (params.constants.q.size() != static_cast<std::size_t>(L) ||
        params.constants.r.size() != static_cast<std::size_t>(L)) {
      throw InvalidArgument("layer constants do not match the number of layers");
    }
  };
  switch (kind) {
    case LimitKind::ck:
      c.back() = 1.0;
      break;
    case LimitKind::ntk:
      need_constants();
      c[0] = params.constants.r_plus;
      for (int l = 0; l < L; ++l) c[l + 1] = params.constants.q[l];
      c.back() = 1.0;
      break;
    case LimitKind::ntk_multi: {
      need_constants();
      if (params.taus.size() != static_cast<std::size_t>(L) + 1) {
        throw InvalidArgument("ntk-multi needs L+1 rates tau");
      }
      for (double t : params.taus) {
        if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("rates tau must be positive");
      }
      double shift = 0.0;
      for (int l = 0; l < L; ++l) {
        shift += params.taus[l] * (params.constants.r[l] - params.constants.q[l]);
        c[l + 1] = params.taus[l] * params.constants.q[l];
      }
      c[0] = shift;
      c.back() = params.taus[L];
      break;
    }
    case LimitKind::combo:
      if (params.coeffs.size() != static_cast<std::size_t>(L) + 2) {
        throw InvalidArgument("combo needs L+2 coefficients (c_{-1}, c_0, ..., c_L)");
      }
      for (double v : params.coeffs) {
        if (!std::isfinite(v)) throw InvalidArgument("combo coefficients must be finite");
      }
      if (params.coeffs.back() == 0.0) {
        throw InvalidArgument(
            "combo coefficient c_L must be nonzero; drop the last layer and use a shorter network");
      }
      c = params.coeffs;
      break;
  }
  return c;
}

LimitPoint limit_point(LimitKind kind, const LimitParams& params, cplx z,
                       const SolverOptions& opts, std::span<const cplx> warm) {
  if (!(z.imag() > 0.0)) throw ContractViolation("limit transform requires Im z > 0");
  const std::vector<double> c = limit_coefficients(kind, params);
  const int L = params.layers();
  LimitPoint out;

  if (std::abs(params.b_sigma) < kZeroBSigma) {
    // Every mu_l is MP(gamma_l) and the lower layers decouple:
    // c_{-1} + c_L * MP(gamma_L). For the NTK kinds the lower coefficients
    // are powers of b_sigma and vanish with it.
    for (int l = 0; l < L && kind == LimitKind::combo; ++l) {
      if (c[l + 1] != 0.0) {
        throw InvalidArgument(
            "b_sigma = 0: only combinations c_{-1} Id + c_L X_L^T X_L have a closed-form reduction");
      }
    }
    const double cL = c.back();
    cplx u = (z - c[0]) / cL;
    const bool flipped = u.imag() < 0.0;
    if (flipped) u = std::conj(u);
    const SpectralMeasure unit = SpectralMeasure::point_mass(1.0);
    const cplx warm_m = warm.size() == 1 ? warm[0] : cplx(0.0, 0.0);
    cplx mp;
    try {
      mp = mp_stieltjes(unit, params.gammas.back(), u, opts, warm_m, &out.state);
    } catch (const SolverError& e) {
      throw with_layer(e, L);
    }
    out.m = (flipped ? std::conj(mp) : mp) / cL;
    return out;
  }

  std::vector<cplx> top(c.begin(), c.end());
  top[0] -= z;
  const ZVector z_top(std::move(top));
  out.state = solve_chain(z_top, params.mu0, params.gammas, params.b_sigma, opts, warm);
  std::vector<cplx> w(static_cast<std::size_t>(L) + 2, cplx(0.0, 0.0));
  w[0] = 1.0;
  out.m = t_value(out.state, z_top, w, params.mu0);
  return out;
}

cplx ck_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas, double b_sigma,
                  cplx z, const SolverOptions& opts) {
  LimitParams p;
  p.mu0 = mu0;
  p.gammas.assign(gammas.begin(), gammas.end());
  p.b_sigma = b_sigma;
  return limit_point(LimitKind::ck, p, z, opts).m;
}

cplx ntk_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                   const LayerConstants& constants, double b_sigma, cplx z,
                   const SolverOptions& opts, std::span<const cplx> warm) {
  LimitParams p;
  p.mu0 = mu0;
  p.gammas.assign(gammas.begin(), gammas.end());
  p.b_sigma = b_sigma;
  p.constants = constants;
  return limit_point(LimitKind::ntk, p, z, opts, warm).m;
}

cplx linear_combo_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                            double b_sigma, std::span<const double> coeffs, cplx z,
                            const SolverOptions& opts) {
  LimitParams p;
  p.mu0 = mu0;
  p.gammas.assign(gammas.begin(), gammas.end());
  p.b_sigma = b_sigma;
  p.coeffs.assign(coeffs.begin(), coeffs.end());
  return limit_point(LimitKind::combo, p, z, opts).m;
}

cplx ntk_multi_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                         const LayerConstants& constants, double b_sigma,
                         std::span<const double> taus, cplx z, const SolverOptions& opts) {
  LimitParams p;
  p.mu0 = mu0;
  p.gammas.assign(gammas.begin(), gammas.end());
  p.b_sigma = b_sigma;
  p.constants = constants;
  p.taus.assign(taus.begin(), taus.end());
  return limit_point(LimitKind::ntk_multi, p, z, opts).m;
}

double pennington_quartic_residual(cplx mK, cplx mM, double phi, double psi, double zeta, cplx z) {
  if (!(phi > 0.0) || !(psi > 0.0)) throw InvalidArgument("phi and psi must be positive");
  if (zeta < 0.0 || zeta > 1.0) throw InvalidArgument("zeta must lie in [0, 1]");
  const cplx G = -mM;
  const cplx P = (z * G - (1.0 - psi)) / psi;
  const cplx P_phi = 1.0 + (P - 1.0) * phi;
  const cplx P_psi = 1.0 + (P - 1.0) * psi;
  const cplx t = 1.0 / (z * psi);
  const cplx prod = t * P_phi * P_psi;
  const cplx pole = 1.0 - zeta * prod;
  if (std::abs(pole) < 1e-12) throw SingularArgumentError("quartic relation hits its pole 1 - zeta t P_phi P_psi = 0");
  const cplx rhs = 1.0 + (1.0 - zeta) * prod + zeta * prod / pole;
  const double quartic = std::abs(P - rhs);

  const double gamma1 = psi / phi;
  const double relation = std::abs(mK - (mM + (1.0 - gamma1) / z) / (gamma1 * gamma1));
  return std::max(quartic, relation);
}

DensityCurve limit_density(LimitKind kind, const LimitParams& params,
                           std::span<const double> grid, double eta, const SolverOptions& opts,
                           int threads) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  opts.validate();
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw InvalidArgument("density grid must be strictly increasing");
  }
  limit_coefficients(kind, params);  // validates parameters up front

  DensityCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.eta = eta;
  curve.density.assign(grid.size(), 0.0);
  curve.diagnostics.assign(grid.size(), PointDiagnostics{});

  const std::size_t chunks = (grid.size() + kLimitChunkSize - 1) / kLimitChunkSize;
  std::atomic<std::size_t> next{0};

  auto sweep = [&](std::size_t chunk) {
    const std::size_t begin = chunk * kLimitChunkSize;
    const std::size_t end = std::min(grid.size(), begin + kLimitChunkSize);
    std::vector<cplx> prev1, prev2;  // solutions at the previous two converged points
    std::size_t idx1 = 0, idx2 = 0;
    for (std::size_t j = begin; j < end; ++j) {
      SolverOptions local = opts;
      local.stream = opts.stream * 1000003ULL + j;
      std::vector<cplx> warm;
      if (!prev1.empty() && !prev2.empty() && prev1.size() == prev2.size()) {
        const double step = (grid[j] - grid[idx1]) / (grid[idx1] - grid[idx2]);
        warm.resize(prev1.size());
        for (std::size_t i = 0; i < warm.size(); ++i) warm[i] = prev1[i] + step * (prev1[i] - prev2[i]);
        if (!in_upper_half(warm)) warm = prev1;
      }
      auto& diag = curve.diagnostics[j];
      try {
        LimitPoint pt = limit_point(kind, params, cplx(grid[j], eta), local, warm);
        double d = pt.m.imag() / std::numbers::pi;
        if (d < 0.0) {
          diag.negative_clipped = d < -1e-12;
          d = 0.0;
        }
        curve.density[j] = d;
        diag.iterations = pt.state.iterations;
        diag.reinits = pt.state.reinits;
        prev2 = std::move(prev1);
        idx2 = idx1;
        prev1 = std::move(pt.state.s);
        idx1 = j;
      } catch (const SolverError& e) {
        diag.converged = false;
        diag.failure = e.what();
        diag.reinits = opts.max_reinits;
        prev1.clear();
        prev2.clear();
      }
    }
  };

  auto worker = [&] {
    for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) sweep(c);
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chunks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const double bad = curve.unconverged_fraction();
  if (bad > 0.2) {
    std::ostringstream msg;
    msg << "limit density: " << bad * 100.0 << "% of grid points did not converge";
    throw CurveQualityError(msg.str(), std::move(curve));
  }
  return curve;
}

}  // namespace ntkspec
