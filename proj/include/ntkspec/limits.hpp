#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ntkspec/activation.hpp"
#include "ntkspec/errors.hpp"
#include "ntkspec/measure.hpp"

namespace ntkspec {

// Below this |b_sigma| the general recursion is ill-posed and the
// Marchenko-Pastur reductions are used instead.
inline constexpr double kZeroBSigma = 1e-8;

struct SolverOptions {
  double tol = 1e-11;        // sup-norm update, relative to max(1, |s|)
  int max_iter = 20000;      // plain iterations per initialization
  int max_reinits = 50;
  double damping = 1.0;      // s <- (1-d) s + d * update
  double reinit_re_min = -2.0;
  double reinit_re_max = 2.0;
  double reinit_im_min = 0.05;
  double reinit_im_max = 2.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // RNG substream, e.g. the grid index
  // Re-initialize when the update fails to shrink 10x over this many steps.
  int stagnation_window = 500;
  // Every this many plain steps try Newton on s - update(s) from the current
  // iterate; 0 disables.
  int newton_interval = 50;

  void validate() const;
};

// (z_{-1}, z_0, ..., z_l), indexed from -1.
class ZVector {
 public:
  ZVector() = default;
  explicit ZVector(std::vector<cplx> entries);

  int level() const { return static_cast<int>(entries_.size()) - 2; }
  cplx operator[](int k) const { return entries_[static_cast<std::size_t>(k + 1)]; }
  cplx& operator[](int k) { return entries_[static_cast<std::size_t>(k + 1)]; }
  std::span<const cplx> entries() const { return entries_; }

  // z_{-1} in the closed lower half-plane, z_0..z_{l-1} real, z_l in the
  // closed lower half-plane and nonzero. `slack` absorbs round-off.
  bool in_domain(double slack = 1e-12) const;

  friend bool operator==(const ZVector&, const ZVector&) = default;

 private:
  std::vector<cplx> entries_;
};

// (z_{-1} + (1-b^2)/s, z_0, ..., z_{l-2}, z_{l-1} + b^2/s).
ZVector z_prev(cplx s, const ZVector& z, double b_sigma);

struct FixedPointState {
  std::vector<cplx> s;           // s_1..s_L
  std::vector<ZVector> z_chain;  // z_chain[l] = z_l for l = 0..L; back() is the top
  bool converged = false;
  int iterations = 0;
  int reinits = 0;
  double residual = std::numeric_limits<double>::infinity();
};

// Solution of the Marchenko-Pastur equation
//   m = int dmu(x) / (x (1 - gamma - gamma z m) - z),  Im m > 0.
cplx mp_stieltjes(const SpectralMeasure& mu, double gamma, cplx z, const SolverOptions& opts,
                  cplx warm = cplx(0.0, 0.0), FixedPointState* state = nullptr);

// Solves the coupled fixed points s_1..s_L for the argument z_top by
// simultaneous updates. `warm` (size L, inside C^+) seeds the first
// iterate; otherwise the start is drawn from the re-initialization box.
FixedPointState solve_chain(const ZVector& z_top, const SpectralMeasure& mu0,
                            std::span<const double> gammas, double b_sigma,
                            const SolverOptions& opts, std::span<const cplx> warm = {});

// t_l(z_top, w) unrolled through the solved chain. Throws ContractViolation if
// `state` was not solved for `z_top` or `w` has the wrong length.
cplx t_value(const FixedPointState& state, const ZVector& z_top, std::span<const cplx> w,
             const SpectralMeasure& mu0);

// Limit Stieltjes transform of X_L^T X_L.
cplx ck_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas, double b_sigma,
                  cplx z, const SolverOptions& opts);

// Limit Stieltjes transform of the single-output NTK.
cplx ntk_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                   const LayerConstants& constants, double b_sigma, cplx z,
                   const SolverOptions& opts, std::span<const cplx> warm = {});

// Limit transform of c_{-1} Id + c_0 X_0^T X_0 + ... + c_L X_L^T X_L, with
// coeffs = (c_{-1}, c_0, ..., c_L) real and c_L != 0.
cplx linear_combo_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                            double b_sigma, std::span<const double> coeffs, cplx z,
                            const SolverOptions& opts);

// Multi-output NTK with per-layer rates taus = (tau_1, ..., tau_{L+1}).
// Independent of the output dimension.
cplx ntk_multi_stieltjes(const SpectralMeasure& mu0, std::span<const double> gammas,
                         const LayerConstants& constants, double b_sigma,
                         std::span<const double> taus, cplx z, const SolverOptions& opts);

// Residual of the one-hidden-layer quartic for Gaussian inputs, written in
// terms of m_M(z) (companion d1 x d1 covariance) and m_K = m_K(gamma_1 z) for
// the CK. Returns the larger of |P - RHS(P)| and the residual of
// m_K(gamma_1 z) = (m_M(z) + (1 - gamma_1)/z) / gamma_1^2, gamma_1 = psi/phi.
double pennington_quartic_residual(cplx mK, cplx mM, double phi, double psi, double zeta, cplx z);

enum class LimitKind { ck, ntk, ntk_multi, combo };

LimitKind parse_limit_kind(const std::string& name);
std::string to_string(LimitKind kind);

struct LimitParams {
  SpectralMeasure mu0;
  std::vector<double> gammas;  // gamma_1..gamma_L
  double b_sigma = 1.0;
  LayerConstants constants;    // ntk and ntk-multi
  std::vector<double> taus;    // ntk-multi: tau_1..tau_{L+1}
  std::vector<double> coeffs;  // combo: c_{-1}, c_0..c_L

  int layers() const { return static_cast<int>(gammas.size()); }
};

LimitParams make_limit_params(SpectralMeasure mu0, std::vector<double> gammas,
                              const Activation& act);

// (c_{-1}, c_0, ..., c_L) of the linear combination whose limit is computed.
std::vector<double> limit_coefficients(LimitKind kind, const LimitParams& params);

struct LimitPoint {
  cplx m;
  FixedPointState state;  // for b_sigma = 0 reductions, s holds the single MP transform
};

LimitPoint limit_point(LimitKind kind, const LimitParams& params, cplx z,
                       const SolverOptions& opts, std::span<const cplx> warm = {});

// Raised by limit_density when more than 20% of the grid failed to converge.
class CurveQualityError : public Error {
 public:
  CurveQualityError(const std::string& what, DensityCurve curve)
      : Error(what), curve_(std::move(curve)) {}
  const DensityCurve& curve() const { return curve_; }

 private:
  DensityCurve curve_;
};

inline constexpr std::size_t kLimitChunkSize = 64;

// Smoothed limit density on `grid`. The grid is split into fixed chunks of
// kLimitChunkSize points; each chunk is swept left to right, warm-starting
// every point from linear extrapolation of the previous two solutions, and
// chunks are distributed over `threads` workers. The output does not depend
// on the thread count.
DensityCurve limit_density(LimitKind kind, const LimitParams& params,
                           std::span<const double> grid, double eta, const SolverOptions& opts,
                           int threads = 1);

}  // namespace ntkspec
