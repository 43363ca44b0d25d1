#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntkspec/activation.hpp"
#include "ntkspec/limits.hpp"
#include "ntkspec/simulator.hpp"

namespace ntkspec {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

struct RunConfig {
  std::string command;  // limit | simulate | compare | check | demo
  std::string kind;     // limit/simulate kind or demo figure

  int L = 0;
  double gamma = 0.0;
  std::string gammas;  // "0.5,0.5" or "0.5x5"
  int n = 0;
  std::string dims;    // "500,3000x5"
  int k = 1;

  std::string activation = "atan";
  std::string activation_table;
  bool unsafe_activation = false;
  double lambda = 1.0;

  std::string mu0 = "point:1";
  std::string input = "gaussian";  // gaussian | sphere | matrix path
  std::string taus;
  std::string coeffs;

  double eta = 0.01;
  std::string grid;  // lo:hi:n
  double tol = 1e-11;
  int max_iter = 20000;
  double damping = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;

  std::string out = ".";
  int remove_pcs = 0;
  bool center = false;
  double epsilon = 0.1;
  double B = 5.0;
  int bins = 100;
  std::string eigs;
  std::string curve;

  nlohmann::json to_json() const;
  void validate() const;
};

// "a,b,c" with optional "vxN" repetition of a single entry.
std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};
GridSpec parse_grid(const std::string& text);

Activation resolve_activation(const RunConfig& cfg);
// gamma_1..gamma_L from --gammas, --gamma with --L, or --n with --dims.
std::vector<double> resolve_gammas(const RunConfig& cfg);
NetworkShape resolve_shape(const RunConfig& cfg);
// The (optionally PC-removed) input matrix described by --input.
Matrix resolve_input(const RunConfig& cfg);
SpectralMeasure resolve_mu0(const RunConfig& cfg);
SolverOptions resolve_solver(const RunConfig& cfg);

int cmd_limit(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_check(const RunConfig& cfg, std::ostream& log);
int cmd_demo(const RunConfig& cfg, std::ostream& log);

// Parses arguments (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntkspec
