#pragma once

#include <array>
#include <optional>
#include <span>
#include <stop_token>
#include <vector>

#include "cogen/collision.hpp"
#include "cogen/correlation.hpp"
#include "cogen/geometry.hpp"

namespace cogen {

/// Hyperparameters of the co-generation loop. Unset optionals resolve to
/// scale-aware defaults in resolve().
struct OptimizerConfig {
  double gamma = 0.5;
  int max_iters = 400;
  std::optional<double> delta_tol;     // volume change per iteration; default 1e-4 mu(Omega_1)
  double move_limit = 0.2;
  std::optional<double> step;          // default 0.1 / (eps^d * max column sum of restricted W)
  std::optional<double> penalty_init;  // default 10 / (initial g21 + g12)
  double penalty_growth = 2.0;
  std::optional<double> penalty_max;   // default 1e6 * penalty_init
  int penalty_interval = 10;           // iterations between penalty increases
  std::optional<double> ratio_penalty; // fixed penalty on h; default from the step size
  std::array<double, 3> multiplier_init{0.0, 0.0, 0.0};
  std::optional<double> tol_g;         // default 1e-6 mu(Omega_1)
  double tol_h_fraction = 0.02;        // of the initial hat measure mu(hat1) + mu(hat2)
  int max_backtracks = 20;
  double threshold = 0.5;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Concrete numbers after default resolution.
struct ResolvedConfig {
  double gamma = 0.5;
  int max_iters = 0;
  double delta_tol = 0.0;
  double move_limit = 0.0;
  double step = 0.0;
  double penalty_init = 0.0;
  double penalty_growth = 0.0;
  double penalty_max = 0.0;
  int penalty_interval = 0;
  double ratio_penalty = 0.0;
  double tol_g = 0.0;
  double tol_h = 0.0;
  int max_backtracks = 0;
  double threshold = 0.5;
};

struct IterationRecord {
  int iter = 0;
  double v1 = 0.0;  // mu(hat S1)
  double v2 = 0.0;  // mu(hat S2)
  double g21 = 0.0;
  double g12 = 0.0;
  double h = 0.0;   // gamma v1 - (1 - gamma) v2
  double delta = 0.0;
  bool stalled = false;
};

/// Hat-restricted correlation matrices with their transposes.
struct RestrictedSystem {
  CorrelationMatrix w12;
  CorrelationMatrix w21;
  CorrelationMatrix w12_t;
  CorrelationMatrix w21_t;
};

struct OptimizationState {
  DensityField rho1;
  DensityField rho2;
  PartitionMasks parts1;
  PartitionMasks parts2;
  std::array<double, 3> lambda{0.0, 0.0, 0.0};
  double penalty = 0.0;        // collision constraints
  double ratio_penalty = 0.0;  // volume-ratio constraint
  int iteration = 0;
  std::vector<IterationRecord> history;
};

/// Objective and constraint values at one iterate.
struct Evaluation {
  double v1 = 0.0;
  double v2 = 0.0;
  double g21 = 0.0;
  double g12 = 0.0;
  double h = 0.0;
  double phi = 0.0;
};

/// Gradient of the augmented Lagrangian on full-length vectors; entries off
/// the hat cells are zero.
struct Gradient {
  std::vector<double> body1;
  std::vector<double> body2;
};

RestrictedSystem restrict_system(const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                 const PartitionMasks& parts1, const PartitionMasks& parts2);

/// Initial state: densities copied, partitions from the masked local fields
/// at tolerance 0, multipliers and penalty from the config.
OptimizationState initialize_state(const DensityField& rho1, const DensityField& rho2,
                                   const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                   const OptimizerConfig& config);

ResolvedConfig resolve(const OptimizerConfig& config, const OptimizationState& state,
                       const RestrictedSystem& system);

/// Phi = -(v1 + v2) + l1 g21 + l2 g12 + l3 h + (c/2)(g21^2 + g12^2) + (c_h/2) h^2
/// over hat cells, together with its gradient.
Evaluation evaluate(const OptimizationState& state, double gamma, const RestrictedSystem& system);
std::pair<Evaluation, Gradient> lagrangian_and_gradient(const OptimizationState& state, double gamma,
                                                        const RestrictedSystem& system);

struct StepResult {
  std::vector<double> rho1;
  std::vector<double> rho2;
  double step = 0.0;
  bool stalled = false;
};

/// Projected gradient step with move limits and backtracking on Phi; tilde
/// cells are never touched. A stalled step returns the current densities.
StepResult update_step(const OptimizationState& state, const Gradient& gradient, const ResolvedConfig& config,
                       const RestrictedSystem& system, double phi_current);

/// lambda += (c g21, c g12, c_h h); c grows by the configured factor every
/// penalty_interval completed iterations, capped at penalty_max. c_h is fixed.
void multiplier_update(OptimizationState& state, const ResolvedConfig& config, const Evaluation& at);

enum class Termination { Converged, MaxIterations, Cancelled, EmptyHat };

struct CogenerationResult {
  DensityField rho1;  // continuous densities
  DensityField rho2;
  Mask solid1;        // thresholded and collision-repaired
  Mask solid2;
  PartitionMasks parts1;
  PartitionMasks parts2;
  std::vector<IterationRecord> history;
  ResolvedConfig config;
  Termination termination = Termination::MaxIterations;
  std::size_t cleared_cells = 0;
  double initial_g21 = 0.0;
  double initial_g12 = 0.0;
  double final_g21 = 0.0;  // restricted measures at the last continuous iterate
  double final_g12 = 0.0;
  std::vector<std::string> warnings;
};

/// Co-generation loop. Throws NumericalError when the gradient turns
/// non-finite.
CogenerationResult cogenerate(const DensityField& rho1, const DensityField& rho2, const OptimizerConfig& config,
                              const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                              std::stop_token stop = {});

/// Clears occupied cells greedily until the full (unrestricted) measures vanish
/// on the binary solids. Cells go in order of collision sensitivity divided by
/// their value (the continuous density when given, else 1). Returns the number
/// of cleared cells.
std::size_t repair_collisions(Mask& solid1, Mask& solid2, const Grid& grid1, const Grid& grid2,
                              const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                              std::span<const double> value1 = {}, std::span<const double> value2 = {});

/// Full measures (g21, g12) of two binary solids.
std::pair<double, double> binary_measures(const Mask& solid1, const Mask& solid2, const Grid& grid1,
                                          const Grid& grid2, const CorrelationMatrix& w12,
                                          const CorrelationMatrix& w21);

struct GammaSweepRow {
  double gamma = 0.0;
  double v1 = 0.0;  // mu(S1*) of the thresholded solid
  double v2 = 0.0;
  double sum = 0.0;
  Termination termination = Termination::MaxIterations;
};

std::vector<GammaSweepRow> gamma_sweep(const DensityField& rho1, const DensityField& rho2,
                                       std::span<const double> gammas, const OptimizerConfig& config,
                                       const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                       std::stop_token stop = {});

const char* to_string(Termination t);

}  // namespace cogen
