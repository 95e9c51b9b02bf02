#include "cogen/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

#include "cogen/errors.hpp"

namespace cogen {

void OptimizerConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(move_limit > 0.0 && move_limit <= 1.0)) throw ConfigError("move_limit must lie in (0, 1]");
  if (step && !(*step > 0.0)) throw ConfigError("step must be positive");
  if (penalty_init && !(*penalty_init > 0.0)) throw ConfigError("penalty_init must be positive");
  if (!(penalty_growth > 1.0)) throw ConfigError("penalty_growth must exceed 1");
  if (penalty_max && penalty_init && *penalty_max < *penalty_init) {
    throw ConfigError("penalty_max must not be below penalty_init");
  }
  if (ratio_penalty && !(*ratio_penalty > 0.0)) throw ConfigError("ratio_penalty must be positive");
  if (penalty_interval < 1) throw ConfigError("penalty_interval must be >= 1");
  if (delta_tol && !(*delta_tol > 0.0)) throw ConfigError("delta_tol must be positive");
  if (tol_g && !(*tol_g >= 0.0)) throw ConfigError("tol_g must be >= 0");
  if (!(tol_h_fraction >= 0.0)) throw ConfigError("tol_h_fraction must be >= 0");
  if (max_backtracks < 0) throw ConfigError("max_backtracks must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Cancelled: return "cancelled";
    case Termination::EmptyHat: return "empty_hat";
  }
  return "unknown";
}

namespace {

double hat_sum(const DensityField& rho, const Mask& hat) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (hat[i]) s += rho[i];
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double merit(const OptimizationState& s, double v1, double v2, double g21, double g12, double h) {
  return -(v1 + v2) + s.lambda[0] * g21 + s.lambda[1] * g12 + s.lambda[2] * h +
         0.5 * s.penalty * (g21 * g21 + g12 * g12) + 0.5 * s.ratio_penalty * h * h;
}

struct Products {
  std::vector<double> w12_rho2;  // body-1 rows
  std::vector<double> w21_rho1;  // body-2 rows
};

Evaluation evaluate_fields(const OptimizationState& s, std::span<const double> rho1, std::span<const double> rho2,
                           double gamma, const RestrictedSystem& sys, Products* keep) {
  const double c1 = s.rho1.grid().cell_measure();
  const double c2 = s.rho2.grid().cell_measure();
  Products p{matvec(sys.w12, rho2), matvec(sys.w21, rho1)};
  Evaluation e;
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < rho1.size(); ++i) {
    if (s.parts1.hat[i]) sum1 += rho1[i];
  }
  for (std::size_t i = 0; i < rho2.size(); ++i) {
    if (s.parts2.hat[i]) sum2 += rho2[i];
  }
  e.v1 = c1 * sum1;
  e.v2 = c2 * sum2;
  e.g21 = c1 * dot(rho1, p.w12_rho2);
  e.g12 = c2 * dot(rho2, p.w21_rho1);
  e.h = gamma * e.v1 - (1.0 - gamma) * e.v2;
  e.phi = merit(s, e.v1, e.v2, e.g21, e.g12, e.h);
  if (keep) *keep = std::move(p);
  return e;
}

}  // namespace

RestrictedSystem restrict_system(const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                 const PartitionMasks& parts1, const PartitionMasks& parts2) {
  RestrictedSystem sys;
  sys.w12 = restrict(w12, parts1.hat, parts2.hat);
  sys.w21 = restrict(w21, parts2.hat, parts1.hat);
  sys.w12_t = sys.w12.transposed();
  sys.w21_t = sys.w21.transposed();
  return sys;
}

OptimizationState initialize_state(const DensityField& rho1, const DensityField& rho2,
                                   const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                   const OptimizerConfig& config) {
  OptimizationState s;
  s.rho1 = rho1;
  s.rho2 = rho2;
  // A cell collides if it does so in either leg: as a stationary cell of one
  // matrix or as a moving vertex of the other.
  auto both_legs = [](const DensityField& self, const DensityField& other, const CorrelationMatrix& w_stat,
                      const CorrelationMatrix& w_mov) {
    auto f = local_field(self, other, w_stat, true);
    const auto g = matvec_transposed(w_mov, other.values());
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] += self[i] * g[i];
    return f;
  };
  s.parts1 = partition(rho1, both_legs(rho1, rho2, w12, w21), 0.0);
  s.parts2 = partition(rho2, both_legs(rho2, rho1, w21, w12), 0.0);
  s.lambda = config.multiplier_init;
  return s;
}

ResolvedConfig resolve(const OptimizerConfig& config, const OptimizationState& state,
                       const RestrictedSystem& system) {
  config.validate();
  const double c1 = state.rho1.grid().cell_measure();
  const double c2 = state.rho2.grid().cell_measure();
  const double omega1 = state.rho1.grid().domain_measure();
  ResolvedConfig r;
  r.gamma = config.gamma;
  r.max_iters = config.max_iters;
  r.move_limit = config.move_limit;
  r.penalty_growth = config.penalty_growth;
  r.penalty_interval = config.penalty_interval;
  r.max_backtracks = config.max_backtracks;
  r.threshold = config.threshold;
  r.delta_tol = config.delta_tol.value_or(1e-4 * omega1);
  r.tol_g = config.tol_g.value_or(1e-6 * omega1);
  const double lipschitz = std::max(c1 * max_or_zero(system.w12.column_sums()),
                                    c2 * max_or_zero(system.w21.column_sums()));
  r.step = config.step.value_or(lipschitz > 0.0 ? 0.1 / lipschitz : 0.1 / std::max(c1, c2));
  {
    const Evaluation e0 = evaluate(state, config.gamma, system);
    const double g0 = e0.g21 + e0.g12;
    r.penalty_init = config.penalty_init.value_or(g0 > 0.0 ? 10.0 / g0 : 10.0 / std::max(c1, c2));
  }
  r.penalty_max = config.penalty_max.value_or(1e6 * r.penalty_init);
  {
    // Keeps the per-iteration dual update on h stable under one gradient step.
    const double n1 = static_cast<double>(popcount(state.parts1.hat));
    const double n2 = static_cast<double>(popcount(state.parts2.hat));
    const double g = config.gamma;
    const double curvature = g * g * c1 * c1 * n1 + (1.0 - g) * (1.0 - g) * c2 * c2 * n2;
    r.ratio_penalty = config.ratio_penalty.value_or(curvature > 0.0 ? 0.5 / (r.step * curvature) : 1.0);
  }
  const double hat_measure = c1 * hat_sum(state.rho1, state.parts1.hat) + c2 * hat_sum(state.rho2, state.parts2.hat);
  r.tol_h = config.tol_h_fraction * hat_measure;
  return r;
}

Evaluation evaluate(const OptimizationState& state, double gamma, const RestrictedSystem& system) {
  return evaluate_fields(state, state.rho1.values(), state.rho2.values(), gamma, system, nullptr);
}

std::pair<Evaluation, Gradient> lagrangian_and_gradient(const OptimizationState& state, double gamma,
                                                        const RestrictedSystem& system) {
  Products p;
  const Evaluation e = evaluate_fields(state, state.rho1.values(), state.rho2.values(), gamma, system, &p);
  const double c1 = state.rho1.grid().cell_measure();
  const double c2 = state.rho2.grid().cell_measure();
  const double c = state.penalty;
  const double m21 = state.lambda[0] + c * e.g21;
  const double m12 = state.lambda[1] + c * e.g12;
  const double mh = state.lambda[2] + state.ratio_penalty * e.h;

  // d g21 / d rho2 = eps1^d W12^T rho1,  d g12 / d rho1 = eps2^d W21^T rho2.
  const auto w12t_rho1 = matvec(system.w12_t, state.rho1.values());
  const auto w21t_rho2 = matvec(system.w21_t, state.rho2.values());

  Gradient g{std::vector<double>(state.rho1.size(), 0.0), std::vector<double>(state.rho2.size(), 0.0)};
  for (std::size_t i = 0; i < g.body1.size(); ++i) {
    if (!state.parts1.hat[i]) continue;
    g.body1[i] = c1 * (-1.0 + mh * gamma) + m21 * c1 * p.w12_rho2[i] + m12 * c2 * w21t_rho2[i];
  }
  for (std::size_t i = 0; i < g.body2.size(); ++i) {
    if (!state.parts2.hat[i]) continue;
    g.body2[i] = c2 * (-1.0 - mh * (1.0 - gamma)) + m21 * c1 * w12t_rho1[i] + m12 * c2 * p.w21_rho1[i];
  }
  return {e, std::move(g)};
}

StepResult update_step(const OptimizationState& state, const Gradient& gradient, const ResolvedConfig& config,
                       const RestrictedSystem& system, double phi_current) {
  const auto r1 = state.rho1.values();
  const auto r2 = state.rho2.values();
  if (gradient.body1.size() != r1.size() || gradient.body2.size() != r2.size()) {
    throw DimensionError("gradient does not match the density fields");
  }
  auto project = [&](std::span<const double> rho, const std::vector<double>& grad, const Mask& hat, double eta) {
    std::vector<double> out(rho.begin(), rho.end());
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (!hat[i]) continue;
      const double lo = std::max(0.0, rho[i] - config.move_limit);
      const double hi = std::min(1.0, rho[i] + config.move_limit);
      out[i] = std::clamp(rho[i] - eta * grad[i], lo, hi);
    }
    return out;
  };

  double eta = config.step;
  for (int attempt = 0; attempt <= config.max_backtracks; ++attempt, eta *= 0.5) {
    StepResult trial{project(r1, gradient.body1, state.parts1.hat, eta),
                     project(r2, gradient.body2, state.parts2.hat, eta), eta, false};
    const Evaluation e = evaluate_fields(state, trial.rho1, trial.rho2, config.gamma, system, nullptr);
    if (e.phi <= phi_current) return trial;
  }
  return {std::vector<double>(r1.begin(), r1.end()), std::vector<double>(r2.begin(), r2.end()), 0.0, true};
}

void multiplier_update(OptimizationState& state, const ResolvedConfig& config, const Evaluation& at) {
  state.lambda[0] += state.penalty * at.g21;
  state.lambda[1] += state.penalty * at.g12;
  state.lambda[2] += state.ratio_penalty * at.h;
  if (state.iteration > 0 && state.iteration % config.penalty_interval == 0) {
    state.penalty = std::min(config.penalty_growth * state.penalty, config.penalty_max);
  }
}

// ---------------------------------------------------------------------------

std::pair<double, double> binary_measures(const Mask& solid1, const Mask& solid2, const Grid& grid1,
                                          const Grid& grid2, const CorrelationMatrix& w12,
                                          const CorrelationMatrix& w21) {
  const DensityField f1 = field_from_mask(grid1, solid1);
  const DensityField f2 = field_from_mask(grid2, solid2);
  return {global_measure(f1, f2, w12), global_measure(f2, f1, w21)};
}

std::size_t repair_collisions(Mask& solid1, Mask& solid2, const Grid& grid1, const Grid& grid2,
                              const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                              std::span<const double> value1, std::span<const double> value2) {
  if (solid1.size() != w12.rows() || solid2.size() != w12.cols() || solid1.size() != w21.cols() ||
      solid2.size() != w21.rows()) {
    throw DimensionError("repair: masks do not match the correlation matrices");
  }
  if ((!value1.empty() && value1.size() != solid1.size()) || (!value2.empty() && value2.size() != solid2.size())) {
    throw DimensionError("repair: cell values do not match the masks");
  }
  const double c1 = grid1.cell_measure();
  const double c2 = grid2.cell_measure();
  const auto f1 = field_from_mask(grid1, solid1);
  const auto f2 = field_from_mask(grid2, solid2);
  const CorrelationMatrix w12_t = w12.transposed();
  const CorrelationMatrix w21_t = w21.transposed();

  // score = d(g21 + g12) / d rho of an occupied cell.
  std::vector<double> score1(solid1.size());
  std::vector<double> score2(solid2.size());
  {
    const auto a = matvec(w12, f2.values());
    const auto b = matvec(w21_t, f2.values());
    for (std::size_t i = 0; i < score1.size(); ++i) score1[i] = c1 * a[i] + c2 * b[i];
    const auto e = matvec(w21, f1.values());
    const auto d = matvec(w12_t, f1.values());
    for (std::size_t j = 0; j < score2.size(); ++j) score2[j] = c2 * e[j] + c1 * d[j];
  }
  const double floor = 0.5 * std::min(w12.delta() > 0 ? w12.delta() : 1.0, w21.delta() > 0 ? w21.delta() : 1.0) *
                       std::min(c1, c2);

  auto priority = [&](int body, CellIndex i) {
    const auto& v = body == 1 ? value1 : value2;
    const double s = body == 1 ? score1[i] : score2[i];
    return v.empty() ? s : s / std::max(v[i], 1e-3);
  };

  // Max-heap on (priority, then body 1 before body 2, then lower index).
  using Item = std::tuple<double, int, CellIndex>;
  auto less = [](const Item& a, const Item& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) > std::get<2>(b);
  };
  std::priority_queue<Item, std::vector<Item>, decltype(less)> heap(less);
  for (std::size_t i = 0; i < score1.size(); ++i) {
    if (solid1[i] && score1[i] > floor) heap.emplace(priority(1, i), 1, static_cast<CellIndex>(i));
  }
  for (std::size_t j = 0; j < score2.size(); ++j) {
    if (solid2[j] && score2[j] > floor) heap.emplace(priority(2, j), 2, static_cast<CellIndex>(j));
  }

  std::vector<CellIndex> touched;
  auto lower = [&](const CorrelationMatrix& w, CellIndex row, double scale, std::vector<double>& score) {
    const auto off = w.row_offsets();
    const auto cols = w.col_indices();
    const auto vals = w.weights();
    for (auto k = off[row]; k < off[row + 1]; ++k) {
      score[cols[k]] -= scale * vals[k];
      touched.push_back(cols[k]);
    }
  };

  std::size_t cleared = 0;
  while (!heap.empty()) {
    const auto [s, body, idx] = heap.top();
    heap.pop();
    Mask& solid = body == 1 ? solid1 : solid2;
    if (!solid[idx] || priority(body, idx) != s) continue;  // stale entry
    solid[idx] = 0;
    ++cleared;
    // Removing a body-1 cell lowers the scores of body-2 cells that touch it
    // through row idx of W12 (g21) and column idx of W21 (g12), and vice versa.
    touched.clear();
    Mask& other = body == 1 ? solid2 : solid1;
    auto& other_score = body == 1 ? score2 : score1;
    if (body == 1) {
      lower(w12, idx, c1, score2);
      lower(w21_t, idx, c2, score2);
    } else {
      lower(w21, idx, c2, score1);
      lower(w12_t, idx, c1, score1);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (CellIndex j : touched) {
      if (other[j] && other_score[j] > floor) heap.emplace(priority(body == 1 ? 2 : 1, j), body == 1 ? 2 : 1, j);
    }
  }
  return cleared;
}

// ---------------------------------------------------------------------------

CogenerationResult cogenerate(const DensityField& rho1, const DensityField& rho2, const OptimizerConfig& config,
                              const CorrelationMatrix& w12, const CorrelationMatrix& w21, std::stop_token stop) {
  config.validate();
  OptimizationState state = initialize_state(rho1, rho2, w12, w21, config);
  const RestrictedSystem sys = restrict_system(w12, w21, state.parts1, state.parts2);
  const ResolvedConfig rc = resolve(config, state, sys);
  state.penalty = rc.penalty_init;
  state.ratio_penalty = rc.ratio_penalty;

  CogenerationResult out;
  out.config = rc;
  out.parts1 = state.parts1;
  out.parts2 = state.parts2;
  {
    const Evaluation e0 = evaluate(state, rc.gamma, sys);
    out.initial_g21 = e0.g21;
    out.initial_g12 = e0.g12;
  }

  if (popcount(state.parts1.hat) == 0 && popcount(state.parts2.hat) == 0) {
    out.warnings.push_back("initial designs never collide; returning them unchanged");
    out.termination = Termination::EmptyHat;
  } else {
    out.termination = Termination::MaxIterations;
    while (state.iteration < rc.max_iters) {
      if (stop.stop_requested()) {
        out.termination = Termination::Cancelled;
        break;
      }
      const auto [eval, grad] = lagrangian_and_gradient(state, rc.gamma, sys);
      for (const auto* g : {&grad.body1, &grad.body2}) {
        for (double v : *g) {
          if (!std::isfinite(v)) {
            throw NumericalError("non-finite gradient at iteration " + std::to_string(state.iteration));
          }
        }
      }
      StepResult step = update_step(state, grad, rc, sys, eval.phi);

      double change = 0.0;
      {
        double d1 = 0.0;
        double d2 = 0.0;
        for (std::size_t i = 0; i < step.rho1.size(); ++i) d1 += std::abs(step.rho1[i] - state.rho1[i]);
        for (std::size_t i = 0; i < step.rho2.size(); ++i) d2 += std::abs(step.rho2[i] - state.rho2[i]);
        change = d1 * state.rho1.grid().cell_measure() + d2 * state.rho2.grid().cell_measure();
      }
      state.rho1.assign(std::move(step.rho1));
      state.rho2.assign(std::move(step.rho2));
      ++state.iteration;

      const Evaluation now = evaluate(state, rc.gamma, sys);
      state.history.push_back({state.iteration, now.v1, now.v2, now.g21, now.g12, now.h, change, step.stalled});
      multiplier_update(state, rc, now);

      const bool feasible = now.g21 + now.g12 <= rc.tol_g && std::abs(now.h) <= rc.tol_h;
      if (change < rc.delta_tol && feasible) {
        out.termination = Termination::Converged;
        break;
      }
    }
  }

  const Evaluation last = evaluate(state, rc.gamma, sys);
  out.final_g21 = last.g21;
  out.final_g12 = last.g12;
  out.solid1 = threshold(state.rho1, rc.threshold);
  out.solid2 = threshold(state.rho2, rc.threshold);
  out.cleared_cells = repair_collisions(out.solid1, out.solid2, rho1.grid(), rho2.grid(), w12, w21,
                                       state.rho1.values(), state.rho2.values());
  if (out.cleared_cells > 0) {
    out.warnings.push_back("cleared " + std::to_string(out.cleared_cells) +
                           " thresholded cells to restore zero collision");
  }
  out.rho1 = std::move(state.rho1);
  out.rho2 = std::move(state.rho2);
  out.history = std::move(state.history);
  return out;
}

std::vector<GammaSweepRow> gamma_sweep(const DensityField& rho1, const DensityField& rho2,
                                       std::span<const double> gammas, const OptimizerConfig& config,
                                       const CorrelationMatrix& w12, const CorrelationMatrix& w21,
                                       std::stop_token stop) {
  std::vector<GammaSweepRow> rows;
  for (double g : gammas) {
    OptimizerConfig c = config;
    c.gamma = g;
    const auto r = cogenerate(rho1, rho2, c, w12, w21, stop);
    GammaSweepRow row;
    row.gamma = g;
    row.v1 = measure(field_from_mask(rho1.grid(), r.solid1));
    row.v2 = measure(field_from_mask(rho2.grid(), r.solid2));
    row.sum = row.v1 + row.v2;
    row.termination = r.termination;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cogen
