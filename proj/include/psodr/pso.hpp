#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psodr/core_data.hpp"
#include "psodr/parallel.hpp"
#include "psodr/rng.hpp"

namespace psodr {

struct SwarmConfig {
  std::size_t pop_size = 30;
  std::size_t n = 10;  // electrodes per mask
  std::size_t k = 30;  // bins per electrode
  std::size_t n_channels = 118;
  std::size_t n_bins = 250;
  std::size_t max_iter = 100;
  double c1 = 0.5;
  double c2 = 2.5;
  double w1 = 0.2;  // inertia at t = 0
  double w2 = 1.0;  // inertia at t = max_iter
  double v_max_fraction = 0.25;  // clamp as a fraction of each component's range
  double target_fitness = 1.0;
  std::uint64_t seed = 0;
};

inline std::vector<std::string> validate_swarm_config(const SwarmConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.pop_size < 2) problems.emplace_back("pop_size must be at least 2");
  if (cfg.n == 0 || cfg.n > cfg.n_channels) problems.emplace_back("n must lie in [1, n_channels]");
  if (cfg.k == 0 || cfg.k > cfg.n_bins) problems.emplace_back("k must lie in [1, n_bins]");
  if (cfg.c1 < 0.0 || cfg.c2 < 0.0) problems.emplace_back("acceleration coefficients must be non-negative");
  if (cfg.max_iter == 0) problems.emplace_back("max_iter must be positive");
  if (!(cfg.v_max_fraction > 0.0)) problems.emplace_back("v_max_fraction must be positive");
  return problems;
}

/// Flat particle layout: for each of the n electrode slots, one channel
/// component followed by k bin components.
struct SearchLayout {
  std::size_t n = 0, k = 0, n_channels = 0, n_bins = 0;

  static SearchLayout from(const SwarmConfig& cfg) { return {cfg.n, cfg.k, cfg.n_channels, cfg.n_bins}; }

  std::size_t dims() const { return n * (k + 1); }
  bool is_channel_slot(std::size_t j) const { return j % (k + 1) == 0; }
  double upper(std::size_t j) const { return static_cast<double>(is_channel_slot(j) ? n_channels : n_bins); }

  std::vector<double> upper_bounds() const {
    std::vector<double> out(dims());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = upper(j);
    return out;
  }
};

struct ParticleState {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> pbest_position;
  double pbest_fitness = -std::numeric_limits<double>::infinity();
  double current_fitness = -std::numeric_limits<double>::infinity();
};

struct SwarmState {
  std::vector<ParticleState> particles;
  std::vector<double> gbest_position;
  double gbest_fitness = -std::numeric_limits<double>::infinity();
  std::size_t gbest_particle = 0;
  std::size_t iteration = 0;
  Rng rng;
};

/// Time-varying inertia weight: (w1 - w2) * (max_iter - t) / max_iter + w2.
inline double ldiw(double w1, double w2, std::size_t t, std::size_t max_iter) {
  if (max_iter == 0) throw std::invalid_argument("ldiw: max_iter must be positive");
  if (t > max_iter) throw std::invalid_argument("ldiw: t exceeds max_iter");
  // (w1 - w2) * r + w2, written as a convex combination so both endpoints come out exact.
  const double r = static_cast<double>(max_iter - t) / static_cast<double>(max_iter);
  return r * w1 + (1.0 - r) * w2;
}

/// v' = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped to [-v_max, v_max].
///
/// `draw` yields U[0,1) values; r1 then r2 are drawn for each component in order.
template <typename UniformSource>
std::vector<double> update_velocity(const ParticleState& p, std::span<const double> gbest, double w, double c1,
                                    double c2, std::span<const double> v_max, UniformSource&& draw) {
  const std::size_t d = p.position.size();
  if (p.velocity.size() != d || p.pbest_position.size() != d || gbest.size() != d || v_max.size() != d)
    throw std::invalid_argument("update_velocity: shape mismatch");
  std::vector<double> v(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double r1 = draw();
    const double r2 = draw();
    const double raw = w * p.velocity[j] + c1 * r1 * (p.pbest_position[j] - p.position[j]) +
                       c2 * r2 * (gbest[j] - p.position[j]);
    v[j] = std::clamp(raw, -v_max[j], v_max[j]);
  }
  return v;
}

struct Reflected {
  double position;
  bool flipped;
};

/// Mirrors x into [0, hi). An odd number of bounces flips the velocity.
inline Reflected reflect_into_range(double x, double hi) {
  if (x >= 0.0 && x < hi) return {x, false};
  const double q = std::floor(x / hi);
  double r = x - q * hi;
  if (r < 0.0) r = 0.0;
  const bool odd = std::fmod(std::abs(q), 2.0) == 1.0;
  double pos = odd ? hi - r : r;
  if (pos >= hi) pos = std::nextafter(hi, 0.0);
  return {pos, odd};
}

/// x' = x + v with boundary reflection; reflected components get their velocity negated.
inline void update_position(ParticleState& p, std::span<const double> upper) {
  for (std::size_t j = 0; j < p.position.size(); ++j) {
    const auto r = reflect_into_range(p.position[j] + p.velocity[j], upper[j]);
    p.position[j] = r.position;
    if (r.flipped) p.velocity[j] = -p.velocity[j];
  }
}

namespace detail {

/// floor(x), or the closest unused cell when taken. Distance is measured from x
/// to each cell's centre; equal distances go to the lower index.
inline int claim_index(double x, std::size_t range, std::vector<bool>& used) {
  const auto cell = static_cast<long>(std::clamp(std::floor(x), 0.0, static_cast<double>(range - 1)));
  if (!used[static_cast<std::size_t>(cell)]) {
    used[static_cast<std::size_t>(cell)] = true;
    return static_cast<int>(cell);
  }
  for (long d = 1; d < static_cast<long>(range); ++d) {
    const long down = cell - d, up = cell + d;
    const bool down_ok = down >= 0 && !used[static_cast<std::size_t>(down)];
    const bool up_ok = up < static_cast<long>(range) && !used[static_cast<std::size_t>(up)];
    long pick = -1;
    if (down_ok && up_ok) {
      const double dd = std::abs(x - (static_cast<double>(down) + 0.5));
      const double du = std::abs(x - (static_cast<double>(up) + 0.5));
      pick = du < dd ? up : down;
    } else if (down_ok) {
      pick = down;
    } else if (up_ok) {
      pick = up;
    }
    if (pick >= 0) {
      used[static_cast<std::size_t>(pick)] = true;
      return static_cast<int>(pick);
    }
  }
  throw std::logic_error("claim_index: no free index");
}

}  // namespace detail

/// Floors each component into a channel or bin index, replacing duplicates in
/// the ELV (and within each FSM row) by the nearest unused index.
inline Mask decode_mask(std::span<const double> position, const SearchLayout& layout) {
  if (position.size() != layout.dims()) throw std::invalid_argument("decode_mask: position size mismatch");
  Mask mask;
  mask.elv.reserve(layout.n);
  mask.fsm.reserve(layout.n);
  std::vector<bool> used_channels(layout.n_channels, false);
  for (std::size_t i = 0; i < layout.n; ++i) {
    const std::size_t base = i * (layout.k + 1);
    mask.elv.push_back(detail::claim_index(position[base], layout.n_channels, used_channels));
    std::vector<bool> used_bins(layout.n_bins, false);
    std::vector<int> row;
    row.reserve(layout.k);
    for (std::size_t j = 0; j < layout.k; ++j)
      row.push_back(detail::claim_index(position[base + 1 + j], layout.n_bins, used_bins));
    mask.fsm.push_back(std::move(row));
  }
  return mask;
}

/// Personal bests move only on strict improvement; the global best follows the
/// best personal best (first index on ties) and only on strict improvement.
inline void update_bests(SwarmState& state, std::span<const double> fitnesses) {
  if (fitnesses.size() != state.particles.size()) throw std::invalid_argument("update_bests: one fitness per particle");
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    auto& p = state.particles[i];
    p.current_fitness = fitnesses[i];
    if (fitnesses[i] > p.pbest_fitness) {
      p.pbest_fitness = fitnesses[i];
      p.pbest_position = p.position;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < state.particles.size(); ++i)
    if (state.particles[i].pbest_fitness > state.particles[best].pbest_fitness) best = i;
  if (state.particles[best].pbest_fitness > state.gbest_fitness || state.gbest_position.empty()) {
    state.gbest_fitness = state.particles[best].pbest_fitness;
    state.gbest_position = state.particles[best].pbest_position;
    state.gbest_particle = best;
  }
}

inline std::vector<double> velocity_limits(const SwarmConfig& cfg) {
  auto limits = SearchLayout::from(cfg).upper_bounds();
  for (double& v : limits) v *= cfg.v_max_fraction;
  return limits;
}

/// Random positions in range and random velocities within the clamp. Fitness is not evaluated.
inline SwarmState init_swarm(const SwarmConfig& cfg) {
  if (auto problems = validate_swarm_config(cfg); !problems.empty())
    throw std::invalid_argument("invalid swarm config: " + problems.front());
  const auto layout = SearchLayout::from(cfg);
  const auto upper = layout.upper_bounds();
  const auto vmax = velocity_limits(cfg);
  SwarmState state{{}, {}, -std::numeric_limits<double>::infinity(), 0, 0, Rng(cfg.seed)};
  state.particles.resize(cfg.pop_size);
  for (auto& p : state.particles) {
    p.position.resize(layout.dims());
    p.velocity.resize(layout.dims());
    for (std::size_t j = 0; j < layout.dims(); ++j) p.position[j] = state.rng.uniform(0.0, upper[j]);
    for (std::size_t j = 0; j < layout.dims(); ++j) p.velocity[j] = state.rng.uniform(-vmax[j], vmax[j]);
    p.pbest_position = p.position;
  }
  return state;
}

/// Evaluates every particle's decoded mask, in particle order, on up to `jobs` threads.
template <typename Fitness>
std::vector<double> evaluate_swarm(const SwarmState& state, const SearchLayout& layout, Fitness& fitness,
                                   std::size_t jobs) {
  std::vector<double> out(state.particles.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = static_cast<double>(fitness(decode_mask(state.particles[i].position, layout)));
  });
  return out;
}

/// One iteration: velocity and position updates, then evaluation and best tracking.
template <typename Fitness>
void step_swarm(SwarmState& state, const SwarmConfig& cfg, Fitness& fitness, std::size_t jobs = 1) {
  const auto layout = SearchLayout::from(cfg);
  const auto upper = layout.upper_bounds();
  const auto vmax = velocity_limits(cfg);
  state.iteration += 1;
  const double w = ldiw(cfg.w1, cfg.w2, std::min(state.iteration, cfg.max_iter), cfg.max_iter);
  auto draw = [&state] { return state.rng.uniform(); };
  for (auto& p : state.particles) {
    p.velocity = update_velocity(p, state.gbest_position, w, cfg.c1, cfg.c2, vmax, draw);
    update_position(p, upper);
  }
  const auto fit = evaluate_swarm(state, layout, fitness, jobs);
  update_bests(state, fit);
}

struct PsoResult {
  Mask mask;
  double fitness = 0.0;
  std::vector<double> history;  // gbest fitness after initialization and after each iteration
  std::size_t iterations = 0;
};

/// Basic PSO loop: initialize, evaluate, then iterate until max_iter or until
/// the global best reaches target_fitness. `fitness` maps a Mask to a score to maximize.
template <typename Fitness>
PsoResult run_pso(const SwarmConfig& cfg, Fitness&& fitness, std::size_t jobs = 1) {
  auto state = init_swarm(cfg);
  const auto layout = SearchLayout::from(cfg);
  update_bests(state, evaluate_swarm(state, layout, fitness, jobs));
  PsoResult result;
  result.history.push_back(state.gbest_fitness);
  while (state.iteration < cfg.max_iter && state.gbest_fitness < cfg.target_fitness) {
    step_swarm(state, cfg, fitness, jobs);
    result.history.push_back(state.gbest_fitness);
  }
  result.mask = decode_mask(state.gbest_position, layout);
  result.fitness = state.gbest_fitness;
  result.iterations = state.iteration;
  return result;
}

}  // namespace psodr
