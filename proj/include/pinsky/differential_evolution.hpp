// Inner-loop optimizer: DE/rand/1/bin over flat policy weight vectors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "pinsky/game.hpp"
#include "pinsky/parallel.hpp"
#include "pinsky/policy.hpp"
#include "pinsky/random.hpp"

namespace pinsky {

struct DeConfig {
  int pop_size = 50;
  double F = 0.5;
  double CR = 0.7;
  int evals_per_step = 1500;  // nGames
  double init_sigma = 0.1;

  int generations() const { return pop_size > 0 ? evals_per_step / pop_size : 0; }

  void validate() const {
    if (pop_size < 4) throw ContractViolation("DE/rand/1 needs a population of at least 4");
    if (!(F > 0.0 && F <= 2.0)) throw ContractViolation("DE F must be in (0,2]");
    if (!(CR >= 0.0 && CR <= 1.0)) throw ContractViolation("DE CR must be in [0,1]");
    if (evals_per_step < pop_size) throw ContractViolation("evals_per_step must be >= popSize");
    if (!(init_sigma >= 0.0)) throw ContractViolation("DE init_sigma must be non-negative");
  }
};

struct DePopulation {
  std::vector<PolicyParams> members;
  std::vector<double> fitness;
  int best_index = 0;
  long evaluations = 0;

  const PolicyParams& best() const { return members[static_cast<std::size_t>(best_index)]; }
  double best_fitness() const { return fitness[static_cast<std::size_t>(best_index)]; }
};

namespace detail {

// First index of the maximum fitness.
inline int argmax_fitness(const std::vector<double>& f) {
  return static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
}

template <class Fitness>
void evaluate_all(const std::vector<PolicyParams>& xs, std::vector<double>& out, Fitness& fitness, int jobs) {
  out.assign(xs.size(), 0.0);
  parallel_for(xs.size(), jobs, [&](std::size_t i) { out[i] = fitness(xs[i]); });
}

}  // namespace detail

/// Member 0 is `center` verbatim; the rest are Gaussian perturbations of it.
template <class Fitness>
DePopulation de_init(const PolicyParams& center, const DeConfig& cfg, std::uint64_t seed, Fitness&& fitness, int jobs = 1) {
  cfg.validate();
  Rng rng(seed);
  DePopulation pop;
  pop.members.assign(static_cast<std::size_t>(cfg.pop_size), center);
  if (cfg.init_sigma > 0.0) {
    std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg.init_sigma));
    for (std::size_t m = 1; m < pop.members.size(); ++m)
      for (auto& w : pop.members[m].weights) w += noise(rng);
  }
  detail::evaluate_all(pop.members, pop.fitness, fitness, jobs);
  pop.evaluations = cfg.pop_size;
  pop.best_index = detail::argmax_fitness(pop.fitness);
  return pop;
}

/// One synchronous DE/rand/1/bin generation. Donors come from the incoming
/// population; a trial replaces its target when its fitness is >= the target's.
template <class Fitness>
DePopulation de_step(DePopulation pop, const DeConfig& cfg, std::uint64_t seed, Fitness&& fitness, int jobs = 1) {
  cfg.validate();
  const int n = static_cast<int>(pop.members.size());
  if (n < 4) throw ContractViolation("DE/rand/1 needs a population of at least 4");
  const std::size_t dim = pop.members.front().weights.size();
  Rng rng(seed);
  const float F = static_cast<float>(cfg.F);

  // Crossover draws are 16-bit slices of the 64-bit engine output, four per call.
  const auto cr_threshold = static_cast<std::uint32_t>(std::ldexp(std::clamp(cfg.CR, 0.0, 1.0), 16));
  std::vector<PolicyParams> trials(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int a, b, c;
    do a = uniform_index(rng, n); while (a == i);
    do b = uniform_index(rng, n); while (b == i || b == a);
    do c = uniform_index(rng, n); while (c == i || c == a || c == b);
    const auto& xa = pop.members[static_cast<std::size_t>(a)].weights;
    const auto& xb = pop.members[static_cast<std::size_t>(b)].weights;
    const auto& xc = pop.members[static_cast<std::size_t>(c)].weights;
    const auto& target = pop.members[static_cast<std::size_t>(i)].weights;
    const std::size_t j_rand = dim == 0 ? 0 : static_cast<std::size_t>(uniform_index(rng, static_cast<int>(dim)));
    auto& t = trials[static_cast<std::size_t>(i)].weights;
    t = xa;
    for (std::size_t j = 0; j < dim; ++j) t[j] += F * (xb[j] - xc[j]);
    for (std::size_t j = 0; j < dim; j += 4) {
      std::uint64_t bits = rng();
      for (std::size_t k = j; k < std::min(dim, j + 4); ++k, bits >>= 16)
        if ((bits & 0xffffU) >= cr_threshold && k != j_rand) t[k] = target[k];
    }
  }

  std::vector<double> trial_fitness;
  detail::evaluate_all(trials, trial_fitness, fitness, jobs);
  pop.evaluations += n;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trial_fitness[i] >= pop.fitness[i]) {
      pop.members[i] = std::move(trials[i]);
      pop.fitness[i] = trial_fitness[i];
    }
  }
  pop.best_index = detail::argmax_fitness(pop.fitness);
  return pop;
}

/// Episode reward of a policy on one level (one rollout; the game is deterministic).
struct LevelFitness {
  std::shared_ptr<const Board> board;
  Architecture arch;
  RewardKind kind = RewardKind::aligned;

  EpisodeResult play(const PolicyParams& p) const {
    // non-owning handle; `p` outlives the rollout
    PolicyAgent agent(arch, std::shared_ptr<const PolicyParams>(std::shared_ptr<const PolicyParams>(), &p));
    return rollout(board, agent, kind);
  }
  double operator()(const PolicyParams& p) const { return play(p).reward; }
};

struct OptimizeResult {
  PolicyParams params;
  double fitness = 0.0;
  EpisodeResult result;  // independent re-evaluation of `params`
  long evaluations = 0;  // inner-loop evaluations, excluding the re-evaluation
  int generations = 0;
};

/// Warm-started DE on one pair: floor(evals_per_step / popSize) generations
/// from `incumbent`, then the population best is re-evaluated.
inline OptimizeResult optimize_pair(const PolicyParams& incumbent, const LevelFitness& fitness, const DeConfig& cfg,
                                    std::uint64_t seed, int jobs = 1) {
  cfg.validate();
  auto pop = de_init(incumbent, cfg, derive_seed(seed, {0}), fitness, jobs);
  const int gens = cfg.generations();
  for (int g = 0; g < gens; ++g)
    pop = de_step(std::move(pop), cfg, derive_seed(seed, {1, static_cast<std::uint64_t>(g)}), fitness, jobs);
  OptimizeResult out;
  out.params = pop.best();
  out.result = fitness.play(out.params);
  out.fitness = out.result.reward;
  out.evaluations = pop.evaluations;
  out.generations = gens;
  return out;
}

}  // namespace pinsky
