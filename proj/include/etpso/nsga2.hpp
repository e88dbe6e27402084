#pragma once

#include "error.hpp"
#include "pareto.hpp"
#include "problem.hpp"
#include "random.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

// NSGA-II baseline: two-point crossover, Gaussian mutation, (mu + lambda)
// replacement with crowded non-dominated selection, and a Hall of Fame.
namespace etpso::nsga2 {

struct config {
  std::size_t mu = 20;
  std::size_t lambda = 80;
  double cxpb = 0.7;
  double mutpb = 0.2;
  double mut_mean = 0.0;
  double mut_sigma = 1.0;
  double indpb = 0.1;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (mu == 0 || lambda == 0) {
      throw config_error{"nsga2: mu and lambda must be positive"};
    }
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(cxpb) || !probability(mutpb) || !probability(indpb)) {
      throw config_error{"nsga2: probabilities must lie in [0, 1]"};
    }
    if (cxpb + mutpb > 1.0) {
      throw config_error{"nsga2: cxpb + mutpb must not exceed 1"};
    }
    if (!(mut_sigma >= 0.0)) {
      throw config_error{"nsga2: mut_sigma must be nonnegative"};
    }
    if (max_iterations == 0) {
      throw config_error{"nsga2: max_iterations must be positive"};
    }
  }
};

struct individual {
  std::vector<double> genome;
  evaluation eval;

  friend bool operator==(individual const&, individual const&) = default;
};

// Exchange the slice [first, last) between copies of the parents.
inline std::pair<std::vector<double>, std::vector<double>>
two_point_crossover(std::span<double const> a, std::span<double const> b,
                    std::size_t first, std::size_t last) {
  detail::expects(a.size() == b.size() && a.size() >= 2,
                  "two_point_crossover: parents need equal length >= 2");
  detail::expects(first <= last && last <= a.size(),
                  "two_point_crossover: cut points out of range");
  std::vector<double> left{a.begin(), a.end()};
  std::vector<double> right{b.begin(), b.end()};
  std::swap_ranges(left.begin() + static_cast<std::ptrdiff_t>(first),
                   left.begin() + static_cast<std::ptrdiff_t>(last),
                   right.begin() + static_cast<std::ptrdiff_t>(first));
  return {std::move(left), std::move(right)};
}

// Cut points drawn uniformly from the pairs 0 <= first < last <= length.
inline std::pair<std::vector<double>, std::vector<double>>
two_point_crossover(std::span<double const> a, std::span<double const> b,
                    rng& random) {
  detail::expects(a.size() == b.size() && a.size() >= 2,
                  "two_point_crossover: parents need equal length >= 2");
  auto first = random.index(a.size() + 1);
  auto last = random.index(a.size());
  if (last >= first) {
    ++last;
  }
  else {
    std::swap(first, last);
  }
  return two_point_crossover(a, b, first, last);
}

// Each gene, with probability indpb, gets a Normal(mean, sigma) offset and is
// clamped back into its bounds.
inline std::vector<double> gaussian_mutation(std::span<double const> genome,
                                             double mean, double sigma,
                                             double indpb,
                                             box_bounds const& bounds,
                                             rng& random) {
  detail::expects(sigma >= 0.0, "gaussian_mutation: sigma must be nonnegative");
  detail::expects(genome.size() == bounds.size(),
                  "gaussian_mutation: genome/bounds length mismatch");
  std::vector<double> out{genome.begin(), genome.end()};
  for (std::size_t d = 0; d < out.size(); ++d) {
    if (random.unit() < indpb) {
      out[d] = bounds.project(d, out[d] + random.normal(mean, sigma));
    }
  }
  return out;
}

// Canonical NSGA-II crowding: sum of normalized neighbour gaps, boundary
// members at +infinity.
inline std::vector<double>
classic_crowding(std::span<objective_vector const> front) {
  auto const n = front.size();
  std::vector<double> distance(n, 0.0);
  if (n == 0) {
    return distance;
  }
  auto const inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < front.front().size(); ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return front[a][m] < front[b][m];
                     });
    distance[order.front()] = inf;
    distance[order.back()] = inf;
    auto const range = front[order.back()][m] - front[order.front()][m];
    if (range <= 0.0) {
      continue;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      distance[order[k]] +=
          (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
    }
  }
  return distance;
}

// Indices of the k survivors in admission order.
inline std::vector<std::size_t> select_indices(std::span<individual const> pool,
                                               std::size_t k) {
  detail::expects(k <= pool.size(), "nsga2_select: k exceeds pool size");
  if (k == 0) {
    return {};
  }
  std::vector<evaluation> cohort;
  cohort.reserve(pool.size());
  for (auto const& ind : pool) {
    cohort.push_back(ind.eval);
  }
  auto const ranks = non_dominated_sort(cohort, true);
  auto const max_rank = *std::max_element(ranks.begin(), ranks.end());
  std::vector<std::vector<std::size_t>> fronts(max_rank);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    fronts[ranks[i] - 1].push_back(i);
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (auto const& front : fronts) {
    if (chosen.size() + front.size() <= k) {
      chosen.insert(chosen.end(), front.begin(), front.end());
      if (chosen.size() == k) {
        break;
      }
      continue;
    }
    std::vector<objective_vector> members;
    for (auto i : front) {
      members.push_back(pool[i].eval.objectives);
    }
    auto const crowding = classic_crowding(members);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return crowding[a] > crowding[b];
                     });
    for (std::size_t j = 0; chosen.size() < k; ++j) {
      chosen.push_back(front[order[j]]);
    }
    break;
  }
  return chosen;
}

inline std::vector<individual> nsga2_select(std::span<individual const> pool,
                                            std::size_t k) {
  std::vector<individual> out;
  for (auto i : select_indices(pool, k)) {
    out.push_back(pool[i]);
  }
  return out;
}

// Unbounded archive of mutually non-dominated feasible individuals.
class hall_of_fame {
public:
  // Returns true when the archive changed.
  bool update(individual const& candidate) {
    if (!candidate.eval.feasible()) {
      return false;
    }
    auto const& f = candidate.eval.objectives;
    for (auto const& member : members_) {
      if (member.eval.objectives == f ||
          dominates(member.eval.objectives, f)) {
        return false;
      }
    }
    std::erase_if(members_, [&](individual const& member) {
      return dominates(f, member.eval.objectives);
    });
    members_.push_back(candidate);
    return true;
  }

  [[nodiscard]] std::span<individual const> members() const noexcept {
    return members_;
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return members_.size();
  }

  [[nodiscard]] front_snapshot front(std::size_t iteration) const {
    front_snapshot snapshot{iteration, {}};
    for (auto const& m : members_) {
      snapshot.points.push_back(m.eval.objectives);
    }
    snapshot.points = canonical_front(std::move(snapshot.points));
    return snapshot;
  }

  [[nodiscard]] std::vector<front_point> front_points() const {
    std::vector<front_point> points;
    for (auto const& m : members_) {
      points.push_back(front_point{m.eval.objectives, m.genome});
    }
    std::sort(points.begin(), points.end(),
              [](auto const& a, auto const& b) {
                return a.objectives < b.objectives;
              });
    return points;
  }

private:
  std::vector<individual> members_;
};

struct evolve_result {
  hall_of_fame hof;
  run_result run;
};

namespace detail {

  template<problem Problem>
  evaluation checked_evaluate(Problem const& prob, std::vector<double> const& x,
                              std::size_t generation) {
    evaluation eval;
    try {
      eval = prob.evaluate(x);
    }
    catch (std::exception const& e) {
      throw evaluation_error{"nsga2: evaluation failed at generation " +
                             std::to_string(generation) + ": " + e.what()};
    }
    if (eval.objectives.size() !=
        static_cast<std::size_t>(prob.objective_count())) {
      throw evaluation_error{"nsga2: evaluation returned wrong objective count"};
    }
    return eval;
  }

} // namespace detail

// Each generation re-scores the mu parents alongside the lambda offspring, so
// one generation costs mu + lambda evaluations.
template<problem Problem>
evolve_result evolve(Problem const& prob, config const& cfg) {
  cfg.validate();
  auto const& bounds = prob.bounds();
  bounds.validate();

  rng random{cfg.seed};
  std::vector<individual> population;
  population.reserve(cfg.mu);
  for (std::size_t i = 0; i < cfg.mu; ++i) {
    population.push_back(individual{prob.sample(random), {}});
  }

  evolve_result result;
  std::size_t evaluations = 0;

  for (std::size_t generation = 1; generation <= cfg.max_iterations;
       ++generation) {
    std::vector<individual> offspring;
    offspring.reserve(cfg.lambda);
    for (std::size_t k = 0; k < cfg.lambda; ++k) {
      auto const roll = random.unit();
      if (roll < cfg.cxpb && population.size() >= 2 && bounds.size() >= 2) {
        auto const a = random.index(population.size());
        auto b = random.index(population.size() - 1);
        if (b >= a) {
          ++b;
        }
        auto children = two_point_crossover(population[a].genome,
                                            population[b].genome, random);
        offspring.push_back(individual{std::move(children.first), {}});
      }
      else if (roll < cfg.cxpb + cfg.mutpb) {
        auto const& parent = population[random.index(population.size())];
        offspring.push_back(individual{
            gaussian_mutation(parent.genome, cfg.mut_mean, cfg.mut_sigma,
                              cfg.indpb, bounds, random),
            {}});
      }
      else {
        offspring.push_back(population[random.index(population.size())]);
      }
    }

    std::vector<individual> pool = std::move(population);
    pool.insert(pool.end(), std::make_move_iterator(offspring.begin()),
                std::make_move_iterator(offspring.end()));
    bool changed = false;
    for (auto& ind : pool) {
      ind.eval = detail::checked_evaluate(prob, ind.genome, generation);
      changed = result.hof.update(ind) || changed;
    }
    evaluations += pool.size();

    population = nsga2_select(pool, cfg.mu);

    auto const gbest = select_indices(pool, 1).front();
    result.run.reports.push_back(iteration_report{
        generation, result.hof.front(generation), generation == 1 || changed,
        pool[gbest].eval.objectives, evaluations});
  }

  result.run.final_front = result.hof.front_points();
  return result;
}

} // namespace etpso::nsga2
