#pragma once

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace etpso {

// Objective values under the minimization convention.
using objective_vector = std::vector<double>;

struct evaluation {
  objective_vector objectives;
  std::size_t violations = 0;

  [[nodiscard]] bool feasible() const noexcept {
    return violations == 0;
  }

  friend bool operator==(evaluation const&, evaluation const&) = default;
};

struct ranked_evaluation {
  evaluation eval;
  std::size_t rank = 1;
  double crowding = 0.0;
  double merit = 0.0;

  friend bool operator==(ranked_evaluation const&,
                         ranked_evaluation const&) = default;
};

// Pareto front of one iteration: feasible, mutually non-dominated, sorted
// lexicographically and free of duplicate vectors.
struct front_snapshot {
  std::size_t iteration = 0;
  std::vector<objective_vector> points;

  friend bool operator==(front_snapshot const&,
                         front_snapshot const&) = default;
};

// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
inline bool dominates(std::span<double const> a, std::span<double const> b) {
  detail::expects(a.size() == b.size(),
                  "dominates: objective vectors differ in length");
  bool strictly_better = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] > b[m]) {
      return false;
    }
    if (a[m] < b[m]) {
      strictly_better = true;
    }
  }
  return strictly_better;
}

namespace detail {

  // Dominance-count sort of the members listed in `group`; ranks start at
  // `first_rank`. Returns the highest rank assigned.
  inline std::size_t rank_group(std::span<evaluation const> cohort,
                                std::span<std::size_t const> group,
                                std::size_t first_rank,
                                std::vector<std::size_t>& ranks) {
    auto const n = group.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominated_by(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
      auto const& fi = cohort[group[i]].objectives;
      for (std::size_t j = i + 1; j < n; ++j) {
        auto const& fj = cohort[group[j]].objectives;
        if (dominates(fi, fj)) {
          dominated[i].push_back(j);
          ++dominated_by[j];
        }
        else if (dominates(fj, fi)) {
          dominated[j].push_back(i);
          ++dominated_by[i];
        }
      }
    }

    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
      if (dominated_by[i] == 0) {
        current.push_back(i);
      }
    }

    auto rank = first_rank;
    std::size_t last = first_rank - 1;
    while (!current.empty()) {
      std::vector<std::size_t> next;
      for (auto i : current) {
        ranks[group[i]] = rank;
        for (auto j : dominated[i]) {
          if (--dominated_by[j] == 0) {
            next.push_back(j);
          }
        }
      }
      last = rank++;
      current = std::move(next);
    }
    return last;
  }

} // namespace detail

// Rank per cohort member, 1 being the non-dominated layer. With `constrained`
// set, every feasible member precedes every infeasible one and infeasible
// members are grouped by ascending violation count before dominance layering.
inline std::vector<std::size_t>
non_dominated_sort(std::span<evaluation const> cohort, bool constrained) {
  detail::expects(!cohort.empty(), "non_dominated_sort: empty cohort");
  auto const m = cohort.front().objectives.size();
  for (auto const& e : cohort) {
    detail::expects(e.objectives.size() == m,
                    "non_dominated_sort: objective vectors differ in length");
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    groups[constrained ? cohort[i].violations : 0].push_back(i);
  }

  std::vector<std::size_t> ranks(cohort.size(), 0);
  std::size_t last_rank = 0;
  for (auto const& [violations, group] : groups) {
    last_rank = detail::rank_group(cohort, group, last_rank + 1, ranks);
  }
  return ranks;
}

// Hypercube crowding: product over objectives of the normalized gap between
// the two neighbours. Boundary members get 1.0, the supremum of the product,
// and an objective with zero range contributes a factor of 1.
inline std::vector<double>
crowding_distance(std::span<objective_vector const> front) {
  detail::expects(!front.empty(), "crowding_distance: empty front");
  auto const n = front.size();
  auto const m_count = front.front().size();
  for (auto const& f : front) {
    detail::expects(f.size() == m_count,
                    "crowding_distance: objective vectors differ in length");
  }

  std::vector<double> distance(n, 1.0);
  if (n <= 2) {
    return distance;
  }

  std::vector<bool> boundary(n, false);
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < m_count; ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return front[a][m] < front[b][m];
                     });
    boundary[order.front()] = true;
    boundary[order.back()] = true;

    auto const range = front[order.back()][m] - front[order.front()][m];
    if (range <= 0.0) {
      continue;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      auto const gap = front[order[k + 1]][m] - front[order[k - 1]][m];
      distance[order[k]] *= std::clamp(gap / range, 0.0, 1.0);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (boundary[i]) {
      distance[i] = 1.0;
    }
  }
  return distance;
}

// Scalar fitness, higher is better.
inline double merit(std::size_t rank, double crowding, std::size_t violations,
                    std::size_t max_rank) {
  detail::expects(rank >= 1, "merit: rank must be at least 1");
  detail::expects(rank <= max_rank, "merit: rank exceeds max_rank");
  detail::expects(crowding >= 0.0 && crowding <= 1.0,
                  "merit: crowding outside [0, 1]");
  return static_cast<double>(max_rank) - static_cast<double>(rank) + crowding -
         static_cast<double>(violations);
}

// Constrained sort, per-front crowding, and merit in one pass. Output order
// matches input order.
inline std::vector<ranked_evaluation>
rank_cohort(std::span<evaluation const> cohort) {
  auto const ranks = non_dominated_sort(cohort, true);
  auto const max_rank = *std::max_element(ranks.begin(), ranks.end());

  std::vector<std::vector<std::size_t>> fronts(max_rank);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    fronts[ranks[i] - 1].push_back(i);
  }

  std::vector<ranked_evaluation> ranked(cohort.size());
  std::vector<objective_vector> members;
  for (auto const& front : fronts) {
    members.clear();
    for (auto i : front) {
      members.push_back(cohort[i].objectives);
    }
    auto const crowding = crowding_distance(members);
    for (std::size_t k = 0; k < front.size(); ++k) {
      auto const i = front[k];
      ranked[i] = ranked_evaluation{
          cohort[i], ranks[i], crowding[k],
          merit(ranks[i], crowding[k], cohort[i].violations, max_rank)};
    }
  }
  return ranked;
}

// Canonical front of the rank-1 feasible subset: sorted, duplicates removed.
inline std::vector<objective_vector>
canonical_front(std::vector<objective_vector> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

} // namespace etpso
