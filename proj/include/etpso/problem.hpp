#pragma once

#include "error.hpp"
#include "pareto.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

namespace etpso {

// Per-dimension side constraints. `discrete` is either empty (all continuous)
// or flags dimensions restricted to integer values.
struct box_bounds {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> discrete;

  [[nodiscard]] std::size_t size() const noexcept {
    return lower.size();
  }

  [[nodiscard]] bool is_discrete(std::size_t d) const noexcept {
    return !discrete.empty() && discrete[d];
  }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
      throw config_error{"bounds: lower/upper must be nonempty and equal length"};
    }
    if (!discrete.empty() && discrete.size() != lower.size()) {
      throw config_error{"bounds: discrete mask length mismatch"};
    }
    for (std::size_t d = 0; d < lower.size(); ++d) {
      if (!(lower[d] < upper[d])) {
        throw config_error{"bounds: lower must be strictly below upper"};
      }
    }
  }

  [[nodiscard]] bool contains(std::span<double const> x) const noexcept {
    if (x.size() != size()) {
      return false;
    }
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (!(x[d] >= lower[d] && x[d] <= upper[d])) {
        return false;
      }
    }
    return true;
  }

  // Clamp one coordinate, then snap discrete dimensions to the nearest
  // integer inside the box.
  [[nodiscard]] double project(std::size_t d, double value) const {
    auto x = std::clamp(value, lower[d], upper[d]);
    if (is_discrete(d)) {
      x = std::clamp(std::round(x), std::ceil(lower[d]), std::floor(upper[d]));
    }
    return x;
  }
};

// Minimization problem over a box. `evaluate` must be deterministic; `sample`
// draws a starting position inside the bounds.
template<typename P>
concept problem = requires(P const& p, std::span<double const> x, rng& r) {
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.objective_count() } -> std::convertible_to<std::size_t>;
  { p.bounds() } -> std::convertible_to<box_bounds const&>;
  { p.evaluate(x) } -> std::same_as<evaluation>;
  { p.sample(r) } -> std::same_as<std::vector<double>>;
};

// Feasible front member together with the decision vector that produced it.
struct front_point {
  objective_vector objectives;
  std::vector<double> position;

  friend bool operator==(front_point const&, front_point const&) = default;
};

struct iteration_report {
  std::size_t iteration = 0;
  front_snapshot front;
  bool front_changed = false;
  objective_vector gbest_objectives;
  std::size_t evaluations_used = 0;

  friend bool operator==(iteration_report const&,
                         iteration_report const&) = default;
};

struct run_result {
  std::vector<front_point> final_front;
  std::vector<iteration_report> reports;
};

} // namespace etpso
