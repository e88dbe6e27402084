#pragma once

#include "error.hpp"
#include "pareto.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etpso::metrics {

// Per-objective extremes over a whole campaign. `min` is the smallest
// strictly positive value seen, since normalization works in log space.
struct normalization_bounds {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(normalization_bounds const&,
                         normalization_bounds const&) = default;
};

// Log-scaled position of `z` between the campaign extremes: 1 at the minimum
// (best), 0 at the maximum (worst). A raw value of exactly 0 can only come
// from an objective whose positive minimum was clamped, and maps to 1.
inline std::vector<double> normalize_point(std::span<double const> z,
                                           normalization_bounds const& b) {
  detail::expects(z.size() == b.min.size() && z.size() == b.max.size(),
                  "normalize_point: dimension mismatch");
  std::vector<double> out(z.size());
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m] == 0.0) {
      out[m] = 1.0;
      continue;
    }
    detail::expects(z[m] > 0.0, "normalize_point: objective must be positive");
    detail::expects(z[m] >= b.min[m] && z[m] <= b.max[m],
                    "normalize_point: objective outside campaign bounds");
    auto const top = std::log(b.max[m]);
    out[m] = (top - std::log(z[m])) / (top - std::log(b.min[m]));
  }
  return out;
}

// Area of the union of boxes [0, a] x [0, b] over the normalized points.
inline double hypervolume_normalized(std::span<std::array<double, 2> const> points) {
  std::vector<std::array<double, 2>> sorted{points.begin(), points.end()};
  // Second coordinate descending, ties by first descending.
  std::sort(sorted.begin(), sorted.end(), [](auto const& p, auto const& q) {
    if (p[1] != q[1]) {
      return p[1] > q[1];
    }
    return p[0] > q[0];
  });
  // Drop points inside the staircase so they cannot perturb the sum.
  std::vector<std::array<double, 2>> steps;
  for (auto const& p : sorted) {
    if (steps.empty() || p[0] > steps.back()[0]) {
      steps.push_back(p);
    }
  }
  double area = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto const below = i + 1 < steps.size() ? steps[i + 1][1] : 0.0;
    area += steps[i][0] * (steps[i][1] - below);
  }
  return std::clamp(area, 0.0, 1.0);
}

inline double hypervolume_2d(std::span<objective_vector const> front,
                             normalization_bounds const& b) {
  if (b.min.size() != 2) {
    throw std::invalid_argument{
        "hypervolume_2d: only two objectives are supported"};
  }
  detail::expects(!front.empty(), "hypervolume_2d: empty front");
  std::vector<std::array<double, 2>> points;
  points.reserve(front.size());
  for (auto const& z : front) {
    if (z.size() != 2) {
      throw std::invalid_argument{
          "hypervolume_2d: only two objectives are supported"};
    }
    auto const n = normalize_point(z, b);
    points.push_back({n[0], n[1]});
  }
  return hypervolume_normalized(points);
}

inline double hypervolume_2d(front_snapshot const& front,
                             normalization_bounds const& b) {
  return hypervolume_2d(front.points, b);
}

// One run's trajectory as seen by the metrics.
struct run_trace {
  std::vector<front_snapshot> fronts;
  std::vector<bool> front_changed;
};

struct campaign_result {
  std::vector<run_trace> runs;
};

// Shared iteration count of every run; runs must agree.
inline std::size_t iteration_count(campaign_result const& c) {
  detail::expects(!c.runs.empty(), "campaign has no runs");
  auto const t = c.runs.front().front_changed.size();
  for (auto const& r : c.runs) {
    detail::expects(r.front_changed.size() == t && r.fronts.size() == t,
                    "campaign runs differ in iteration count");
  }
  return t;
}

// An empty front (no feasible point yet) scores 0.
inline std::vector<double> averaged_hv(campaign_result const& c,
                                       normalization_bounds const& b) {
  auto const t = iteration_count(c);
  std::vector<double> mean(t, 0.0);
  for (auto const& r : c.runs) {
    for (std::size_t i = 0; i < t; ++i) {
      if (!r.fronts[i].points.empty()) {
        mean[i] += hypervolume_2d(r.fronts[i], b);
      }
    }
  }
  for (auto& v : mean) {
    v /= static_cast<double>(c.runs.size());
  }
  return mean;
}

// 1 on every iteration that changed the front, otherwise 0.01 less than the
// previous value, floored at 0.
inline std::vector<double>
convergence_score(std::vector<bool> const& front_changed) {
  detail::expects(!front_changed.empty(), "convergence_score: empty series");
  std::vector<double> score(front_changed.size());
  int stale = 0;
  for (std::size_t t = 0; t < front_changed.size(); ++t) {
    stale = (t == 0 || front_changed[t]) ? 0 : stale + 1;
    score[t] = stale >= 100 ? 0.0 : static_cast<double>(100 - stale) / 100.0;
  }
  return score;
}

inline std::vector<double> averaged_cs(campaign_result const& c) {
  auto const t = iteration_count(c);
  std::vector<double> mean(t, 0.0);
  for (auto const& r : c.runs) {
    auto const cs = convergence_score(r.front_changed);
    for (std::size_t i = 0; i < t; ++i) {
      mean[i] += cs[i];
    }
  }
  for (auto& v : mean) {
    v /= static_cast<double>(c.runs.size());
  }
  return mean;
}

// Extremes over every point of every front supplied. Zeros are admitted but
// excluded from the minimum; negatives are rejected.
inline normalization_bounds
campaign_bounds(std::span<objective_vector const> points) {
  detail::expects(!points.empty(), "campaign_bounds: no points");
  auto const m_count = points.front().size();
  auto const inf = std::numeric_limits<double>::infinity();
  normalization_bounds b{std::vector<double>(m_count, inf),
                         std::vector<double>(m_count, -inf)};
  for (auto const& z : points) {
    detail::expects(z.size() == m_count, "campaign_bounds: dimension mismatch");
    for (std::size_t m = 0; m < m_count; ++m) {
      detail::expects(z[m] >= 0.0 && std::isfinite(z[m]),
                      "campaign_bounds: objective values must be nonnegative");
      if (z[m] > 0.0) {
        b.min[m] = std::min(b.min[m], z[m]);
      }
      b.max[m] = std::max(b.max[m], z[m]);
    }
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    detail::expects(std::isfinite(b.min[m]) && b.min[m] < b.max[m],
                    "campaign_bounds: degenerate range in objective " +
                        std::to_string(m));
  }
  return b;
}

inline normalization_bounds
campaign_bounds(std::span<campaign_result const> campaigns) {
  std::vector<objective_vector> points;
  for (auto const& c : campaigns) {
    for (auto const& r : c.runs) {
      for (auto const& f : r.fronts) {
        points.insert(points.end(), f.points.begin(), f.points.end());
      }
    }
  }
  return campaign_bounds(points);
}

} // namespace etpso::metrics
