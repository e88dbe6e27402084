#pragma once

#include "error.hpp"
#include "pareto.hpp"
#include "problem.hpp"
#include "random.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

// Single-vehicle green routing along a line of nodes 0..D: pick N intermediate
// stops and N+1 leg speeds, trading travel time against load-weighted
// emissions under a capacity window.
namespace etpso::gvrp {

struct instance {
  std::size_t d_total = 0;
  std::size_t n_stops = 0;
  double capacity = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double initial_load = 0.0;
  // Entry i is the distance between node i and node i+1.
  std::vector<double> segment_distances;
  // Entry i is the load change applied when the vehicle stops at node i.
  std::vector<double> load_increments;

  void validate() const {
    if (d_total == 0 || n_stops == 0) {
      throw validation_error{"gvrp: d_total and n_stops must be positive"};
    }
    if (n_stops > d_total) {
      throw validation_error{"gvrp: n_stops must not exceed d_total"};
    }
    if (segment_distances.size() != d_total) {
      throw validation_error{"gvrp: segment_distances length " +
                             std::to_string(segment_distances.size()) +
                             " does not match d_total " +
                             std::to_string(d_total)};
    }
    if (load_increments.size() != d_total + 1) {
      throw validation_error{"gvrp: load_increments length must be d_total + 1"};
    }
    for (auto d : segment_distances) {
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw validation_error{"gvrp: segment distances must be positive"};
      }
    }
    for (auto l : load_increments) {
      if (!std::isfinite(l)) {
        throw validation_error{"gvrp: load increments must be finite"};
      }
    }
    if (!(capacity > 0.0)) {
      throw validation_error{"gvrp: capacity must be positive"};
    }
    if (!(initial_load >= 0.0 && initial_load <= capacity)) {
      throw validation_error{"gvrp: initial_load must lie in [0, capacity]"};
    }
    if (!(v_min > 0.0 && v_min < v_max)) {
      throw validation_error{"gvrp: require 0 < v_min < v_max"};
    }
  }

  friend bool operator==(instance const&, instance const&) = default;
};

// Search-space encoding: N positive stop increments and N+1 leg speeds.
struct genome {
  std::vector<double> increments;
  std::vector<double> velocities;

  [[nodiscard]] std::vector<double> flatten() const {
    std::vector<double> x = increments;
    x.insert(x.end(), velocities.begin(), velocities.end());
    return x;
  }

  static genome unflatten(std::span<double const> x, std::size_t n_stops) {
    detail::expects(x.size() == 2 * n_stops + 1,
                    "gvrp: position length must be 2N + 1");
    auto const split = x.begin() + static_cast<std::ptrdiff_t>(n_stops);
    return genome{{x.begin(), split}, {split, x.end()}};
  }
};

struct route {
  std::vector<std::size_t> stops;
  std::vector<double> velocities;
};

// Open-interval margin that keeps every increment strictly inside (0, D/N).
inline double increment_margin(instance const& inst) {
  return 1e-6 * static_cast<double>(inst.d_total) /
         static_cast<double>(inst.n_stops);
}

inline box_bounds search_bounds(instance const& inst) {
  auto const n = inst.n_stops;
  auto const width =
      static_cast<double>(inst.d_total) / static_cast<double>(n);
  auto const eps = increment_margin(inst);
  box_bounds b;
  b.lower.assign(2 * n + 1, inst.v_min);
  b.upper.assign(2 * n + 1, inst.v_max);
  for (std::size_t k = 0; k < n; ++k) {
    b.lower[k] = eps;
    b.upper[k] = width - eps;
  }
  return b;
}

// Cumulative increments scaled so the last intermediate stop lands on D-1,
// each rounded up to a node index.
inline route decode(genome const& g, instance const& inst) {
  auto const n = inst.n_stops;
  detail::expects(g.increments.size() == n && g.velocities.size() == n + 1,
                  "gvrp decode: genome shape does not match instance");

  std::vector<double> cumulative(n);
  std::partial_sum(g.increments.begin(), g.increments.end(),
                   cumulative.begin());
  auto const last = cumulative.back();
  detail::expects(last > 0.0, "gvrp decode: cumulative increments sum to zero");

  auto const scale = static_cast<double>(inst.d_total - 1) / last;
  route r;
  r.stops.reserve(n + 2);
  r.stops.push_back(0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    auto const x = std::ceil(cumulative[k] * scale);
    r.stops.push_back(static_cast<std::size_t>(std::max(x, 0.0)));
  }
  // The last cumulative sum scales to exactly D-1; pin it against rounding.
  r.stops.push_back(inst.d_total - 1);
  r.stops.push_back(inst.d_total);
  for (std::size_t k = 1; k < r.stops.size(); ++k) {
    r.stops[k] = std::max(r.stops[k], r.stops[k - 1]);
  }
  r.velocities = g.velocities;
  return r;
}

// Load on board after each stop of the route, starting from initial_load.
inline std::vector<double> load_profile(route const& r, instance const& inst) {
  std::vector<double> profile;
  profile.reserve(r.stops.size());
  profile.push_back(inst.initial_load);
  for (std::size_t i = 1; i < r.stops.size(); ++i) {
    profile.push_back(profile.back() + inst.load_increments.at(r.stops[i]));
  }
  return profile;
}

namespace detail {

  inline std::vector<double> prefix_distances(instance const& inst) {
    std::vector<double> prefix(inst.d_total + 1, 0.0);
    for (std::size_t i = 0; i < inst.d_total; ++i) {
      prefix[i + 1] = prefix[i] + inst.segment_distances[i];
    }
    return prefix;
  }

  inline double leg_distance(std::vector<double> const& prefix,
                             std::size_t from, std::size_t to) {
    return prefix.at(to) - prefix.at(from);
  }

} // namespace detail

inline double travel_time(route const& r, instance const& inst) {
  etpso::detail::expects(r.velocities.size() + 1 == r.stops.size(),
                         "gvrp travel_time: one velocity per leg required");
  auto const prefix = detail::prefix_distances(inst);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < r.stops.size(); ++i) {
    etpso::detail::expects(r.velocities[i] > 0.0,
                           "gvrp travel_time: velocities must be positive");
    total += detail::leg_distance(prefix, r.stops[i], r.stops[i + 1]) /
             r.velocities[i];
  }
  return total;
}

inline double emissions(route const& r, instance const& inst) {
  etpso::detail::expects(r.velocities.size() + 1 == r.stops.size(),
                         "gvrp emissions: one velocity per leg required");
  auto const prefix = detail::prefix_distances(inst);
  auto const load = load_profile(r, inst);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < r.stops.size(); ++i) {
    total += detail::leg_distance(prefix, r.stops[i], r.stops[i + 1]) *
             load[i] * (0.05 * r.velocities[i] + 1.0);
  }
  return total * 1e-10;
}

// 1 when the load ever leaves [0, capacity], else 0.
inline std::size_t capacity_constraint(route const& r, instance const& inst) {
  for (auto l : load_profile(r, inst)) {
    if (l > inst.capacity || l < 0.0) {
      return 1;
    }
  }
  return 0;
}

inline evaluation evaluate(genome const& g, instance const& inst) {
  auto const r = decode(g, inst);
  return evaluation{{travel_time(r, inst), emissions(r, inst)},
                    capacity_constraint(r, inst)};
}

inline genome sample_genome(instance const& inst, rng& random) {
  auto const bounds = search_bounds(inst);
  std::vector<double> x(bounds.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    x[d] = random.uniform(bounds.lower[d], bounds.upper[d]);
  }
  return genome::unflatten(x, inst.n_stops);
}

struct generator_params {
  std::uint64_t seed = 1;
  std::size_t d_total = 1001;
  std::size_t n_stops = 9;
  double capacity = 200.0;
  double v_min = 1.0;
  double v_max = 100.0;
};

// Segment lengths uniform in [1, 10], integer load changes uniform in
// [-10, 10], vehicle starting half full.
inline instance generate_instance(generator_params const& p) {
  if (p.n_stops == 0 || p.d_total < p.n_stops) {
    throw config_error{"gvrp: generator requires d_total >= n_stops >= 1"};
  }
  if (!(p.capacity > 0.0)) {
    throw config_error{"gvrp: capacity must be positive"};
  }
  if (!(p.v_min > 0.0 && p.v_min < p.v_max)) {
    throw config_error{"gvrp: require 0 < v_min < v_max"};
  }

  rng random{p.seed};
  instance inst;
  inst.d_total = p.d_total;
  inst.n_stops = p.n_stops;
  inst.capacity = p.capacity;
  inst.v_min = p.v_min;
  inst.v_max = p.v_max;
  inst.initial_load = p.capacity / 2.0;
  inst.segment_distances.resize(p.d_total);
  for (auto& d : inst.segment_distances) {
    d = random.uniform(1.0, 10.0);
  }
  inst.load_increments.resize(p.d_total + 1);
  for (auto& l : inst.load_increments) {
    l = static_cast<double>(random.integer(-10, 10));
  }
  inst.validate();
  return inst;
}

inline nlohmann::ordered_json to_json(instance const& inst) {
  nlohmann::ordered_json j;
  j["d_total"] = inst.d_total;
  j["n_stops"] = inst.n_stops;
  j["capacity"] = inst.capacity;
  j["v_min"] = inst.v_min;
  j["v_max"] = inst.v_max;
  j["initial_load"] = inst.initial_load;
  j["segment_distances"] = inst.segment_distances;
  j["load_increments"] = inst.load_increments;
  return j;
}

namespace detail {

  template<typename T>
  T field(nlohmann::json const& j, char const* key) {
    if (!j.contains(key)) {
      throw parse_error{std::string{"gvrp instance: missing field '"} + key +
                        "'"};
    }
    try {
      return j.at(key).get<T>();
    }
    catch (nlohmann::json::exception const& e) {
      throw parse_error{std::string{"gvrp instance: field '"} + key +
                        "' has the wrong type: " + e.what()};
    }
  }

} // namespace detail

inline instance from_json(nlohmann::json const& j) {
  if (!j.is_object()) {
    throw parse_error{"gvrp instance: top level must be an object"};
  }
  instance inst;
  inst.d_total = detail::field<std::size_t>(j, "d_total");
  inst.n_stops = detail::field<std::size_t>(j, "n_stops");
  inst.capacity = detail::field<double>(j, "capacity");
  inst.v_min = detail::field<double>(j, "v_min");
  inst.v_max = detail::field<double>(j, "v_max");
  inst.initial_load = detail::field<double>(j, "initial_load");
  inst.segment_distances =
      detail::field<std::vector<double>>(j, "segment_distances");
  inst.load_increments =
      detail::field<std::vector<double>>(j, "load_increments");
  inst.validate();
  return inst;
}

inline std::string dump_instance(instance const& inst) {
  return to_json(inst).dump(2) + "\n";
}

inline instance parse_instance(std::string const& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  }
  catch (nlohmann::json::parse_error const& e) {
    throw parse_error{std::string{"gvrp instance: "} + e.what()};
  }
  return from_json(j);
}

inline void write_instance(instance const& inst,
                           std::filesystem::path const& path) {
  inst.validate();
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  if (!out) {
    throw std::runtime_error{"gvrp: cannot open " + path.string() +
                             " for writing"};
  }
  out << dump_instance(inst);
}

inline instance read_instance(std::filesystem::path const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw parse_error{"gvrp: cannot open " + path.string()};
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_instance(buffer.str());
}

// Adapter exposing an instance to the optimizers. Position layout is
// [increments (N), velocities (N+1)].
class problem {
public:
  explicit problem(instance inst)
      : inst_{std::move(inst)}, bounds_{(inst_.validate(), search_bounds(inst_))} {
  }

  [[nodiscard]] std::size_t dimension() const noexcept {
    return bounds_.size();
  }

  [[nodiscard]] std::size_t objective_count() const noexcept {
    return 2;
  }

  [[nodiscard]] box_bounds const& bounds() const noexcept {
    return bounds_;
  }

  [[nodiscard]] instance const& data() const noexcept {
    return inst_;
  }

  [[nodiscard]] evaluation evaluate(std::span<double const> x) const {
    return gvrp::evaluate(genome::unflatten(x, inst_.n_stops), inst_);
  }

  [[nodiscard]] std::vector<double> sample(rng& random) const {
    return sample_genome(inst_, random).flatten();
  }

  // Decoded stops x_1..x_N followed by the N+1 leg speeds.
  [[nodiscard]] std::vector<double>
  describe(std::span<double const> x) const {
    auto const r = decode(genome::unflatten(x, inst_.n_stops), inst_);
    std::vector<double> row;
    for (std::size_t i = 1; i + 1 < r.stops.size(); ++i) {
      row.push_back(static_cast<double>(r.stops[i]));
    }
    row.insert(row.end(), r.velocities.begin(), r.velocities.end());
    return row;
  }

private:
  instance inst_;
  box_bounds bounds_;
};

} // namespace etpso::gvrp
