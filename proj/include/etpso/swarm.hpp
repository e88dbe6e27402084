#pragma once

#include "error.hpp"
#include "pareto.hpp"
#include "problem.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace etpso {

struct etpso_config {
  std::size_t n_particles = 100;
  double w = 0.7;
  double c1 = 2.05;
  double c2 = 2.05;
  std::size_t memory_capacity = 2000;
  std::size_t stagnation_threshold = 5;
  std::size_t n_randomized = 1;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_particles == 0) {
      throw config_error{"etpso: n_particles must be positive"};
    }
    if (!(c1 + c2 > 4.0)) {
      throw config_error{"etpso: c1 + c2 must exceed 4"};
    }
    if (memory_capacity < n_particles) {
      throw config_error{"etpso: memory_capacity must be at least n_particles"};
    }
    if (stagnation_threshold == 0) {
      throw config_error{"etpso: stagnation_threshold must be positive"};
    }
    if (n_randomized == 0 || n_randomized > n_particles) {
      throw config_error{"etpso: n_randomized must be in [1, n_particles]"};
    }
    if (max_iterations == 0) {
      throw config_error{"etpso: max_iterations must be positive"};
    }
  }
};

// Clerc constriction coefficient for phi = c1 + c2 > 4.
inline double constriction_factor(double c1, double c2) {
  auto const phi = c1 + c2;
  if (!(phi > 4.0)) {
    throw config_error{"constriction_factor: c1 + c2 must exceed 4"};
  }
  return 2.0 / std::abs(2.0 - phi - std::sqrt(phi * phi - 4.0 * phi));
}

struct particle_state {
  std::size_t particle_id = 0;
  std::vector<double> position;
  std::vector<double> velocity;
};

// Constricted velocity rule. `draw_unit` supplies r1 and r2, one pair per
// dimension in that order, each uniform in [0, 1].
template<typename UnitSource>
  requires std::invocable<UnitSource&> &&
           std::convertible_to<std::invoke_result_t<UnitSource&>, double>
std::vector<double> update_velocity(particle_state const& state,
                                    std::span<double const> pbest_position,
                                    std::span<double const> gbest_position,
                                    etpso_config const& cfg,
                                    UnitSource&& draw_unit) {
  auto const n = state.position.size();
  detail::expects(state.velocity.size() == n && pbest_position.size() == n &&
                      gbest_position.size() == n,
                  "update_velocity: dimension mismatch");
  auto const k = constriction_factor(cfg.c1, cfg.c2);

  std::vector<double> next(n);
  for (std::size_t d = 0; d < n; ++d) {
    double const r1 = draw_unit();
    double const r2 = draw_unit();
    auto const x = state.position[d];
    next[d] = k * (cfg.w * state.velocity[d] +
                   cfg.c1 * r1 * (pbest_position[d] - x) +
                   cfg.c2 * r2 * (gbest_position[d] - x));
  }
  return next;
}

inline std::vector<double> update_position(std::span<double const> position,
                                           std::span<double const> velocity,
                                           box_bounds const& bounds) {
  detail::expects(position.size() == velocity.size() &&
                      position.size() == bounds.size(),
                  "update_position: dimension mismatch");
  std::vector<double> next(position.size());
  for (std::size_t d = 0; d < position.size(); ++d) {
    next[d] = bounds.project(d, position[d] + velocity[d]);
  }
  return next;
}

struct memory_entry {
  std::uint64_t entry_id = 0;
  std::size_t particle_id = 0;
  std::vector<double> position;
  std::vector<double> velocity;
  evaluation eval;
  ranked_evaluation ranked;
  std::size_t iteration_found = 0;
};

struct pbest_row {
  std::uint64_t entry_id = 0;
  std::vector<double> position;
  std::vector<double> velocity;
  evaluation eval;
};

// One personal-best slot per particle; the row count never changes.
class pbest_table {
public:
  explicit pbest_table(std::size_t n_particles) : rows_(n_particles) {
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return rows_.size();
  }

  [[nodiscard]] std::optional<pbest_row> const&
  row(std::size_t particle_id) const {
    detail::expects(particle_id < rows_.size(),
                    "pbest_table: particle_id out of range");
    return rows_[particle_id];
  }

  [[nodiscard]] bool references(std::uint64_t entry_id) const noexcept {
    return std::any_of(rows_.begin(), rows_.end(), [=](auto const& r) {
      return r && r->entry_id == entry_id;
    });
  }

  void assign(std::size_t particle_id, memory_entry const& entry) {
    detail::expects(particle_id < rows_.size(),
                    "pbest_table: particle_id out of range");
    rows_[particle_id] =
        pbest_row{entry.entry_id, entry.position, entry.velocity, entry.eval};
  }

private:
  std::vector<std::optional<pbest_row>> rows_;
};

// Archive of every evaluated particle state, kept in descending merit order
// after each sort.
class swarm_memory {
public:
  explicit swarm_memory(std::size_t capacity) : capacity_{capacity} {
    detail::expects(capacity > 0, "swarm_memory: capacity must be positive");
  }

  std::uint64_t insert(particle_state const& state, evaluation eval,
                       std::size_t iteration) {
    auto const id = next_entry_id_++;
    entries_.push_back(memory_entry{id, state.particle_id, state.position,
                                    state.velocity, eval,
                                    ranked_evaluation{std::move(eval)},
                                    iteration});
    return id;
  }

  [[nodiscard]] std::span<memory_entry const> entries() const noexcept {
    return entries_;
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return entries_.size();
  }

  [[nodiscard]] bool empty() const noexcept {
    return entries_.empty();
  }

  [[nodiscard]] std::size_t capacity() const noexcept {
    return capacity_;
  }

  [[nodiscard]] std::uint64_t next_entry_id() const noexcept {
    return next_entry_id_;
  }

  [[nodiscard]] memory_entry const* find(std::uint64_t entry_id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [=](auto const& e) { return e.entry_id == entry_id; });
    return it == entries_.end() ? nullptr : &*it;
  }

  // Recompute rank, crowding and merit of every entry over the whole memory.
  // Entry order is left untouched.
  void refresh_ranks() {
    detail::expects(!entries_.empty(), "refresh_ranks: empty memory");
    std::vector<evaluation> cohort;
    cohort.reserve(entries_.size());
    for (auto const& e : entries_) {
      cohort.push_back(e.eval);
    }
    auto ranked = rank_cohort(cohort);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      entries_[i].ranked = std::move(ranked[i]);
    }
  }

  // Descending merit, ties by ascending entry_id. Entries the pbest table
  // points at always survive truncation; the remaining slots go to the
  // highest-merit entries.
  void sort_and_truncate(pbest_table const& pbest) {
    std::sort(entries_.begin(), entries_.end(),
              [](memory_entry const& a, memory_entry const& b) {
                if (a.ranked.merit != b.ranked.merit) {
                  return a.ranked.merit > b.ranked.merit;
                }
                return a.entry_id < b.entry_id;
              });
    if (entries_.size() <= capacity_) {
      return;
    }

    std::vector<bool> keep(entries_.size(), false);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (pbest.references(entries_[i].entry_id)) {
        keep[i] = true;
        ++kept;
      }
    }
    for (std::size_t i = 0; i < entries_.size() && kept < capacity_; ++i) {
      if (!keep[i]) {
        keep[i] = true;
        ++kept;
      }
    }

    std::vector<memory_entry> survivors;
    survivors.reserve(kept);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (keep[i]) {
        survivors.push_back(std::move(entries_[i]));
      }
    }
    entries_ = std::move(survivors);
  }

  [[nodiscard]] std::vector<memory_entry> select_elite(std::size_t p) const {
    detail::expects(!entries_.empty(), "select_elite: empty memory");
    auto const count = std::min(p, entries_.size());
    return {entries_.begin(),
            entries_.begin() + static_cast<std::ptrdiff_t>(count)};
  }

  [[nodiscard]] memory_entry const& gbest() const {
    detail::expects(!entries_.empty(), "gbest: empty memory");
    return entries_.front();
  }

  // Feasible rank-1 members, one per distinct objective vector (lowest
  // entry_id wins), sorted by objectives.
  [[nodiscard]] std::vector<front_point> front_points() const {
    std::vector<memory_entry const*> members;
    for (auto const& e : entries_) {
      if (e.ranked.rank == 1 && e.eval.feasible()) {
        members.push_back(&e);
      }
    }
    std::sort(members.begin(), members.end(), [](auto const* a, auto const* b) {
      if (a->eval.objectives != b->eval.objectives) {
        return a->eval.objectives < b->eval.objectives;
      }
      return a->entry_id < b->entry_id;
    });

    std::vector<front_point> points;
    for (auto const* e : members) {
      if (points.empty() || points.back().objectives != e->eval.objectives) {
        points.push_back(front_point{e->eval.objectives, e->position});
      }
    }
    return points;
  }

  [[nodiscard]] front_snapshot front(std::size_t iteration) const {
    front_snapshot snapshot{iteration, {}};
    for (auto& p : front_points()) {
      snapshot.points.push_back(std::move(p.objectives));
    }
    return snapshot;
  }

private:
  std::vector<memory_entry> entries_;
  std::size_t capacity_;
  std::uint64_t next_entry_id_ = 0;
};

// Replace a particle's pbest only when the new entry's merit is strictly
// higher than the merit its current pbest holds in the same ranking pass.
inline void update_pbest(pbest_table& table,
                         std::span<memory_entry const> new_entries,
                         swarm_memory const& memory) {
  std::unordered_map<std::uint64_t, double> merit_by_id;
  merit_by_id.reserve(memory.size());
  for (auto const& e : memory.entries()) {
    merit_by_id.emplace(e.entry_id, e.ranked.merit);
  }

  for (auto const& entry : new_entries) {
    auto const& current = table.row(entry.particle_id);
    if (!current) {
      table.assign(entry.particle_id, entry);
      continue;
    }
    auto it = merit_by_id.find(current->entry_id);
    detail::expects(it != merit_by_id.end(),
                    "update_pbest: pbest entry missing from memory");
    if (entry.ranked.merit > it->second) {
      table.assign(entry.particle_id, entry);
    }
  }
}

// Advance the stagnation counter. Past the threshold, `n_randomized` distinct
// members of `elite` are re-drawn uniformly inside the bounds with zero
// velocity and the counter restarts.
inline std::size_t stagnation_step(std::size_t counter, bool front_changed,
                                   std::span<particle_state> elite,
                                   box_bounds const& bounds,
                                   etpso_config const& cfg, rng& random) {
  counter = front_changed ? 0 : counter + 1;
  if (counter <= cfg.stagnation_threshold) {
    return counter;
  }

  std::vector<std::size_t> order(elite.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  auto const count = std::min(cfg.n_randomized, elite.size());
  for (std::size_t k = 0; k < count; ++k) {
    auto const pick = k + random.index(order.size() - k);
    std::swap(order[k], order[pick]);

    auto& state = elite[order[k]];
    for (std::size_t d = 0; d < state.position.size(); ++d) {
      state.position[d] =
          bounds.project(d, random.uniform(bounds.lower[d], bounds.upper[d]));
    }
    std::fill(state.velocity.begin(), state.velocity.end(), 0.0);
  }
  return 0;
}

template<problem Problem>
run_result run(Problem const& prob, etpso_config const& cfg) {
  cfg.validate();
  auto const& bounds = prob.bounds();
  bounds.validate();
  auto const dim = static_cast<std::size_t>(prob.dimension());
  auto const n_objectives = static_cast<std::size_t>(prob.objective_count());
  if (dim == 0 || bounds.size() != dim) {
    throw config_error{"etpso: problem dimension does not match its bounds"};
  }

  rng random{cfg.seed};
  swarm_memory memory{cfg.memory_capacity};
  pbest_table pbest{cfg.n_particles};

  std::vector<particle_state> swarm;
  swarm.reserve(cfg.n_particles);
  for (std::size_t i = 0; i < cfg.n_particles; ++i) {
    swarm.push_back(
        particle_state{i, prob.sample(random), std::vector<double>(dim, 0.0)});
  }

  run_result result;
  front_snapshot previous;
  std::size_t stagnation = 0;
  std::size_t evaluations = 0;

  for (std::size_t iteration = 1; iteration <= cfg.max_iterations;
       ++iteration) {
    for (auto const& state : swarm) {
      evaluation eval;
      try {
        eval = prob.evaluate(state.position);
      }
      catch (std::exception const& e) {
        throw evaluation_error{"etpso: evaluation failed at iteration " +
                               std::to_string(iteration) + " for particle " +
                               std::to_string(state.particle_id) + ": " +
                               e.what()};
      }
      if (eval.objectives.size() != n_objectives) {
        throw evaluation_error{"etpso: evaluation returned wrong objective count"};
      }
      memory.insert(state, std::move(eval), iteration);
    }
    evaluations += swarm.size();

    memory.refresh_ranks();
    // refresh_ranks keeps insertion order, so this iteration's entries are
    // the tail of the memory.
    update_pbest(pbest, memory.entries().last(swarm.size()), memory);
    memory.sort_and_truncate(pbest);

    auto front = memory.front(iteration);
    bool const changed = iteration == 1 || front.points != previous.points;
    auto const& gbest = memory.gbest();
    result.reports.push_back(iteration_report{
        iteration, front, changed, gbest.eval.objectives, evaluations});
    previous = std::move(front);

    if (iteration == cfg.max_iterations) {
      break;
    }

    auto const elite = memory.select_elite(cfg.n_particles);
    std::vector<particle_state> next;
    next.reserve(elite.size());
    for (auto const& entry : elite) {
      particle_state state{entry.particle_id, entry.position, entry.velocity};
      auto const& own_best = pbest.row(entry.particle_id);
      auto const& pbest_position =
          own_best ? own_best->position : entry.position;
      auto velocity = update_velocity(state, pbest_position, gbest.position,
                                      cfg, [&] { return random.unit(); });
      state.position = update_position(state.position, velocity, bounds);
      state.velocity = std::move(velocity);
      next.push_back(std::move(state));
    }
    stagnation = stagnation_step(stagnation, changed, next, bounds, cfg, random);
    swarm = std::move(next);
  }

  result.final_front = memory.front_points();
  return result;
}

} // namespace etpso
