// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Oracles live in oracles.hpp and never call the code under test.

#include "oracles.hpp"

#include <etpso/campaign.hpp>
#include <etpso/gvrp.hpp>
#include <etpso/metrics.hpp>
#include <etpso/pareto.hpp>
#include <etpso/swarm.hpp>

#include <fmt/format.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace bench = etpso::bench;
namespace gvrp = etpso::gvrp;
namespace metrics = etpso::metrics;

namespace {

struct outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, char const* title, std::function<outcome()> const& check) {
  auto const start = std::chrono::steady_clock::now();
  outcome result;
  try {
    result = check();
  }
  catch (std::exception const& e) {
    result = {false, std::string{"exception: "} + e.what()};
  }
  std::chrono::duration<double> const took =
      std::chrono::steady_clock::now() - start;
  failures += result.pass ? 0 : 1;
  fmt::print("[{}] criterion {}: {} ({}; {:.2f} s)\n",
             result.pass ? "PASS" : "FAIL", id, title, result.detail,
             took.count());
  std::fflush(stdout);
}

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(std::string const& name) {
  auto dir = fs::temp_directory_path() / "etpso_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

outcome constriction() {
  auto const k = etpso::constriction_factor(2.05, 2.05);
  return {std::abs(k - 0.729844) <= 1e-6, fmt::format("K = {:.10f}", k)};
}

outcome sorting_oracle() {
  std::mt19937_64 engine{20240601};
  std::uniform_int_distribution<std::size_t> size{1, 50};
  std::size_t mismatches = 0;
  std::size_t const cohorts = 1200;
  for (std::size_t trial = 0; trial < cohorts; ++trial) {
    auto const m = trial % 2 == 0 ? 2u : 3u;
    bool const infeasible = trial % 4 < 2;
    auto const cohort = oracle::random_cohort(engine, size(engine), m, infeasible);
    for (bool constrained : {true, false}) {
      if (etpso::non_dominated_sort(cohort, constrained) !=
          oracle::peeling_ranks(cohort, constrained)) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0,
          fmt::format("{} cohorts x 2 modes, {} mismatches", cohorts, mismatches)};
}

outcome crowding_oracle() {
  using etpso::objective_vector;
  std::vector<std::string> bad;
  auto expect = [&](bool ok, char const* what) {
    if (!ok) {
      bad.emplace_back(what);
    }
  };
  auto const three =
      etpso::crowding_distance(std::vector<objective_vector>{{0, 2}, {1, 1}, {2, 0}});
  expect(three == std::vector<double>{1.0, 1.0, 1.0}, "three-point front");
  auto const four = etpso::crowding_distance(
      std::vector<objective_vector>{{0, 3}, {1, 2}, {2, 1}, {3, 0}});
  expect(four[1] == 4.0 / 9.0 && four[2] == 4.0 / 9.0, "4/9 interior");
  expect(four[0] == 1.0 && four[3] == 1.0, "boundary 1.0");
  expect(etpso::crowding_distance(std::vector<objective_vector>{{7, 7}}) ==
             std::vector<double>{1.0},
         "singleton");

  std::mt19937_64 engine{3};
  std::uniform_real_distribution<double> u{0.0, 10.0};
  std::size_t out_of_range = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<objective_vector> front(1 + trial % 30);
    for (auto& p : front) {
      p = {std::round(u(engine)), u(engine), u(engine)};
      p.resize(2 + trial % 2);
    }
    for (auto d : etpso::crowding_distance(front)) {
      out_of_range += (d >= 0.0 && d <= 1.0) ? 0 : 1;
    }
  }
  expect(out_of_range == 0, "range [0,1]");
  std::string detail = bad.empty() ? "fixtures exact, all values in [0,1]"
                                   : "failed:";
  for (auto const& b : bad) {
    detail += " " + b;
  }
  return {bad.empty(), detail};
}

outcome merit_hierarchy() {
  std::mt19937_64 engine{11};
  std::size_t pairs = 0;
  std::size_t violations = 0;
  while (pairs < 100000) {
    auto const cohort = oracle::random_cohort(engine, 40, 2, true);
    auto const ranked = etpso::rank_cohort(cohort);
    std::uniform_int_distribution<std::size_t> pick{0, ranked.size() - 1};
    for (int s = 0; s < 500; ++s, ++pairs) {
      auto const& a = ranked[pick(engine)];
      auto const& b = ranked[pick(engine)];
      if (a.eval.feasible() && !b.eval.feasible() && !(a.merit > b.merit)) {
        ++violations;
      }
      if (a.eval.feasible() && b.eval.feasible()) {
        if (a.rank < b.rank && a.crowding == b.crowding && !(a.merit > b.merit)) {
          ++violations;
        }
        if (a.rank == b.rank && a.crowding > b.crowding && !(a.merit > b.merit)) {
          ++violations;
        }
      }
    }
  }
  return {violations == 0,
          fmt::format("{} sampled pairs, {} violations", pairs, violations)};
}

outcome gvrp_fixtures() {
  std::vector<std::string> bad;
  auto expect = [&](bool ok, char const* what) {
    if (!ok) {
      bad.emplace_back(what);
    }
  };
  auto ulp_equal = [](double a, double b) {
    return std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(std::abs(a), std::abs(b));
  };

  gvrp::instance ten;
  ten.d_total = 10;
  ten.n_stops = 2;
  ten.capacity = 200;
  ten.v_min = 1;
  ten.v_max = 100;
  ten.segment_distances.assign(10, 1.0);
  ten.load_increments.assign(11, 0.0);
  auto const r10 = gvrp::decode({{3.0, 3.0}, {1, 1, 1}}, ten);
  expect(r10.stops == std::vector<std::size_t>{0, 5, 9, 10}, "stops (0,5,9,10)");

  auto five = ten;
  five.d_total = 5;
  five.n_stops = 1;
  five.segment_distances.assign(5, 1.0);
  five.load_increments.assign(6, 0.0);
  expect(gvrp::decode({{2.0}, {1, 1}}, five).stops ==
             std::vector<std::size_t>{0, 4, 5},
         "stops (0,4,5)");

  gvrp::instance tiny;
  tiny.d_total = 3;
  tiny.n_stops = 1;
  tiny.capacity = 200;
  tiny.v_min = 1;
  tiny.v_max = 100;
  tiny.initial_load = 0;
  tiny.segment_distances = {1, 2, 3};
  tiny.load_increments = {0, 0, 5, -2};
  gvrp::route const r{{0, 2, 3}, {10, 5}};
  auto const profile = gvrp::load_profile(r, tiny);
  expect(profile == std::vector<double>{0, 5, 3}, "profile (0,5,3)");
  // Decimal 0.9 and 1.875e-9 are not representable; compare to a few ulps.
  expect(ulp_equal(gvrp::travel_time(r, tiny), 0.9), "z1 = 0.9");
  expect(ulp_equal(gvrp::emissions(r, tiny), 1.875e-9), "z2 = 1.875e-9");
  expect(gvrp::capacity_constraint(r, tiny) == 0, "c = 0 inside bounds");
  auto low = tiny;
  low.load_increments = {0, 0, -1, 0};
  expect(gvrp::capacity_constraint(r, low) == 1, "c = 1 below zero");
  auto high = tiny;
  high.load_increments = {0, 0, 200.5, 0};
  expect(gvrp::capacity_constraint(r, high) == 1, "c = 1 above Q");

  std::string detail = bad.empty()
                           ? fmt::format("z1 = {:.17g}, z2 = {:.17g}",
                                         gvrp::travel_time(r, tiny),
                                         gvrp::emissions(r, tiny))
                           : "failed:";
  for (auto const& b : bad) {
    detail += " " + b;
  }
  return {bad.empty(), detail};
}

// Independent normalization for the oracle side.
std::array<double, 2> oracle_normalize(etpso::objective_vector const& z,
                                       metrics::normalization_bounds const& b) {
  std::array<double, 2> out{};
  for (std::size_t m = 0; m < 2; ++m) {
    out[m] = (std::log(b.max[m]) - std::log(z[m])) /
             (std::log(b.max[m]) - std::log(b.min[m]));
  }
  return out;
}

outcome hypervolume_oracle() {
  std::mt19937_64 engine{606};
  std::uniform_real_distribution<double> exponent{0.0, 6.0};
  std::uniform_int_distribution<int> size{1, 10};
  double worst = 0.0;
  std::size_t monotone_breaks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<etpso::objective_vector> front(size(engine));
    for (auto& p : front) {
      p = {std::pow(10.0, exponent(engine)), std::pow(10.0, exponent(engine))};
    }
    // Widen the bounds so the front does not span them exactly.
    auto bounds_pts = front;
    bounds_pts.push_back({1.0, 1.0});
    bounds_pts.push_back({1e6, 1e6});
    auto const b = metrics::campaign_bounds(bounds_pts);

    std::vector<std::array<double, 2>> normalized;
    for (auto const& p : front) {
      normalized.push_back(oracle_normalize(p, b));
    }
    auto const hv = metrics::hypervolume_2d(front, b);
    auto const mc = oracle::monte_carlo_area(normalized, 1000000,
                                             static_cast<std::uint64_t>(trial));
    worst = std::max(worst, std::abs(hv - mc));

    std::vector<etpso::objective_vector> growing;
    double previous = 0.0;
    for (auto const& p : front) {
      growing.push_back(p);
      auto const h = metrics::hypervolume_2d(growing, b);
      monotone_breaks += h >= previous ? 0 : 1;
      previous = h;
    }
  }
  return {worst <= 0.01 && monotone_breaks == 0,
          fmt::format("50 fronts, max |HV - MC| = {:.5f}, {} monotonicity breaks",
                      worst, monotone_breaks)};
}

outcome convergence_fixtures() {
  auto const all = metrics::convergence_score(std::vector<bool>(50, true));
  bool const constant = all == std::vector<double>(50, 1.0);
  std::vector<bool> once(11, false);
  once[0] = true;
  auto const at11 = metrics::convergence_score(once).back();
  std::vector<bool> stale(102, false);
  stale[0] = true;
  auto const floor = metrics::convergence_score(stale).back();
  return {constant && at11 == 0.90 && floor == 0.0,
          fmt::format("constant {}, CS_11 = {}, CS after 101 stagnant = {}",
                      constant ? "1.0" : "broken", at11, floor)};
}

bench::campaign_config small_campaign() {
  auto const j = nlohmann::json::parse(R"({
    "problem": {"generate": {"seed": 1, "d_total": 101, "n_stops": 5}},
    "algorithms": [
      {"name": "etpso", "params": {"memory_capacity": 2000}},
      {"name": "nsga2"}
    ],
    "runs": 2,
    "max_iterations": 20,
    "base_seed": 1
  })");
  return bench::parse_campaign(j, ".");
}

fs::path determinism_dir;

outcome determinism() {
  auto c = small_campaign();
  auto const a = scratch("determinism_a");
  auto const b = scratch("determinism_b");
  c.output_dir = a;
  bench::run_campaign(c);
  bench::write_metrics(a);
  c.output_dir = b;
  bench::run_campaign(c);
  bench::write_metrics(b);
  determinism_dir = a;

  std::size_t files = 0;
  std::size_t differ = 0;
  for (auto const& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "timings.json") {
      continue;
    }
    auto const rel = fs::relative(entry.path(), a);
    ++files;
    differ += slurp(entry.path()) == slurp(b / rel) ? 0 : 1;
  }
  std::size_t count_b = 0;
  for (auto const& entry : fs::recursive_directory_iterator(b)) {
    count_b += entry.is_regular_file() ? 1 : 0;
  }
  bool const same_listing = count_b == files + 1;
  return {files > 0 && differ == 0 && same_listing,
          fmt::format("{} files compared (timings excluded), {} differ", files,
                      differ)};
}

outcome archive_sanity() {
  if (determinism_dir.empty()) {
    return {false, "no campaign from criterion 8"};
  }
  auto const lc = bench::load_results(determinism_dir);
  gvrp::problem const prob{lc.instance};
  std::size_t fronts = 0;
  std::size_t problems = 0;
  for (auto const& [name, runs] : lc.runs) {
    for (auto const& r : runs) {
      ++fronts;
      for (auto const& p : r.final_front) {
        auto const e = prob.evaluate(p.position);
        problems += (e.feasible() && e.objectives == p.objectives) ? 0 : 1;
        for (auto const& q : r.final_front) {
          problems += oracle::weakly_better_everywhere(q.objectives, p.objectives)
                          ? 1
                          : 0;
        }
      }
    }
  }
  auto const report = bench::compute_metrics(lc);
  std::size_t drops = 0;
  for (auto const& series : report.run_hv.at("etpso")) {
    for (std::size_t t = 1; t < series.size(); ++t) {
      drops += series[t] >= series[t - 1] ? 0 : 1;
    }
  }
  return {problems == 0 && drops == 0,
          fmt::format("{} final fronts, {} dominance/feasibility problems, {} "
                      "MO-ETPSO HV decreases",
                      fronts, problems, drops)};
}

struct direction {
  double hv_etpso = 0;
  double hv_nsga2 = 0;
  double cs_etpso = 0;
  double cs_nsga2 = 0;

  [[nodiscard]] bool hv_ok() const {
    return hv_etpso >= hv_nsga2;
  }
  [[nodiscard]] bool cs_ok() const {
    return cs_etpso - cs_nsga2 >= 0.05;
  }
};

direction replicate(std::uint64_t base_seed) {
  auto const config = bench::read_campaign(fs::path{ETPSO_SOURCE_DIR} /
                                           "configs" / "problem1.json");
  auto c = config;
  c.base_seed = base_seed;
  c.output_dir = scratch(fmt::format("problem1_seed{}", base_seed));
  bench::run_campaign(c);
  auto const report = bench::compute_metrics(bench::load_results(c.output_dir));
  return {report.hv.at("etpso").back(), report.hv.at("nsga2").back(),
          report.cs.at("etpso").back(), report.cs.at("nsga2").back()};
}

outcome directional_replication() {
  std::string detail;
  bool any = false;
  for (std::uint64_t seed : {1u, 2000u, 3000u, 4000u}) {
    auto const d = replicate(seed);
    detail += fmt::format(
        "{}base seed {}: HV {:.4f} vs {:.4f} [{}], CS {:.4f} vs {:.4f} [{}]",
        detail.empty() ? "" : "; ", seed, d.hv_etpso, d.hv_nsga2,
        d.hv_ok() ? "ok" : "fail", d.cs_etpso, d.cs_nsga2,
        d.cs_ok() ? "ok" : "fail");
    if (d.hv_ok() && d.cs_ok()) {
      any = true;
      break;
    }
  }
  return {any, detail};
}

} // namespace

int main() {
  report(1, "constriction factor K(2.05, 2.05)", constriction);
  report(2, "non-dominated sort vs peeling oracle", sorting_oracle);
  report(3, "product crowding fixtures and range", crowding_oracle);
  report(4, "merit hierarchy over sampled pairs", merit_hierarchy);
  report(5, "GVRP decode/load/z1/z2/c fixtures", gvrp_fixtures);
  report(6, "hypervolume vs Monte-Carlo oracle", hypervolume_oracle);
  report(7, "convergence score fixtures", convergence_fixtures);
  report(8, "campaign determinism (R=2, 20 iterations, D=101/N=5)", determinism);
  report(9, "archive sanity of the criterion-8 runs", archive_sanity);
  report(10, "MO-ETPSO vs NSGA-II direction on D=1001/N=9, R=16",
         directional_replication);
  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
