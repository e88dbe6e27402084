#pragma once

#include "error.hpp"
#include "gvrp.hpp"
#include "metrics.hpp"
#include "nsga2.hpp"
#include "pareto.hpp"
#include "problem.hpp"
#include "swarm.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// Seeded experiment campaigns: run every algorithm R times on one GVRP
// instance, persist the per-iteration fronts, then derive the HV/CS reports.
//
// Result directory layout:
//   manifest.json               resolved configuration, seeds, run status
//   instance.json               the instance every run used
//   runs/<algo>/run_NNN.json    per-iteration fronts and the final front
//   timings.json                wall-clock seconds per run (not reproducible)
//   hv.csv, cs.csv, bounds.json, final_front_<algo>.csv   from `metrics`
//   compare.json                from `compare`
namespace etpso::bench {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr char const* manifest_format = "etpso-campaign/1";
inline constexpr char const* output_dir_env = "ETPSO_OUTPUT_DIR";

struct algorithm_spec {
  std::string name;
  etpso_config etpso;
  nsga2::config nsga2;
};

struct campaign_config {
  std::optional<fs::path> instance_path;
  gvrp::generator_params generator;
  std::vector<algorithm_spec> algorithms;
  std::size_t runs = 16;
  std::size_t max_iterations = 100;
  std::uint64_t base_seed = 1;
  fs::path output_dir;

  [[nodiscard]] std::uint64_t run_seed(std::size_t run_index) const noexcept {
    return base_seed + run_index;
  }
};

namespace detail {

  template<typename T>
  void take(json const& block, char const* key, T& target,
            std::set<std::string>& seen) {
    seen.insert(key);
    if (!block.contains(key)) {
      return;
    }
    try {
      target = block.at(key).get<T>();
    }
    catch (nlohmann::json::exception const&) {
      throw config_error{std::string{"config: field '"} + key +
                         "' has the wrong type"};
    }
  }

  inline void reject_unknown(json const& block, std::set<std::string> const& seen,
                             std::string const& where) {
    for (auto const& [key, value] : block.items()) {
      if (!seen.contains(key)) {
        throw config_error{"config: unknown key '" + key + "' in " + where};
      }
    }
  }

  inline etpso_config parse_etpso(json const& p) {
    etpso_config c;
    std::set<std::string> seen;
    take(p, "n_particles", c.n_particles, seen);
    take(p, "w", c.w, seen);
    take(p, "c1", c.c1, seen);
    take(p, "c2", c.c2, seen);
    take(p, "memory_capacity", c.memory_capacity, seen);
    take(p, "stagnation_threshold", c.stagnation_threshold, seen);
    take(p, "n_randomized", c.n_randomized, seen);
    reject_unknown(p, seen, "etpso params");
    return c;
  }

  inline nsga2::config parse_nsga2(json const& p) {
    nsga2::config c;
    std::set<std::string> seen;
    take(p, "mu", c.mu, seen);
    take(p, "lambda", c.lambda, seen);
    take(p, "cxpb", c.cxpb, seen);
    take(p, "mutpb", c.mutpb, seen);
    take(p, "mut_mean", c.mut_mean, seen);
    take(p, "mut_sigma", c.mut_sigma, seen);
    take(p, "indpb", c.indpb, seen);
    reject_unknown(p, seen, "nsga2 params");
    return c;
  }

  inline json etpso_params(etpso_config const& c) {
    json j;
    j["n_particles"] = c.n_particles;
    j["w"] = c.w;
    j["c1"] = c.c1;
    j["c2"] = c.c2;
    j["memory_capacity"] = c.memory_capacity;
    j["stagnation_threshold"] = c.stagnation_threshold;
    j["n_randomized"] = c.n_randomized;
    return j;
  }

  inline json nsga2_params(nsga2::config const& c) {
    json j;
    j["mu"] = c.mu;
    j["lambda"] = c.lambda;
    j["cxpb"] = c.cxpb;
    j["mutpb"] = c.mutpb;
    j["mut_mean"] = c.mut_mean;
    j["mut_sigma"] = c.mut_sigma;
    j["indpb"] = c.indpb;
    return j;
  }

  inline std::string read_text(fs::path const& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
      throw std::runtime_error{"cannot open " + path.string()};
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  inline json read_json(fs::path const& path) {
    try {
      return json::parse(read_text(path));
    }
    catch (nlohmann::json::parse_error const& e) {
      throw parse_error{path.string() + ": " + e.what()};
    }
  }

  // Write-then-rename so readers never observe a half-written file.
  inline void write_text(fs::path const& path, std::string const& text) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
      if (!out) {
        throw std::runtime_error{"cannot write " + tmp.string()};
      }
      out << text;
    }
    fs::rename(tmp, path);
  }

  inline std::string run_file(std::string const& algorithm, std::size_t run) {
    return fmt::format("runs/{}/run_{:03}.json", algorithm, run);
  }

  inline json vectors_json(std::vector<objective_vector> const& points) {
    json a = json::array();
    for (auto const& p : points) {
      a.push_back(p);
    }
    return a;
  }

} // namespace detail

inline campaign_config parse_campaign(json const& j, fs::path const& base_dir) {
  if (!j.is_object()) {
    throw config_error{"config: top level must be an object"};
  }
  campaign_config c;
  std::set<std::string> seen;
  detail::take(j, "runs", c.runs, seen);
  detail::take(j, "max_iterations", c.max_iterations, seen);
  detail::take(j, "base_seed", c.base_seed, seen);
  std::string out;
  detail::take(j, "output_dir", out, seen);
  if (!out.empty()) {
    c.output_dir = (fs::path{out}.is_absolute() ? fs::path{out} : base_dir / out)
                       .lexically_normal();
  }

  seen.insert("problem");
  if (!j.contains("problem") || !j["problem"].is_object()) {
    throw config_error{"config: missing 'problem' object"};
  }
  auto const& problem = j["problem"];
  std::set<std::string> problem_seen{"instance", "generate"};
  detail::reject_unknown(problem, problem_seen, "problem");
  if (problem.contains("instance") == problem.contains("generate")) {
    throw config_error{
        "config: problem needs exactly one of 'instance' or 'generate'"};
  }
  if (problem.contains("instance")) {
    std::string file;
    std::set<std::string> is;
    detail::take(problem, "instance", file, is);
    fs::path path{file};
    c.instance_path = (path.is_absolute() ? path : base_dir / path).lexically_normal();
  }
  else {
    auto const& g = problem["generate"];
    std::set<std::string> gs;
    detail::take(g, "seed", c.generator.seed, gs);
    detail::take(g, "d_total", c.generator.d_total, gs);
    detail::take(g, "n_stops", c.generator.n_stops, gs);
    detail::take(g, "capacity", c.generator.capacity, gs);
    detail::take(g, "v_min", c.generator.v_min, gs);
    detail::take(g, "v_max", c.generator.v_max, gs);
    detail::reject_unknown(g, gs, "problem.generate");
  }

  seen.insert("algorithms");
  if (!j.contains("algorithms") || !j["algorithms"].is_array() ||
      j["algorithms"].empty()) {
    throw config_error{"config: 'algorithms' must be a nonempty array"};
  }
  std::set<std::string> names;
  for (auto const& a : j["algorithms"]) {
    if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) {
      throw config_error{"config: every algorithm needs a string 'name'"};
    }
    std::set<std::string> as{"name", "params"};
    detail::reject_unknown(a, as, "algorithm");
    algorithm_spec spec;
    spec.name = a["name"].get<std::string>();
    auto const params = a.value("params", json::object());
    if (spec.name == "etpso") {
      spec.etpso = detail::parse_etpso(params);
    }
    else if (spec.name == "nsga2") {
      spec.nsga2 = detail::parse_nsga2(params);
    }
    else {
      throw config_error{"config: unknown algorithm '" + spec.name +
                         "' (expected etpso or nsga2)"};
    }
    if (!names.insert(spec.name).second) {
      throw config_error{"config: algorithm '" + spec.name + "' listed twice"};
    }
    c.algorithms.push_back(std::move(spec));
  }
  detail::reject_unknown(j, seen, "campaign config");

  if (c.runs == 0 || c.max_iterations == 0) {
    throw config_error{"config: runs and max_iterations must be positive"};
  }
  for (auto& a : c.algorithms) {
    a.etpso.max_iterations = c.max_iterations;
    a.nsga2.max_iterations = c.max_iterations;
    if (a.name == "etpso") {
      a.etpso.validate();
    }
    else {
      a.nsga2.validate();
    }
  }
  return c;
}

inline campaign_config read_campaign(fs::path const& path) {
  json j;
  try {
    j = json::parse(detail::read_text(path));
  }
  catch (nlohmann::json::parse_error const& e) {
    throw config_error{path.string() + ": " + e.what()};
  }
  return parse_campaign(j, path.parent_path());
}

inline gvrp::instance load_problem(campaign_config const& c) {
  if (c.instance_path) {
    return gvrp::read_instance(*c.instance_path);
  }
  return gvrp::generate_instance(c.generator);
}

inline std::size_t evaluations_per_iteration(algorithm_spec const& a) {
  return a.name == "etpso" ? a.etpso.n_particles : a.nsga2.mu + a.nsga2.lambda;
}

// Every parameter needed to repeat the campaign bit for bit.
inline json resolved_config(campaign_config const& c) {
  json j;
  j["runs"] = c.runs;
  j["max_iterations"] = c.max_iterations;
  j["base_seed"] = c.base_seed;
  json problem;
  if (c.instance_path) {
    problem["instance"] = c.instance_path->string();
  }
  else {
    json g;
    g["seed"] = c.generator.seed;
    g["d_total"] = c.generator.d_total;
    g["n_stops"] = c.generator.n_stops;
    g["capacity"] = c.generator.capacity;
    g["v_min"] = c.generator.v_min;
    g["v_max"] = c.generator.v_max;
    problem["generate"] = g;
  }
  j["problem"] = problem;
  json algos = json::array();
  for (auto const& a : c.algorithms) {
    json entry;
    entry["name"] = a.name;
    entry["params"] = a.name == "etpso" ? detail::etpso_params(a.etpso)
                                        : detail::nsga2_params(a.nsga2);
    algos.push_back(entry);
  }
  j["algorithms"] = algos;
  return j;
}

inline json run_json(std::string const& algorithm, std::size_t run,
                     std::uint64_t seed, run_result const& r,
                     gvrp::problem const& prob) {
  json j;
  j["algorithm"] = algorithm;
  j["run"] = run;
  j["seed"] = seed;
  json iterations = json::array();
  for (auto const& rep : r.reports) {
    json it;
    it["iteration"] = rep.iteration;
    it["evaluations_used"] = rep.evaluations_used;
    it["front_changed"] = rep.front_changed;
    it["gbest"] = rep.gbest_objectives;
    it["front"] = detail::vectors_json(rep.front.points);
    iterations.push_back(it);
  }
  j["iterations"] = iterations;
  json final_front = json::array();
  for (auto const& p : r.final_front) {
    json point;
    point["objectives"] = p.objectives;
    point["position"] = p.position;
    point["solution"] = prob.describe(p.position);
    final_front.push_back(point);
  }
  j["final_front"] = final_front;
  return j;
}

inline run_result run_algorithm(algorithm_spec const& a,
                                gvrp::problem const& prob, std::uint64_t seed) {
  if (a.name == "etpso") {
    auto cfg = a.etpso;
    cfg.seed = seed;
    return etpso::run(prob, cfg);
  }
  auto cfg = a.nsga2;
  cfg.seed = seed;
  return nsga2::evolve(prob, cfg).run;
}

struct campaign_summary {
  fs::path output_dir;
  std::size_t completed = 0;
  std::size_t failed = 0;
};

// Executes every (algorithm, run) pair. A failing run is recorded in the
// manifest and the campaign moves on.
inline campaign_summary run_campaign(campaign_config c) {
  if (c.output_dir.empty()) {
    auto const* env = std::getenv(output_dir_env);
    c.output_dir = env != nullptr && *env != '\0' ? fs::path{env}
                                                  : fs::path{"results"};
  }
  auto const inst = load_problem(c);
  gvrp::problem const prob{inst};
  fs::create_directories(c.output_dir);
  detail::write_text(c.output_dir / "instance.json", gvrp::dump_instance(inst));

  json manifest;
  manifest["format"] = manifest_format;
  manifest["config"] = resolved_config(c);
  manifest["instance_file"] = "instance.json";
  json budgets = json::object();
  for (auto const& a : c.algorithms) {
    budgets[a.name] = evaluations_per_iteration(a);
  }
  manifest["evaluations_per_iteration"] = budgets;

  campaign_summary summary{c.output_dir};
  json runs = json::array();
  json timings = json::array();
  for (auto const& a : c.algorithms) {
    for (std::size_t k = 0; k < c.runs; ++k) {
      auto const seed = c.run_seed(k);
      auto const file = detail::run_file(a.name, k);
      json record;
      record["algorithm"] = a.name;
      record["run"] = k;
      record["seed"] = seed;
      record["file"] = file;

      auto const start = std::chrono::steady_clock::now();
      try {
        auto const result = run_algorithm(a, prob, seed);
        detail::write_text(c.output_dir / file,
                           run_json(a.name, k, seed, result, prob).dump(1) +
                               "\n");
        record["status"] = "ok";
        ++summary.completed;
      }
      catch (std::exception const& e) {
        record["status"] = "failed";
        record["error"] = e.what();
        ++summary.failed;
      }
      std::chrono::duration<double> const elapsed =
          std::chrono::steady_clock::now() - start;

      json timing;
      timing["algorithm"] = a.name;
      timing["run"] = k;
      timing["seconds"] = elapsed.count();
      timings.push_back(timing);
      runs.push_back(record);
    }
  }
  manifest["runs"] = runs;
  detail::write_text(c.output_dir / "manifest.json", manifest.dump(2) + "\n");
  detail::write_text(c.output_dir / "timings.json", timings.dump(2) + "\n");
  return summary;
}

struct loaded_run {
  std::size_t run = 0;
  metrics::run_trace trace;
  std::vector<front_point> final_front;
};

struct loaded_campaign {
  gvrp::instance instance;
  std::vector<std::string> algorithms;
  std::map<std::string, std::vector<loaded_run>> runs;
};

namespace detail {

  inline std::vector<objective_vector> read_points(json const& a) {
    std::vector<objective_vector> points;
    for (auto const& p : a) {
      points.push_back(p.get<objective_vector>());
    }
    return points;
  }

} // namespace detail

// Reads a finished result directory. Missing or failed runs are collected and
// reported together.
inline loaded_campaign load_results(fs::path const& dir) {
  auto const manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw std::runtime_error{"results: no manifest.json in " + dir.string()};
  }
  auto const manifest = detail::read_json(manifest_path);
  if (manifest.value("format", "") != manifest_format) {
    throw parse_error{"results: unrecognised manifest format"};
  }

  loaded_campaign out;
  out.instance = gvrp::read_instance(dir / manifest.value("instance_file",
                                                          "instance.json"));
  for (auto const& a : manifest.at("config").at("algorithms")) {
    out.algorithms.push_back(a.at("name").get<std::string>());
    out.runs[out.algorithms.back()];
  }

  std::vector<std::string> missing;
  for (auto const& record : manifest.at("runs")) {
    auto const algorithm = record.at("algorithm").get<std::string>();
    auto const run = record.at("run").get<std::size_t>();
    auto const file = dir / record.at("file").get<std::string>();
    auto const label = algorithm + " run " + std::to_string(run);
    if (record.value("status", "") != "ok") {
      missing.push_back(label + " (failed: " + record.value("error", "?") + ")");
      continue;
    }
    if (!fs::exists(file)) {
      missing.push_back(label + " (missing " + file.string() + ")");
      continue;
    }
    auto const j = detail::read_json(file);
    loaded_run lr;
    lr.run = run;
    for (auto const& it : j.at("iterations")) {
      lr.trace.fronts.push_back(front_snapshot{
          it.at("iteration").get<std::size_t>(),
          detail::read_points(it.at("front"))});
      lr.trace.front_changed.push_back(it.at("front_changed").get<bool>());
    }
    for (auto const& p : j.at("final_front")) {
      lr.final_front.push_back(front_point{
          p.at("objectives").get<objective_vector>(),
          p.at("position").get<std::vector<double>>()});
    }
    out.runs[algorithm].push_back(std::move(lr));
  }

  if (!missing.empty()) {
    std::string message = "results incomplete:";
    for (auto const& m : missing) {
      message += "\n  " + m;
    }
    throw std::runtime_error{message};
  }
  for (auto const& name : out.algorithms) {
    if (out.runs[name].empty()) {
      throw std::runtime_error{"results: no runs recorded for " + name};
    }
  }
  return out;
}

// Non-dominated union of the final fronts of all runs, one row per distinct
// objective vector.
inline std::vector<front_point>
merged_final_front(std::vector<loaded_run> const& runs) {
  std::vector<front_point> all;
  for (auto const& r : runs) {
    all.insert(all.end(), r.final_front.begin(), r.final_front.end());
  }
  std::stable_sort(all.begin(), all.end(), [](auto const& a, auto const& b) {
    return a.objectives < b.objectives;
  });
  std::vector<front_point> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!out.empty() && out.back().objectives == all[i].objectives) {
      continue;
    }
    bool dominated = false;
    for (auto const& other : all) {
      if (dominates(other.objectives, all[i].objectives)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) {
      out.push_back(all[i]);
    }
  }
  return out;
}

struct metrics_report {
  metrics::normalization_bounds bounds;
  std::vector<std::string> algorithms;
  std::map<std::string, std::vector<double>> hv;
  std::map<std::string, std::vector<double>> cs;
  std::map<std::string, std::vector<front_point>> final_fronts;
  // Per-run HV series, indexed like the loaded runs.
  std::map<std::string, std::vector<std::vector<double>>> run_hv;
};

inline metrics_report compute_metrics(loaded_campaign const& lc) {
  metrics_report report;
  report.algorithms = lc.algorithms;

  std::vector<metrics::campaign_result> campaigns;
  for (auto const& name : lc.algorithms) {
    metrics::campaign_result c;
    for (auto const& r : lc.runs.at(name)) {
      c.runs.push_back(r.trace);
    }
    campaigns.push_back(std::move(c));
  }
  report.bounds = metrics::campaign_bounds(campaigns);

  for (std::size_t a = 0; a < lc.algorithms.size(); ++a) {
    auto const& name = lc.algorithms[a];
    report.hv[name] = metrics::averaged_hv(campaigns[a], report.bounds);
    report.cs[name] = metrics::averaged_cs(campaigns[a]);
    report.final_fronts[name] = merged_final_front(lc.runs.at(name));
    for (auto const& r : campaigns[a].runs) {
      metrics::campaign_result single{{r}};
      report.run_hv[name].push_back(metrics::averaged_hv(single, report.bounds));
    }
  }
  return report;
}

namespace detail {

  inline std::string series_csv(std::vector<std::string> const& names,
                                std::map<std::string, std::vector<double>> const& s) {
    std::string out = "iteration";
    for (auto const& n : names) {
      out += "," + n;
    }
    out += "\n";
    auto const t = s.at(names.front()).size();
    for (std::size_t i = 0; i < t; ++i) {
      out += fmt::format("{}", i + 1);
      for (auto const& n : names) {
        auto const& col = s.at(n);
        out += i < col.size() ? fmt::format(",{}", col[i]) : std::string{","};
      }
      out += "\n";
    }
    return out;
  }

} // namespace detail

inline std::string final_front_csv(std::vector<front_point> const& front,
                                   gvrp::problem const& prob) {
  auto const n = prob.data().n_stops;
  std::string out = "z1,z2";
  for (std::size_t k = 1; k <= n; ++k) {
    out += fmt::format(",x{}", k);
  }
  for (std::size_t k = 0; k <= n; ++k) {
    out += fmt::format(",v{}", k);
  }
  out += "\n";
  for (auto const& p : front) {
    out += fmt::format("{},{}", p.objectives[0], p.objectives[1]);
    for (auto v : prob.describe(p.position)) {
      out += fmt::format(",{}", v);
    }
    out += "\n";
  }
  return out;
}

// Writes hv.csv, cs.csv, bounds.json and final_front_<algo>.csv.
inline metrics_report write_metrics(fs::path const& dir) {
  auto const lc = load_results(dir);
  auto report = compute_metrics(lc);
  gvrp::problem const prob{lc.instance};

  detail::write_text(dir / "hv.csv",
                     detail::series_csv(report.algorithms, report.hv));
  detail::write_text(dir / "cs.csv",
                     detail::series_csv(report.algorithms, report.cs));
  json b;
  b["min"] = report.bounds.min;
  b["max"] = report.bounds.max;
  detail::write_text(dir / "bounds.json", b.dump(2) + "\n");
  for (auto const& name : report.algorithms) {
    detail::write_text(dir / ("final_front_" + name + ".csv"),
                       final_front_csv(report.final_fronts.at(name), prob));
  }
  return report;
}

// Share of `front`'s points that no point of `other` dominates.
inline double non_dominated_fraction(std::vector<front_point> const& front,
                                     std::vector<front_point> const& other) {
  if (front.empty()) {
    return 0.0;
  }
  std::size_t kept = 0;
  for (auto const& p : front) {
    bool dominated = false;
    for (auto const& q : other) {
      if (dominates(q.objectives, p.objectives)) {
        dominated = true;
        break;
      }
    }
    kept += dominated ? 0 : 1;
  }
  return static_cast<double>(kept) / static_cast<double>(front.size());
}

struct comparison {
  json document;
  std::string text;
};

inline comparison compare(metrics_report const& report) {
  if (report.algorithms.size() < 2) {
    throw std::runtime_error{"compare: need at least two algorithms, found " +
                             std::to_string(report.algorithms.size())};
  }
  comparison out;
  json algos = json::object();
  for (auto const& name : report.algorithms) {
    json a;
    a["final_hv"] = report.hv.at(name).back();
    a["final_cs"] = report.cs.at(name).back();
    a["final_front_size"] = report.final_fronts.at(name).size();
    algos[name] = a;
    out.text += fmt::format("{:<8} final HV {:.6f}  final CS {:.4f}  front {}\n",
                            name, report.hv.at(name).back(),
                            report.cs.at(name).back(),
                            report.final_fronts.at(name).size());
  }
  out.document["algorithms"] = algos;

  json pairs = json::array();
  for (std::size_t i = 0; i < report.algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < report.algorithms.size(); ++j) {
      auto const& a = report.algorithms[i];
      auto const& b = report.algorithms[j];
      json p;
      p["a"] = a;
      p["b"] = b;
      p["hv_difference"] = report.hv.at(a).back() - report.hv.at(b).back();
      p["cs_difference"] = report.cs.at(a).back() - report.cs.at(b).back();
      p["a_not_dominated_by_b"] = non_dominated_fraction(
          report.final_fronts.at(a), report.final_fronts.at(b));
      p["b_not_dominated_by_a"] = non_dominated_fraction(
          report.final_fronts.at(b), report.final_fronts.at(a));
      out.text += fmt::format(
          "{} - {}: dHV {:+.6f}  dCS {:+.4f}  non-dominated {:.3f} / {:.3f}\n",
          a, b, p["hv_difference"].get<double>(),
          p["cs_difference"].get<double>(),
          p["a_not_dominated_by_b"].get<double>(),
          p["b_not_dominated_by_a"].get<double>());
      pairs.push_back(p);
    }
  }
  out.document["pairs"] = pairs;
  return out;
}

inline comparison write_compare(fs::path const& dir) {
  auto const report = compute_metrics(load_results(dir));
  auto out = compare(report);
  detail::write_text(dir / "compare.json", out.document.dump(2) + "\n");
  return out;
}

} // namespace etpso::bench
