#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dse/evaluator.hpp"
#include "dse/explorer.hpp"

namespace {

using namespace dse;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

int fail_config(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 2;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string knobs, evaluator, out = "dse_out", config_path, resume_path;
  std::optional<uint64_t> seed;
  std::optional<int> max_points, n_init;
  std::optional<double> time_budget_s;
  std::optional<int> checkpoint_at;
};

int cmd_run(const RunArgs& args) {
  Explorer explorer = [&] {
    if (!args.resume_path.empty()) {
      if (!args.knobs.empty() || !args.evaluator.empty() || !args.config_path.empty() ||
          args.seed || args.max_points || args.n_init || args.time_budget_s)
        throw std::runtime_error(
            "--resume conflicts with fresh-run flags "
            "(--knobs/--evaluator/--config/--seed/--max-points/--init/--time-budget-s)");
      return Explorer::resume_file(args.resume_path);
    }
    if (args.knobs.empty()) throw std::runtime_error("missing required flag --knobs");
    if (args.evaluator.empty()) throw std::runtime_error("missing required flag --evaluator");

    ExplorerConfig config;
    if (!args.config_path.empty()) {
      nlohmann::json j = nlohmann::json::parse(read_text_file(args.config_path), nullptr, false);
      if (j.is_discarded()) throw std::runtime_error("--config: not valid JSON");
      apply_config_overrides(config, j);
    }
    if (args.seed) config.seed = *args.seed;
    if (args.max_points) config.max_points = *args.max_points;
    if (args.n_init) config.n_init = *args.n_init;
    if (args.time_budget_s) config.time_budget_s = *args.time_budget_s;

    DesignSpace space = parse_knob_file(read_text_file(args.knobs));
    EvaluatorSpec evaluator = parse_evaluator_arg(args.evaluator);
    if (evaluator.kind == EvaluatorSpec::Kind::synthetic)
      check_fixture_space(evaluator.fixture_id, space);
    return Explorer(std::move(config), std::move(space), std::move(evaluator));
  }();

  try {
    if (!explorer.initialized()) explorer.initialize();
    bool checkpointed = false;
    while (explorer.step()) {
      if (args.checkpoint_at && !checkpointed &&
          explorer.iterations() >= *args.checkpoint_at) {
        std::filesystem::create_directories(args.out);
        explorer.save_checkpoint(args.out + "/checkpoint.json");
        checkpointed = true;
      }
    }
  } catch (const std::exception& e) {
    std::filesystem::create_directories(args.out);
    explorer.save_checkpoint(args.out + "/checkpoint.json");
    std::cerr << "error: run aborted: " << e.what() << "\n"
              << "checkpoint written to " << args.out << "/checkpoint.json\n";
    return 3;
  }
  explorer.write_outputs(args.out);
  std::cout << explorer.summary().dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
  std::string knobs, evaluator, out, config_path;
};

int cmd_oracle(const OracleArgs& args) {
  EvaluatorSpec spec = parse_evaluator_arg(args.evaluator);
  if (spec.kind != EvaluatorSpec::Kind::synthetic)
    throw std::runtime_error("oracle requires a synthetic evaluator");

  ExplorerConfig config;  // only weights are used here
  if (!args.config_path.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(args.config_path), nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("--config: not valid JSON");
    apply_config_overrides(config, j);
  }

  DesignSpace space = parse_knob_file(read_text_file(args.knobs));
  uint64_t size = space_size(space);
  if (size > 100000)
    throw std::runtime_error("space has " + std::to_string(size) +
                             " points, above the 1e5 brute-force limit");

  auto results = brute_force(spec.fixture_id, space);

  std::string all = "point_id";
  for (const KnobSpec& k : space.knobs()) all += "," + k.id + "_config," + k.id + "_factor";
  all += ",status,latency_us,r_lut,r_ff,r_dsp,r_bram,weighted_resource\n";
  struct OkRow {
    double latency, resource;
    std::string id;
  };
  std::vector<OkRow> ok_rows;
  for (const auto& [point, record] : results) {
    all += record.point_id;
    for (const Assignment& a : point.assignments) {
      all += ",";
      all += config_name(a.config);
      all += "," + std::to_string(a.factor);
    }
    all += ",";
    all += status_name(record.status);
    if (record.status == EvalStatus::ok) {
      double res = weighted_resource(*record.ratios, config.weights);
      all += "," + format_double(*record.latency_us);
      all += "," + format_double(record.ratios->lut) + "," + format_double(record.ratios->ff);
      all += "," + format_double(record.ratios->dsp) + "," + format_double(record.ratios->bram);
      all += "," + format_double(res);
      ok_rows.push_back({*record.latency_us, res, record.point_id});
    } else {
      all += ",,,,,,";
    }
    all += "\n";
  }

  // independent non-dominated filter: latency-sorted sweep keeping strictly
  // decreasing resource
  std::sort(ok_rows.begin(), ok_rows.end(), [](const OkRow& a, const OkRow& b) {
    if (a.latency != b.latency) return a.latency < b.latency;
    if (a.resource != b.resource) return a.resource < b.resource;
    return a.id < b.id;
  });
  std::string front = "latency_us,weighted_resource,point_id\n";
  double best = std::numeric_limits<double>::infinity();
  for (const OkRow& row : ok_rows) {
    if (row.resource >= best) continue;
    best = row.resource;
    front += format_double(row.latency) + "," + format_double(row.resource) + "," + row.id + "\n";
  }

  std::filesystem::create_directories(args.out);
  write_text_file(args.out + "/oracle_all.csv", all);
  write_text_file(args.out + "/oracle_pareto.csv", front);
  std::cout << "wrote " << results.size() << " rows (" << ok_rows.size() << " ok) to "
            << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> runs;
  std::string oracle_csv, ref, out = ".";
};

struct FrontierCsv {
  std::string label;
  std::vector<ParetoFrontier::Entry> entries;  // latency ascending
};

FrontierCsv load_frontier_csv(const std::string& label, const std::string& path) {
  FrontierCsv out;
  out.label = label;
  std::string text = read_text_file(path);
  size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != "latency_us,weighted_resource,point_id")
        throw std::runtime_error(path + ": unexpected header");
      header = false;
      continue;
    }
    size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error(path + ": malformed row");
    ParetoFrontier::Entry e;
    e.obj.latency_us = std::stod(line.substr(0, c1));
    e.obj.resource = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    e.point_id = line.substr(c2 + 1);
    out.entries.push_back(std::move(e));
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return a.obj.latency_us < b.obj.latency_us; });
  return out;
}

double frontier_hv(const FrontierCsv& f, const Objectives& ref) {
  ParetoFrontier front;
  for (const auto& e : f.entries) front.update(e.obj, e.point_id);
  return front.hypervolume(ref);
}

// elbow: frontier point with maximal perpendicular distance to the chord
// between the two endpoints
const ParetoFrontier::Entry& elbow_entry(const std::vector<ParetoFrontier::Entry>& entries) {
  const auto& a = entries.front();
  const auto& b = entries.back();
  double dx = b.obj.latency_us - a.obj.latency_us;
  double dy = b.obj.resource - a.obj.resource;
  double norm = std::hypot(dx, dy);
  size_t best = 0;
  double best_dist = -1;
  for (size_t i = 0; i < entries.size(); ++i) {
    double px = entries[i].obj.latency_us - a.obj.latency_us;
    double py = entries[i].obj.resource - a.obj.resource;
    double dist = norm == 0 ? 0 : std::abs(dx * py - dy * px) / norm;
    if (dist > best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return entries[best];
}

int cmd_report(const ReportArgs& args) {
  std::vector<FrontierCsv> fronts;
  for (const std::string& dir : args.runs)
    fronts.push_back(load_frontier_csv(dir, dir + "/pareto.csv"));
  std::optional<FrontierCsv> oracle;
  if (!args.oracle_csv.empty()) oracle = load_frontier_csv("oracle", args.oracle_csv);

  Objectives ref{0, 0};
  if (!args.ref.empty()) {
    size_t comma = args.ref.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("--ref: expected `latency,resource`");
    ref.latency_us = std::stod(args.ref.substr(0, comma));
    ref.resource = std::stod(args.ref.substr(comma + 1));
  } else {
    for (const FrontierCsv* f : [&] {
           std::vector<const FrontierCsv*> all;
           for (const auto& fr : fronts) all.push_back(&fr);
           if (oracle) all.push_back(&*oracle);
           return all;
         }()) {
      for (const auto& e : f->entries) {
        ref.latency_us = std::max(ref.latency_us, 1.1 * e.obj.latency_us);
        ref.resource = std::max(ref.resource, 1.1 * e.obj.resource);
      }
    }
  }

  double oracle_hv = oracle ? frontier_hv(*oracle, ref) : 0;
  std::printf("reference point: latency %s us, resource %s\n",
              format_double(ref.latency_us).c_str(), format_double(ref.resource).c_str());
  std::printf("%-28s %8s %14s %14s %14s %14s", "run", "entries", "min_latency_us",
              "res@min_lat", "elbow_lat_us", "hypervolume");
  if (oracle) std::printf(" %10s", "hv_ratio");
  std::printf("\n");

  std::string merged = "source,latency_us,weighted_resource,point_id\n";
  auto emit = [&](const FrontierCsv& f) {
    for (const auto& e : f.entries)
      merged += f.label + "," + format_double(e.obj.latency_us) + "," +
                format_double(e.obj.resource) + "," + e.point_id + "\n";
  };
  for (const FrontierCsv& f : fronts) {
    if (f.entries.empty()) {
      std::printf("%-28s %8d %14s %14s %14s %14s\n", f.label.c_str(), 0, "-", "-", "-", "-");
      continue;
    }
    const auto& mn = f.entries.front();
    const auto& elbow = elbow_entry(f.entries);
    double hv = frontier_hv(f, ref);
    std::printf("%-28s %8zu %14s %14s %14s %14s", f.label.c_str(), f.entries.size(),
                format_double(mn.obj.latency_us).c_str(),
                format_double(mn.obj.resource).c_str(),
                format_double(elbow.obj.latency_us).c_str(), format_double(hv).c_str());
    if (oracle) std::printf(" %10s", format_double(oracle_hv > 0 ? hv / oracle_hv : 0).c_str());
    std::printf("\n");
    emit(f);
  }
  if (oracle) emit(*oracle);

  std::filesystem::create_directories(args.out);
  write_text_file(args.out + "/comparison.csv", merged);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-objective design-space exploration for directive autotuning"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run an exploration");
  run->add_option("--knobs", run_args.knobs, "knob CSV file");
  run->add_option("--evaluator", run_args.evaluator,
                  "synthetic:FIXTURE or subprocess:COMMAND with {point_file}");
  run->add_option("--out", run_args.out, "output directory");
  run->add_option("--seed", run_args.seed, "master seed");
  run->add_option("--max-points", run_args.max_points, "total evaluator-call budget");
  run->add_option("--init", run_args.n_init, "initial random samples");
  run->add_option("--time-budget-s", run_args.time_budget_s, "wall-clock budget in seconds");
  run->add_option("--config", run_args.config_path, "JSON config overriding any field");
  run->add_option("--resume", run_args.resume_path, "checkpoint file to resume");
  run->add_option("--checkpoint-at", run_args.checkpoint_at,
                  "write a checkpoint after this many iterations");

  OracleArgs oracle_args;
  CLI::App* oracle = app.add_subcommand("oracle", "brute-force a synthetic fixture");
  oracle->add_option("--knobs", oracle_args.knobs, "knob CSV file")->required();
  oracle->add_option("--evaluator", oracle_args.evaluator, "synthetic:FIXTURE")->required();
  oracle->add_option("--out", oracle_args.out, "output directory")->required();
  oracle->add_option("--config", oracle_args.config_path, "JSON config (resource weights)");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "summarize finished runs");
  report->add_option("--run", report_args.runs, "run output directory (repeatable)")
      ->required();
  report->add_option("--oracle", report_args.oracle_csv, "oracle_pareto.csv for hv ratios");
  report->add_option("--ref", report_args.ref, "reference point `latency,resource`");
  report->add_option("--out", report_args.out, "directory for comparison.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (oracle->parsed()) return cmd_oracle(oracle_args);
    if (report->parsed()) return cmd_report(report_args);
  } catch (const std::exception& e) {
    return fail_config(e.what());
  }
  return 2;
}
