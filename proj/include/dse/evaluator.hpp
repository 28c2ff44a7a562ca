#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dse/design_space.hpp"
#include "dse/pareto.hpp"

#include "json.hpp"

namespace dse {

enum class EvalStatus { ok, error, timeout };

std::string_view status_name(EvalStatus s);

/// Outcome of one evaluator call. Objective values exist only for successful
/// evaluations.
struct EvaluationRecord {
  std::string point_id;
  EvalStatus status = EvalStatus::error;
  std::optional<double> latency_us;
  std::optional<ResourceRatios> ratios;
  double wall_time_s = 0;
};

/// Device capacities used as ratio denominators.
struct ResourceCaps {
  long lut = 53200;
  long ff = 106400;
  long dsp = 220;
  long bram = 280;
};

struct EvaluatorSpec {
  enum class Kind { subprocess, synthetic };
  Kind kind = Kind::synthetic;
  std::string command_template;  // must contain {point_file} for subprocess
  double timeout_s = 300.0;
  std::string fixture_id = "S1";
  ResourceCaps available;
};

/// Parses "synthetic:FIXTURE" or "subprocess:COMMAND". Throws on anything else.
EvaluatorSpec parse_evaluator_arg(const std::string& arg);

/// Point-file / wire schema: {"assignments": {"<knob>": {"config": .., "factor": ..}}}.
nlohmann::json point_to_json(const DesignSpace& space, const DesignPoint& point);
DesignPoint point_from_json(const DesignSpace& space, const nlohmann::json& j);

/// Runs one evaluation. Subprocess evaluators get the point as a JSON file
/// substituted into the command template, are killed at timeout_s, and must
/// print the result JSON ({"status","latency_us","lut","ff","dsp","bram"},
/// raw counts) on stdout; nonzero exit or malformed output becomes status
/// error. Synthetic fixtures are pure functions of the point.
EvaluationRecord evaluate(const EvaluatorSpec& spec, const DesignPoint& point,
                          const DesignSpace& space);

/// The normative synthetic fixture S1: two nested trip-64 loops over one
/// array, with a pipeline feasibility island and a replication-driven
/// timeout region.
EvaluationRecord eval_s1(const DesignPoint& point, const DesignSpace& space);

/// Larger fixture S2: three nested trip-32 loops over two grouped arrays
/// (~1.8e4 points), same structural traits as S1.
EvaluationRecord eval_s2(const DesignPoint& point, const DesignSpace& space);

/// Canonical knob CSV for a synthetic fixture ("S1" or "S2").
std::string fixture_knob_csv(const std::string& fixture_id);
ResourceCaps fixture_caps(const std::string& fixture_id);
bool is_known_fixture(const std::string& fixture_id);

/// Throws unless `space` matches the fixture's expected knobs exactly.
void check_fixture_space(const std::string& fixture_id, const DesignSpace& space);

/// Exhaustive evaluation of every valid point (spaces up to 1e5 points).
std::vector<std::pair<DesignPoint, EvaluationRecord>> brute_force(
    const std::string& fixture_id, const DesignSpace& space);

/// Append-only store of evaluated points with duplicate lookup.
class Dataset {
 public:
  struct Entry {
    DesignPoint point;
    EvaluationRecord record;
  };

  void append(DesignPoint point, EvaluationRecord record);
  bool contains(const DesignPoint& point) const;
  /// First entry with this point id, or nullptr.
  const Entry* find_by_id(std::string_view id) const;

  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  const Entry& operator[](size_t i) const { return entries_[i]; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<uint64_t, std::vector<size_t>> by_hash_;
  std::unordered_map<std::string, size_t> by_id_;
};

}  // namespace dse
