#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dse/rng.hpp"

namespace dse {

enum class KnobKind { loop, array };

/// Directive configuration applied to a knob. Loops take none/pipeline/unroll,
/// arrays take none/complete/cyclic/block. unroll, cyclic and block carry an
/// integer factor; the rest are fixed to factor 1.
enum class Config { none, pipeline, unroll, complete, cyclic, block };

bool config_has_factor(Config c);
std::string_view config_name(Config c);
std::optional<Config> config_from_name(std::string_view name);
std::string_view kind_name(KnobKind k);

/// One tunable knob: the discrete configurations and factors it accepts.
/// Arrays sharing an array_group must use the same partitioning config.
struct KnobSpec {
  std::string id;
  KnobKind kind = KnobKind::loop;
  std::string array_group;  // empty when ungrouped
  std::vector<Config> allowed_configs;
  std::vector<int> allowed_factors;
};

/// One concrete (config, factor) choice for a knob. factor is 1 whenever the
/// config carries no factor.
struct Assignment {
  Config config = Config::none;
  int factor = 1;
  bool operator==(const Assignment&) const = default;
};

/// A complete assignment of all knobs, index-aligned with the space's knob
/// order.
struct DesignPoint {
  std::vector<Assignment> assignments;
  bool operator==(const DesignPoint&) const = default;
};

/// One selectable option of a knob: a config paired with one of its factors
/// (or factor 1 for factor-free configs).
using Option = Assignment;

/// Validated design space: knob specs plus derived structure (per-knob option
/// sets, array groups, one-hot feature layout).
class DesignSpace {
 public:
  struct Group {
    std::string name;
    std::vector<size_t> members;         // knob indices, file order
    std::vector<Config> common_configs;  // order of the first member's list
  };

  /// Validates the specs; throws std::runtime_error on any invariant
  /// violation (duplicate ids, empty config list, missing factors, ...).
  explicit DesignSpace(std::vector<KnobSpec> specs);

  const std::vector<KnobSpec>& knobs() const { return knobs_; }
  size_t size() const { return knobs_.size(); }
  std::optional<size_t> knob_index(std::string_view id) const;

  const std::vector<Option>& options(size_t knob) const { return options_[knob]; }
  const std::vector<Group>& groups() const { return groups_; }
  /// Index into groups(), or -1 for ungrouped knobs.
  int group_of(size_t knob) const { return group_of_[knob]; }

  /// Encoded feature-vector length: sum over knobs of |allowed_configs| + 1.
  size_t feature_length() const { return feature_length_; }
  size_t feature_offset(size_t knob) const { return feature_offsets_[knob]; }

 private:
  std::vector<KnobSpec> knobs_;
  std::vector<std::vector<Option>> options_;
  std::vector<Group> groups_;
  std::vector<int> group_of_;
  std::vector<size_t> feature_offsets_;
  size_t feature_length_ = 0;
};

using FeatureVector = std::vector<double>;

/// Parses the knob CSV (header `id,kind,group,configs,factors`; configs and
/// factors are `|`-separated). Throws std::runtime_error with the offending
/// row's knob id in the message.
DesignSpace parse_knob_file(const std::string& text);

/// space_size saturates here instead of overflowing.
inline constexpr uint64_t kSpaceSizeCap = 1'000'000'000'000ULL;

/// Number of distinct valid design points; array groups are enumerated
/// jointly. Saturates at kSpaceSizeCap.
uint64_t space_size(const DesignSpace& space);

/// Uniform sample over valid points: each array group draws one shared
/// partitioning config (weighted by its joint option count so the group
/// assignment stays uniform over the joint option set), then per-member
/// factors.
DesignPoint random_point(const DesignSpace& space, Rng& rng);

/// One-hot block per knob in allowed_configs order, then the factor slot.
FeatureVector encode(const DesignSpace& space, const DesignPoint& point);

/// Every violated DesignPoint invariant, each naming the knob involved.
/// Empty result means the point is valid.
std::vector<std::string> validate(const DesignSpace& space, const DesignPoint& point);

/// 64-bit FNV-1a over the assignment sequence; stable across runs.
uint64_t point_hash(const DesignPoint& point);
/// point_hash rendered as 16 hex digits; the stable id used in reports.
std::string point_id(const DesignPoint& point);

/// Enumerates every valid point in deterministic order (knob-file order,
/// option order, group configs in first-member order). Throws if the space
/// exceeds `limit`.
std::vector<DesignPoint> enumerate_points(const DesignSpace& space, uint64_t limit);

}  // namespace dse
