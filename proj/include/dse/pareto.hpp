#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dse {

/// Fractions of each resource type consumed. May exceed 1 for designs that
/// do not fit the device.
struct ResourceRatios {
  double lut = 0;
  double ff = 0;
  double dsp = 0;
  double bram = 0;
};

struct ResourceWeights {
  double lut = 0.1;
  double ff = 0.1;
  double dsp = 0.4;
  double bram = 0.4;
};

double weighted_resource(const ResourceRatios& r, const ResourceWeights& w);

struct Objectives {
  double latency_us = 0;
  double resource = 0;
};

/// Strict dominance in both objectives.
bool dominates(const Objectives& a, const Objectives& b);

/// Non-dominated set in (latency, weighted resource), kept sorted by latency
/// ascending / resource descending. Latency ties keep the lower-resource
/// entry so latency-wise interpolation stays well defined.
class ParetoFrontier {
 public:
  struct Entry {
    Objectives obj;
    std::string point_id;
  };

  /// Inserts obj if no current entry is at least as good in both objectives;
  /// entries the new one makes redundant are dropped. Returns whether the
  /// frontier actually gained the point (the bandit reward signal).
  bool update(const Objectives& obj, std::string_view id);

  /// Latency-wise projection: linear interpolation of the frontier resource
  /// at `latency_us`. Below the frontier minimum returns nullopt (the point
  /// would extend the frontier); above the maximum clamps to the last entry.
  /// Throws on an empty frontier.
  std::optional<double> project_resource(double latency_us) const;

  /// Dominated area w.r.t. `ref` (latency-sorted sweep); entries that do not
  /// dominate ref are ignored. Empty frontier gives 0.
  double hypervolume(const Objectives& ref) const;

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

  /// `latency_us,weighted_resource,point_id` rows, latency ascending.
  std::string to_csv() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace dse
