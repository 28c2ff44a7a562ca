#include "dse/pareto.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace dse {

double weighted_resource(const ResourceRatios& r, const ResourceWeights& w) {
  return w.lut * r.lut + w.ff * r.ff + w.dsp * r.dsp + w.bram * r.bram;
}

bool dominates(const Objectives& a, const Objectives& b) {
  return a.latency_us < b.latency_us && a.resource < b.resource;
}

bool ParetoFrontier::update(const Objectives& obj, std::string_view id) {
  for (const Entry& e : entries_) {
    if (e.obj.latency_us <= obj.latency_us && e.obj.resource <= obj.resource)
      return false;  // weakly dominated; covers duplicates and latency ties
  }
  std::erase_if(entries_, [&](const Entry& e) {
    return e.obj.latency_us >= obj.latency_us && e.obj.resource >= obj.resource;
  });
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), obj.latency_us,
                              [](const Entry& e, double lat) { return e.obj.latency_us < lat; });
  entries_.insert(pos, Entry{obj, std::string(id)});
  return true;
}

std::optional<double> ParetoFrontier::project_resource(double latency_us) const {
  if (entries_.empty()) throw std::logic_error("project_resource: empty frontier");
  if (latency_us < entries_.front().obj.latency_us) return std::nullopt;
  if (latency_us >= entries_.back().obj.latency_us) return entries_.back().obj.resource;
  auto hi = std::upper_bound(entries_.begin(), entries_.end(), latency_us,
                             [](double lat, const Entry& e) { return lat < e.obj.latency_us; });
  auto lo = hi - 1;
  double span = hi->obj.latency_us - lo->obj.latency_us;
  double t = (latency_us - lo->obj.latency_us) / span;
  return lo->obj.resource + t * (hi->obj.resource - lo->obj.resource);
}

double ParetoFrontier::hypervolume(const Objectives& ref) const {
  double hv = 0;
  double prev_resource = ref.resource;
  for (const Entry& e : entries_) {  // latency ascending
    if (!dominates(e.obj, ref)) continue;
    hv += (ref.latency_us - e.obj.latency_us) * (prev_resource - e.obj.resource);
    prev_resource = e.obj.resource;
  }
  return hv;
}

std::string ParetoFrontier::to_csv() const {
  std::string out = "latency_us,weighted_resource,point_id\n";
  char buf[64];
  auto append_num = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, p);
  };
  for (const Entry& e : entries_) {
    append_num(e.obj.latency_us);
    out.push_back(',');
    append_num(e.obj.resource);
    out.push_back(',');
    out += e.point_id;
    out.push_back('\n');
  }
  return out;
}

}  // namespace dse
