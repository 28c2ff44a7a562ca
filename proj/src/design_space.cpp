#include "dse/design_space.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace dse {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool config_valid_for_kind(Config c, KnobKind k) {
  switch (c) {
    case Config::none: return true;
    case Config::pipeline:
    case Config::unroll: return k == KnobKind::loop;
    case Config::complete:
    case Config::cyclic:
    case Config::block: return k == KnobKind::array;
  }
  return false;
}

}  // namespace

bool config_has_factor(Config c) {
  return c == Config::unroll || c == Config::cyclic || c == Config::block;
}

std::string_view config_name(Config c) {
  switch (c) {
    case Config::none: return "none";
    case Config::pipeline: return "pipeline";
    case Config::unroll: return "unroll";
    case Config::complete: return "complete";
    case Config::cyclic: return "cyclic";
    case Config::block: return "block";
  }
  return "?";
}

std::optional<Config> config_from_name(std::string_view name) {
  for (Config c : {Config::none, Config::pipeline, Config::unroll, Config::complete,
                   Config::cyclic, Config::block}) {
    if (config_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view kind_name(KnobKind k) { return k == KnobKind::loop ? "loop" : "array"; }

DesignSpace::DesignSpace(std::vector<KnobSpec> specs) : knobs_(std::move(specs)) {
  std::unordered_set<std::string> seen_ids;
  std::unordered_map<std::string, size_t> group_index;
  group_of_.assign(knobs_.size(), -1);

  for (size_t i = 0; i < knobs_.size(); ++i) {
    const KnobSpec& k = knobs_[i];
    if (k.id.empty()) fail("knob with empty id");
    if (!seen_ids.insert(k.id).second) fail("duplicate knob id: " + k.id);
    if (k.allowed_configs.empty()) fail("knob " + k.id + ": allowed_configs empty");

    std::set<Config> uniq;
    bool any_factor_bearing = false;
    for (Config c : k.allowed_configs) {
      if (!config_valid_for_kind(c, k.kind))
        fail("knob " + k.id + ": config '" + std::string(config_name(c)) +
             "' not valid for kind '" + std::string(kind_name(k.kind)) + "'");
      if (!uniq.insert(c).second)
        fail("knob " + k.id + ": repeated config '" + std::string(config_name(c)) + "'");
      any_factor_bearing |= config_has_factor(c);
    }
    if (any_factor_bearing && k.allowed_factors.empty())
      fail("knob " + k.id + ": factor-bearing config listed but factor list is empty");
    for (size_t j = 0; j < k.allowed_factors.size(); ++j) {
      if (k.allowed_factors[j] <= 0) fail("knob " + k.id + ": factor must be positive");
      if (j > 0 && k.allowed_factors[j] <= k.allowed_factors[j - 1])
        fail("knob " + k.id + ": factors must be strictly increasing");
    }

    if (!k.array_group.empty()) {
      if (k.kind != KnobKind::array) fail("knob " + k.id + ": group on non-array knob");
      auto [it, fresh] = group_index.try_emplace(k.array_group, groups_.size());
      if (fresh) groups_.push_back(Group{k.array_group, {}, {}});
      groups_[it->second].members.push_back(i);
      group_of_[i] = static_cast<int>(it->second);
    }

    // option set: factor-free configs once, factor-bearing ones per factor
    std::vector<Option> opts;
    for (Config c : k.allowed_configs) {
      if (config_has_factor(c)) {
        for (int f : k.allowed_factors) opts.push_back({c, f});
      } else {
        opts.push_back({c, 1});
      }
    }
    options_.push_back(std::move(opts));
  }

  for (Group& g : groups_) {
    const KnobSpec& first = knobs_[g.members.front()];
    for (Config c : first.allowed_configs) {
      bool everywhere = true;
      for (size_t m : g.members) {
        const auto& cfgs = knobs_[m].allowed_configs;
        everywhere &= std::find(cfgs.begin(), cfgs.end(), c) != cfgs.end();
      }
      if (everywhere) g.common_configs.push_back(c);
    }
    if (g.common_configs.empty())
      fail("array group " + g.name + ": members share no common config");
  }

  feature_offsets_.resize(knobs_.size());
  for (size_t i = 0; i < knobs_.size(); ++i) {
    feature_offsets_[i] = feature_length_;
    feature_length_ += knobs_[i].allowed_configs.size() + 1;
  }
}

std::optional<size_t> DesignSpace::knob_index(std::string_view id) const {
  for (size_t i = 0; i < knobs_.size(); ++i)
    if (knobs_[i].id == id) return i;
  return std::nullopt;
}

DesignSpace parse_knob_file(const std::string& text) {
  std::vector<std::string_view> lines = split(text, '\n');
  size_t row = 0;
  if (lines.empty() || trim(lines[0]) != "id,kind,group,configs,factors")
    fail("knob file: missing or malformed header row "
         "(expected `id,kind,group,configs,factors`)");

  std::vector<KnobSpec> specs;
  for (size_t li = 1; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split(line, ',');
    if (cells.size() != 5)
      fail("knob file row " + std::to_string(row) + ": expected 5 fields, got " +
           std::to_string(cells.size()));

    KnobSpec spec;
    spec.id = std::string(trim(cells[0]));
    if (spec.id.empty()) fail("knob file row " + std::to_string(row) + ": empty id");

    std::string_view kind = trim(cells[1]);
    if (kind == "loop") spec.kind = KnobKind::loop;
    else if (kind == "array") spec.kind = KnobKind::array;
    else fail("knob " + spec.id + ": unknown kind '" + std::string(kind) + "'");

    spec.array_group = std::string(trim(cells[2]));

    for (std::string_view c : split(trim(cells[3]), '|')) {
      c = trim(c);
      if (c.empty()) fail("knob " + spec.id + ": empty config name");
      auto cfg = config_from_name(c);
      if (!cfg) fail("knob " + spec.id + ": unknown config '" + std::string(c) + "'");
      spec.allowed_configs.push_back(*cfg);
    }

    std::string_view factors = trim(cells[4]);
    if (!factors.empty()) {
      for (std::string_view f : split(factors, '|')) {
        f = trim(f);
        int value = 0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
        if (ec != std::errc{} || ptr != f.data() + f.size())
          fail("knob " + spec.id + ": non-integer factor '" + std::string(f) + "'");
        spec.allowed_factors.push_back(value);
      }
    }
    specs.push_back(std::move(spec));
  }
  return DesignSpace(std::move(specs));
}

namespace {

uint64_t saturating_mul(uint64_t a, uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSpaceSizeCap / b) return kSpaceSizeCap;
  return std::min(a * b, kSpaceSizeCap);
}

// joint option count of a group for one shared config
uint64_t group_config_count(const DesignSpace& space, const DesignSpace::Group& g, Config c) {
  uint64_t n = 1;
  for (size_t m : g.members) {
    uint64_t per = config_has_factor(c) ? space.knobs()[m].allowed_factors.size() : 1;
    n = saturating_mul(n, per);
  }
  return n;
}

}  // namespace

uint64_t space_size(const DesignSpace& space) {
  uint64_t total = 1;
  for (size_t i = 0; i < space.size(); ++i) {
    if (space.group_of(i) >= 0) continue;  // handled per group
    total = saturating_mul(total, space.options(i).size());
  }
  for (const auto& g : space.groups()) {
    uint64_t joint = 0;
    for (Config c : g.common_configs) {
      joint += group_config_count(space, g, c);
      joint = std::min(joint, kSpaceSizeCap);
    }
    total = saturating_mul(total, joint);
  }
  return total;
}

DesignPoint random_point(const DesignSpace& space, Rng& rng) {
  DesignPoint p;
  p.assignments.resize(space.size());
  std::vector<std::optional<Config>> group_choice(space.groups().size());

  for (size_t i = 0; i < space.size(); ++i) {
    int gi = space.group_of(i);
    if (gi < 0) {
      const auto& opts = space.options(i);
      p.assignments[i] = opts[rng.uniform_int(opts.size())];
      continue;
    }
    const auto& g = space.groups()[gi];
    if (!group_choice[gi]) {
      // weight each shared config by its joint option count so the group
      // assignment is uniform over the joint option set
      uint64_t total = 0;
      for (Config c : g.common_configs) total += group_config_count(space, g, c);
      uint64_t pick = rng.uniform_int(total);
      for (Config c : g.common_configs) {
        uint64_t w = group_config_count(space, g, c);
        if (pick < w) {
          group_choice[gi] = c;
          break;
        }
        pick -= w;
      }
    }
    Config c = *group_choice[gi];
    if (config_has_factor(c)) {
      const auto& factors = space.knobs()[i].allowed_factors;
      p.assignments[i] = {c, factors[rng.uniform_int(factors.size())]};
    } else {
      p.assignments[i] = {c, 1};
    }
  }
  return p;
}

FeatureVector encode(const DesignSpace& space, const DesignPoint& point) {
  auto violations = validate(space, point);
  if (!violations.empty()) fail("encode: invalid point: " + violations.front());

  FeatureVector v(space.feature_length(), 0.0);
  for (size_t i = 0; i < space.size(); ++i) {
    const KnobSpec& k = space.knobs()[i];
    const Assignment& a = point.assignments[i];
    size_t off = space.feature_offset(i);
    for (size_t c = 0; c < k.allowed_configs.size(); ++c)
      if (k.allowed_configs[c] == a.config) v[off + c] = 1.0;
    v[off + k.allowed_configs.size()] = static_cast<double>(a.factor);
  }
  return v;
}

std::vector<std::string> validate(const DesignSpace& space, const DesignPoint& point) {
  std::vector<std::string> out;
  if (point.assignments.size() != space.size()) {
    out.push_back("point has " + std::to_string(point.assignments.size()) +
                  " assignments, space has " + std::to_string(space.size()) + " knobs");
    return out;
  }
  for (size_t i = 0; i < space.size(); ++i) {
    const KnobSpec& k = space.knobs()[i];
    const Assignment& a = point.assignments[i];
    if (std::find(k.allowed_configs.begin(), k.allowed_configs.end(), a.config) ==
        k.allowed_configs.end()) {
      out.push_back("knob " + k.id + ": config '" + std::string(config_name(a.config)) +
                    "' not allowed");
      continue;
    }
    if (config_has_factor(a.config)) {
      if (std::find(k.allowed_factors.begin(), k.allowed_factors.end(), a.factor) ==
          k.allowed_factors.end())
        out.push_back("knob " + k.id + ": factor " + std::to_string(a.factor) +
                      " not allowed");
    } else if (a.factor != 1) {
      out.push_back("knob " + k.id + ": factor must be 1 for '" +
                    std::string(config_name(a.config)) + "'");
    }
  }
  for (const auto& g : space.groups()) {
    Config c0 = point.assignments[g.members.front()].config;
    for (size_t m : g.members) {
      if (point.assignments[m].config != c0) {
        out.push_back("group " + g.name + ": members use different partitioning configs");
        break;
      }
    }
  }
  return out;
}

uint64_t point_hash(const DesignPoint& point) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const Assignment& a : point.assignments) {
    mix_byte(static_cast<unsigned char>(a.config));
    for (int s = 0; s < 32; s += 8) mix_byte(static_cast<unsigned char>(a.factor >> s));
  }
  return h;
}

std::string point_id(const DesignPoint& point) {
  static const char* hex = "0123456789abcdef";
  uint64_t h = point_hash(point);
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex[h & 0xf];
  return s;
}

namespace {

void enumerate_rec(const DesignSpace& space, size_t knob, DesignPoint& cur,
                   std::vector<std::optional<Config>>& group_cfg,
                   std::vector<DesignPoint>& out, uint64_t limit) {
  if (knob == space.size()) {
    if (out.size() >= limit) fail("enumerate_points: space exceeds limit");
    out.push_back(cur);
    return;
  }
  int gi = space.group_of(knob);
  auto recurse_factors = [&](Config c) {
    if (config_has_factor(c)) {
      for (int f : space.knobs()[knob].allowed_factors) {
        cur.assignments[knob] = {c, f};
        enumerate_rec(space, knob + 1, cur, group_cfg, out, limit);
      }
    } else {
      cur.assignments[knob] = {c, 1};
      enumerate_rec(space, knob + 1, cur, group_cfg, out, limit);
    }
  };
  if (gi < 0) {
    for (Config c : space.knobs()[knob].allowed_configs) recurse_factors(c);
  } else if (!group_cfg[gi]) {
    for (Config c : space.groups()[gi].common_configs) {
      group_cfg[gi] = c;
      recurse_factors(c);
    }
    group_cfg[gi] = std::nullopt;
  } else {
    recurse_factors(*group_cfg[gi]);
  }
}

}  // namespace

std::vector<DesignPoint> enumerate_points(const DesignSpace& space, uint64_t limit) {
  if (space_size(space) > limit) fail("enumerate_points: space exceeds limit");
  std::vector<DesignPoint> out;
  DesignPoint cur;
  cur.assignments.resize(space.size());
  std::vector<std::optional<Config>> group_cfg(space.groups().size());
  enumerate_rec(space, 0, cur, group_cfg, out, limit);
  return out;
}

}  // namespace dse
