#include "dse/evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace dse {

std::string_view status_name(EvalStatus s) {
  switch (s) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::error: return "error";
    case EvalStatus::timeout: return "timeout";
  }
  return "?";
}

EvaluatorSpec parse_evaluator_arg(const std::string& arg) {
  EvaluatorSpec spec;
  auto colon = arg.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("evaluator: expected `synthetic:FIXTURE` or `subprocess:COMMAND`");
  std::string head = arg.substr(0, colon), rest = arg.substr(colon + 1);
  if (head == "synthetic") {
    if (!is_known_fixture(rest)) throw std::runtime_error("evaluator: unknown fixture " + rest);
    spec.kind = EvaluatorSpec::Kind::synthetic;
    spec.fixture_id = rest;
    spec.available = fixture_caps(rest);
  } else if (head == "subprocess") {
    if (rest.find("{point_file}") == std::string::npos)
      throw std::runtime_error("evaluator: command template lacks {point_file}");
    spec.kind = EvaluatorSpec::Kind::subprocess;
    spec.command_template = rest;
  } else {
    throw std::runtime_error("evaluator: unknown kind " + head);
  }
  return spec;
}

nlohmann::json point_to_json(const DesignSpace& space, const DesignPoint& point) {
  nlohmann::json assignments = nlohmann::json::object();
  for (size_t i = 0; i < space.size(); ++i) {
    const Assignment& a = point.assignments[i];
    assignments[space.knobs()[i].id] = {{"config", std::string(config_name(a.config))},
                                        {"factor", a.factor}};
  }
  return nlohmann::json{{"assignments", assignments}};
}

DesignPoint point_from_json(const DesignSpace& space, const nlohmann::json& j) {
  DesignPoint p;
  p.assignments.resize(space.size());
  const auto& assignments = j.at("assignments");
  if (assignments.size() != space.size())
    throw std::runtime_error("point json: wrong number of assignments");
  for (size_t i = 0; i < space.size(); ++i) {
    const auto& a = assignments.at(space.knobs()[i].id);
    auto cfg = config_from_name(a.at("config").get<std::string>());
    if (!cfg) throw std::runtime_error("point json: unknown config");
    p.assignments[i] = {*cfg, a.at("factor").get<int>()};
  }
  return p;
}

// ---------------------------------------------------------------------------
// synthetic fixtures

namespace {

long ports(const Assignment& a, long trip) {
  switch (a.config) {
    case Config::complete: return trip;
    case Config::cyclic: return a.factor;
    default: return 1;  // none, block
  }
}

long unroll_factor(const Assignment& a) { return a.config == Config::unroll ? a.factor : 1; }

long ceil_div(long a, long b) { return (a + b - 1) / b; }

EvaluationRecord make_ok(const DesignPoint& point, long cycles, long lut, long ff, long dsp,
                         long bram, const ResourceCaps& caps) {
  EvaluationRecord r;
  r.point_id = point_id(point);
  r.status = EvalStatus::ok;
  r.latency_us = static_cast<double>(cycles) * 0.01;  // 10 ns clock
  r.ratios = ResourceRatios{static_cast<double>(lut) / caps.lut,
                            static_cast<double>(ff) / caps.ff,
                            static_cast<double>(dsp) / caps.dsp,
                            static_cast<double>(bram) / caps.bram};
  return r;
}

EvaluationRecord make_failed(const DesignPoint& point, EvalStatus status) {
  EvaluationRecord r;
  r.point_id = point_id(point);
  r.status = status;
  return r;
}

const Assignment& named(const DesignSpace& space, const DesignPoint& p, std::string_view id) {
  auto idx = space.knob_index(id);
  if (!idx) throw std::runtime_error("fixture: knob space lacks knob " + std::string(id));
  return p.assignments[*idx];
}

}  // namespace

EvaluationRecord eval_s1(const DesignPoint& point, const DesignSpace& space) {
  const Assignment& l1 = named(space, point, "l1");
  const Assignment& l2 = named(space, point, "l2");
  const Assignment& a1 = named(space, point, "a1");
  const ResourceCaps caps = fixture_caps("S1");

  const long trip = 64;
  long p = ports(a1, trip);
  long e2 = std::min(unroll_factor(l2), p);

  long inner_cycles;  // one full execution of the inner loop
  switch (l2.config) {
    case Config::pipeline: inner_cycles = 74; break;
    case Config::unroll: inner_cycles = 2 * ceil_div(trip, e2); break;
    default: inner_cycles = 192; break;
  }

  long replication, total_cycles;
  if (l1.config == Config::pipeline) {
    // pipelining the outer loop needs the inner loop fully parallel
    if (e2 != trip) return make_failed(point, EvalStatus::error);
    replication = trip;
    total_cycles = 74 + inner_cycles;
  } else if (l1.config == Config::unroll) {
    replication = l1.factor * e2;
    total_cycles = ceil_div(trip, l1.factor) * inner_cycles;
  } else {
    replication = e2;
    total_cycles = trip * inner_cycles;
  }
  if (replication > 256) return make_failed(point, EvalStatus::timeout);

  long dsp = 2 * replication;
  long ff = 500 + 80 * replication + (a1.config == Config::complete ? 1152 : 0);
  long lut = 800 + 120 * replication;
  long bram;
  switch (a1.config) {
    case Config::none: bram = 1; break;
    case Config::complete: bram = 0; break;
    default: bram = a1.factor; break;  // cyclic, block
  }
  return make_ok(point, total_cycles, lut, ff, dsp, bram, caps);
}

EvaluationRecord eval_s2(const DesignPoint& point, const DesignSpace& space) {
  const Assignment& l1 = named(space, point, "l1");
  const Assignment& l2 = named(space, point, "l2");
  const Assignment& l3 = named(space, point, "l3");
  const Assignment& a1 = named(space, point, "a1");
  const Assignment& a2 = named(space, point, "a2");
  const ResourceCaps caps = fixture_caps("S2");

  const long trip = 32;
  // the inner loop reads both arrays each iteration, so the narrower
  // partitioning bounds the usable parallelism
  long e3 = std::min({unroll_factor(l3), ports(a1, trip), ports(a2, trip)});

  long c3;
  switch (l3.config) {
    case Config::pipeline: c3 = 40; break;
    case Config::unroll: c3 = 2 * ceil_div(trip, e3); break;
    default: c3 = 96; break;
  }

  long c23, rep2;
  if (l2.config == Config::pipeline) {
    if (e3 != trip) return make_failed(point, EvalStatus::error);
    c23 = 40 + c3;
    rep2 = trip;
  } else if (l2.config == Config::unroll) {
    c23 = ceil_div(trip, l2.factor) * c3;
    rep2 = l2.factor * e3;
  } else {
    c23 = trip * c3;
    rep2 = e3;
  }

  long replication, total_cycles;
  if (l1.config == Config::pipeline) {
    if (rep2 != trip * trip) return make_failed(point, EvalStatus::error);
    replication = rep2;
    total_cycles = 40 + c23;
  } else if (l1.config == Config::unroll) {
    replication = l1.factor * rep2;
    total_cycles = ceil_div(trip, l1.factor) * c23;
  } else {
    replication = rep2;
    total_cycles = trip * c23;
  }
  if (replication > 1024) return make_failed(point, EvalStatus::timeout);

  long n_complete = (a1.config == Config::complete ? 1 : 0) +
                    (a2.config == Config::complete ? 1 : 0);
  long dsp = 2 * replication;
  long ff = 400 + 60 * replication + 576 * n_complete;
  long lut = 700 + 90 * replication;
  long bram = 0;
  for (const Assignment* a : {&a1, &a2}) {
    switch (a->config) {
      case Config::none: bram += 2; break;
      case Config::complete: break;
      default: bram += a->factor; break;
    }
  }
  return make_ok(point, total_cycles, lut, ff, dsp, bram, caps);
}

std::string fixture_knob_csv(const std::string& fixture_id) {
  if (fixture_id == "S1")
    return "id,kind,group,configs,factors\n"
           "l1,loop,,none|pipeline|unroll,2|4|8|16|32|64\n"
           "l2,loop,,none|pipeline|unroll,2|4|8|16|32|64\n"
           "a1,array,,none|complete|cyclic|block,2|4|8|16|32|64\n";
  if (fixture_id == "S2")
    return "id,kind,group,configs,factors\n"
           "l1,loop,,none|pipeline|unroll,2|4|8|16|32\n"
           "l2,loop,,none|pipeline|unroll,2|4|8|16|32\n"
           "l3,loop,,none|pipeline|unroll,2|4|8|16|32\n"
           "a1,array,g0,none|complete|cyclic|block,2|4|8|16|32\n"
           "a2,array,g0,none|complete|cyclic|block,2|4|8|16|32\n";
  throw std::runtime_error("unknown fixture " + fixture_id);
}

ResourceCaps fixture_caps(const std::string& fixture_id) {
  if (fixture_id == "S1") return ResourceCaps{53200, 106400, 220, 280};
  if (fixture_id == "S2") return ResourceCaps{274080, 548160, 2520, 1824};
  throw std::runtime_error("unknown fixture " + fixture_id);
}

bool is_known_fixture(const std::string& fixture_id) {
  return fixture_id == "S1" || fixture_id == "S2";
}

void check_fixture_space(const std::string& fixture_id, const DesignSpace& space) {
  DesignSpace expected = parse_knob_file(fixture_knob_csv(fixture_id));
  auto mismatch = [&]() {
    throw std::runtime_error("knob file does not match fixture " + fixture_id +
                             " (expected its canonical knob CSV)");
  };
  if (space.size() != expected.size()) mismatch();
  for (size_t i = 0; i < space.size(); ++i) {
    const KnobSpec& a = space.knobs()[i];
    const KnobSpec& b = expected.knobs()[i];
    if (a.id != b.id || a.kind != b.kind || a.array_group != b.array_group ||
        a.allowed_configs != b.allowed_configs || a.allowed_factors != b.allowed_factors)
      mismatch();
  }
}

std::vector<std::pair<DesignPoint, EvaluationRecord>> brute_force(
    const std::string& fixture_id, const DesignSpace& space) {
  check_fixture_space(fixture_id, space);
  if (space_size(space) > 100000)
    throw std::runtime_error("brute_force: space too large (limit 1e5 points)");
  auto points = enumerate_points(space, 100000);
  std::vector<std::pair<DesignPoint, EvaluationRecord>> out;
  out.reserve(points.size());
  EvaluatorSpec spec;
  spec.kind = EvaluatorSpec::Kind::synthetic;
  spec.fixture_id = fixture_id;
  spec.available = fixture_caps(fixture_id);
  for (DesignPoint& p : points) {
    EvaluationRecord r = evaluate(spec, p, space);
    out.emplace_back(std::move(p), std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// subprocess protocol

namespace {

std::string substitute_all(std::string text, std::string_view key, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

struct ChildResult {
  bool timed_out = false;
  std::string stdout_text;
  int exit_status = -1;
  double wall_s = 0;
};

ChildResult run_with_timeout(const std::string& command, double timeout_s) {
  ChildResult result;
  int fds[2];
  if (pipe(fds) != 0) throw std::runtime_error("pipe() failed");

  auto start = std::chrono::steady_clock::now();
  pid_t child = fork();
  if (child < 0) throw std::runtime_error("fork() failed");
  if (child == 0) {
    setpgid(0, 0);  // own process group so the whole pipeline can be killed
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  bool eof = false;
  char buf[4096];
  while (!eof) {
    double remaining = timeout_s - elapsed();
    if (remaining <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    int timeout_ms = static_cast<int>(std::min(remaining * 1000.0, 50.0)) + 1;
    int rc = poll(&pfd, 1, timeout_ms);
    if (rc > 0) {
      ssize_t n = read(fds[0], buf, sizeof buf);
      if (n > 0) {
        if (result.stdout_text.size() < (1u << 20))
          result.stdout_text.append(buf, static_cast<size_t>(n));
      } else {
        eof = true;
      }
    }
  }
  close(fds[0]);
  if (result.timed_out) kill(-child, SIGKILL);
  int status = 0;
  waitpid(child, &status, 0);
  result.exit_status = status;
  result.wall_s = elapsed();
  return result;
}

}  // namespace

EvaluationRecord evaluate(const EvaluatorSpec& spec, const DesignPoint& point,
                          const DesignSpace& space) {
  auto violations = validate(space, point);
  if (!violations.empty())
    throw std::runtime_error("evaluate: invalid point: " + violations.front());

  if (spec.kind == EvaluatorSpec::Kind::synthetic) {
    if (spec.fixture_id == "S1") return eval_s1(point, space);
    if (spec.fixture_id == "S2") return eval_s2(point, space);
    throw std::runtime_error("unknown fixture " + spec.fixture_id);
  }

  char path[] = "/tmp/dse_point_XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) throw std::runtime_error("mkstemp failed");
  std::string payload = point_to_json(space, point).dump();
  if (write(fd, payload.data(), payload.size()) != static_cast<ssize_t>(payload.size())) {
    close(fd);
    unlink(path);
    throw std::runtime_error("point file write failed");
  }
  close(fd);

  ChildResult child = run_with_timeout(
      substitute_all(spec.command_template, "{point_file}", path), spec.timeout_s);
  unlink(path);

  EvaluationRecord record;
  record.point_id = point_id(point);
  record.wall_time_s = child.wall_s;
  if (child.timed_out) {
    record.status = EvalStatus::timeout;
    return record;
  }

  nlohmann::json out = nlohmann::json::parse(child.stdout_text, nullptr, false);
  record.status = EvalStatus::error;
  if (out.is_discarded() || !out.is_object()) return record;
  if (out.value("status", "") != "ok") return record;
  if (!out.contains("latency_us") || !out["latency_us"].is_number()) return record;
  for (const char* key : {"lut", "ff", "dsp", "bram"})
    if (!out.contains(key) || !out[key].is_number()) return record;

  record.status = EvalStatus::ok;
  record.latency_us = out["latency_us"].get<double>();
  record.ratios = ResourceRatios{out["lut"].get<double>() / spec.available.lut,
                                 out["ff"].get<double>() / spec.available.ff,
                                 out["dsp"].get<double>() / spec.available.dsp,
                                 out["bram"].get<double>() / spec.available.bram};
  return record;
}

// ---------------------------------------------------------------------------
// dataset

void Dataset::append(DesignPoint point, EvaluationRecord record) {
  size_t index = entries_.size();
  by_hash_[point_hash(point)].push_back(index);
  by_id_.try_emplace(record.point_id, index);
  entries_.push_back(Entry{std::move(point), std::move(record)});
}

bool Dataset::contains(const DesignPoint& point) const {
  auto it = by_hash_.find(point_hash(point));
  if (it == by_hash_.end()) return false;
  for (size_t i : it->second)
    if (entries_[i].point == point) return true;
  return false;
}

const Dataset::Entry* Dataset::find_by_id(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

}  // namespace dse
