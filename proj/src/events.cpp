#include "mtgn/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "mtgn/rng.hpp"

namespace mtgn {

namespace {

std::pair<int, int> unordered_pair(int u, int v) {
  return {std::min(u, v), std::max(u, v)};
}

}  // namespace

ParseResult parse_events(const std::string& path, std::int64_t time_unit_divisor,
                         const std::string& unit_label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_events: cannot open " + path);
  if (time_unit_divisor <= 0) {
    throw std::runtime_error("parse_events: time unit divisor must be positive");
  }

  ParseResult result;
  struct RawEvent {
    std::string u, v;
    std::int64_t t;
  };
  std::vector<RawEvent> raw;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip trailing CR from files with Windows line endings.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string su, sv, st;
    if (!(ls >> su)) continue;  // blank line
    if (su[0] == '#') continue;
    if (!(ls >> sv >> st)) {
      throw std::runtime_error("parse_events: malformed line " +
                               std::to_string(line_no) + " in " + path);
    }
    std::int64_t t;
    try {
      std::size_t pos = 0;
      t = std::stoll(st, &pos);
      if (pos != st.size()) throw std::invalid_argument(st);
    } catch (const std::exception&) {
      throw std::runtime_error("parse_events: bad timestamp on line " +
                               std::to_string(line_no) + " in " + path);
    }
    raw.push_back({std::move(su), std::move(sv), t});
  }
  if (raw.empty()) throw std::runtime_error("parse_events: no events in " + path);

  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.t < b.t; });
  const std::int64_t t0 = raw.front().t;

  // Dense ids follow first appearance in time order, so re-parsing a canonical
  // file yields the identity mapping (write-then-parse round trip).
  std::unordered_map<std::string, int> dense;
  auto id_of = [&](const std::string& s) {
    auto it = dense.find(s);
    if (it != dense.end()) return it->second;
    const int id = static_cast<int>(result.id_map.size());
    dense.emplace(s, id);
    result.id_map.push_back(s);
    return id;
  };

  result.stream.time_unit = unit_label;
  result.stream.events.reserve(raw.size());
  for (const auto& r : raw) {
    Event e;
    e.u = id_of(r.u);
    e.v = id_of(r.v);
    e.t = static_cast<double>((r.t - t0) / time_unit_divisor);
    result.stream.events.push_back(e);
  }
  result.stream.node_count = static_cast<int>(result.id_map.size());
  return result;
}

void write_events(const EventStream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_events: cannot open " + path);
  for (const auto& e : stream.events) {
    out << e.u << ' ' << e.v << ' ' << static_cast<std::int64_t>(e.t) << '\n';
  }
}

void write_id_map(const std::vector<std::string>& id_map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_id_map: cannot open " + path);
  for (std::size_t i = 0; i < id_map.size(); ++i) {
    out << id_map[i] << '\t' << i << '\n';
  }
}

SplitResult split_train_test(const EventStream& stream, double test_fraction,
                             bool dedup_test) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::runtime_error("split_train_test: test_fraction outside (0,1)");
  }
  const auto n = stream.events.size();
  std::size_t boundary = n - static_cast<std::size_t>(std::floor(test_fraction * n));
  if (boundary == n) boundary = n - 1;
  // Never split a timestamp group: shift toward train so the group tests whole.
  while (boundary > 0 && boundary < n &&
         stream.events[boundary - 1].t == stream.events[boundary].t) {
    --boundary;
  }
  if (boundary == 0) {
    throw std::runtime_error("split_train_test: no train events left after split");
  }

  SplitResult out;
  out.train.node_count = out.test.node_count = stream.node_count;
  out.train.time_unit = out.test.time_unit = stream.time_unit;
  out.train.events.assign(stream.events.begin(), stream.events.begin() + boundary);

  std::set<std::pair<int, int>> train_pairs;
  for (const auto& e : out.train.events) train_pairs.insert(unordered_pair(e.u, e.v));

  std::set<std::pair<int, int>> seen;
  std::size_t inductive = 0;
  out.test_raw = n - boundary;
  for (std::size_t i = boundary; i < n; ++i) {
    const auto& e = stream.events[i];
    const auto key = unordered_pair(e.u, e.v);
    if (dedup_test && !seen.insert(key).second) continue;
    out.test.events.push_back(e);
    if (!train_pairs.count(key)) ++inductive;
  }
  out.inductive_pct =
      out.test.events.empty()
          ? 0.0
          : 100.0 * static_cast<double>(inductive) / out.test.events.size();
  return out;
}

std::vector<TimeStep> batch_by_timestep(const EventStream& stream) {
  std::vector<TimeStep> steps;
  for (const auto& e : stream.events) {
    if (steps.empty() || steps.back().t != e.t) {
      TimeStep step;
      step.t = e.t;
      step.t_bar = steps.empty() ? e.t - 1.0 : steps.back().t;
      steps.push_back(std::move(step));
    }
    steps.back().observed.push_back(e);
  }
  return steps;
}

MaskResult mask_events(const EventStream& stream, double z, std::uint64_t seed) {
  if (!(z >= 0.0 && z < 1.0)) {
    throw std::runtime_error("mask_events: z outside [0,1)");
  }
  const auto n = stream.events.size();
  const auto n_mask = static_cast<std::size_t>(std::floor(z * static_cast<double>(n)));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_mask; ++i) {
    const auto j = i + static_cast<std::size_t>(
                           rng.uniform_int(static_cast<std::int64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<char> drop(n, 0);
  for (std::size_t i = 0; i < n_mask; ++i) drop[idx[i]] = 1;

  MaskResult out;
  out.kept.node_count = out.masked.node_count = stream.node_count;
  out.kept.time_unit = out.masked.time_unit = stream.time_unit;
  for (std::size_t i = 0; i < n; ++i) {
    (drop[i] ? out.masked : out.kept).events.push_back(stream.events[i]);
  }
  return out;
}

}  // namespace mtgn
