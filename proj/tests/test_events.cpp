#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "mtgn/events.hpp"
#include "mtgn/synthetic.hpp"

using namespace mtgn;

namespace {

std::string write_temp(const std::string& contents, const std::string& name) {
  const std::string path = "/tmp/mtgn_test_" + name;
  std::ofstream out(path);
  out << contents;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

EventStream make_stream(std::vector<Event> events, int node_count) {
  EventStream s;
  s.events = std::move(events);
  s.node_count = node_count;
  return s;
}

}  // namespace

TEST_CASE("parse single line rebases and remaps") {
  auto path = write_temp("a b 5\n", "single.txt");
  auto res = parse_events(path);
  REQUIRE(res.stream.events.size() == 1);
  CHECK(res.stream.events[0].u == 0);
  CHECK(res.stream.events[0].v == 1);
  CHECK(res.stream.events[0].t == 0.0);
  CHECK(res.stream.node_count == 2);
  CHECK(res.id_map == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse sorts stably and ignores comments") {
  auto path = write_temp(
      "# comment line\n"
      "x y 30\n"
      "y z 10\n"
      "x z 30\n"
      "z w 20\n",
      "sorted.txt");
  auto res = parse_events(path);
  REQUIRE(res.stream.events.size() == 4);
  CHECK(res.stream.events[0].t == 0.0);   // y z
  CHECK(res.stream.events[1].t == 10.0);  // z w
  CHECK(res.stream.events[2].t == 20.0);  // x y kept before x z (stable)
  // Dense ids follow first appearance in time order: y=0, z=1, w=2, x=3.
  CHECK(res.id_map == std::vector<std::string>{"y", "z", "w", "x"});
  CHECK(res.stream.events[2].u == 3);
  CHECK(res.stream.events[2].v == 0);
  CHECK(res.stream.events[3].u == 3);
  CHECK(res.stream.events[3].v == 1);
}

TEST_CASE("parse errors carry line numbers") {
  auto bad = write_temp("a b 1\nc d\n", "short_line.txt");
  CHECK_THROWS_WITH_AS(parse_events(bad), doctest::Contains("line 2"),
                       std::runtime_error);
  auto badts = write_temp("a b notanumber\n", "bad_ts.txt");
  CHECK_THROWS_WITH_AS(parse_events(badts), doctest::Contains("line 1"),
                       std::runtime_error);
  auto empty = write_temp("# nothing\n", "empty.txt");
  CHECK_THROWS_AS(parse_events(empty), std::runtime_error);
}

TEST_CASE("parse divides by the time unit") {
  auto path = write_temp("a b 3600\na c 10800\n", "hours.txt");
  auto res = parse_events(path, 3600, "1 hour");
  CHECK(res.stream.events[0].t == 0.0);
  CHECK(res.stream.events[1].t == 2.0);
  CHECK(res.stream.time_unit == "1 hour");
}

TEST_CASE("canonical write then parse round-trips byte for byte") {
  auto path = write_temp("n5 n1 50\nn2 n1 10\nn5 n2 50\nn9 n9 30\n", "roundtrip.txt");
  auto first = parse_events(path);
  const std::string canon = "/tmp/mtgn_test_canon.txt";
  write_events(first.stream, canon);
  auto second = parse_events(canon);
  const std::string canon2 = "/tmp/mtgn_test_canon2.txt";
  write_events(second.stream, canon2);
  CHECK(slurp(canon) == slurp(canon2));
  CHECK(!slurp(canon).empty());
}

TEST_CASE("hypertext-shaped fixture counts distinct nodes") {
  // 113 distinct attendees, hour-resolution contacts.
  std::ostringstream os;
  for (int i = 0; i < 113; ++i) {
    os << "p" << i << " p" << (i + 1) % 113 << ' ' << 3600 * (i / 7) << '\n';
  }
  auto path = write_temp(os.str(), "hypertext.txt");
  auto res = parse_events(path, 3600, "1 hour");
  CHECK(res.stream.node_count == 113);
}

TEST_CASE("split keeps earliest duplicate in test") {
  auto s = make_stream(
      {{0, 1, 0}, {2, 3, 1}, {0, 2, 2}, {1, 2, 10}, {1, 2, 12}, {2, 1, 14}}, 4);
  auto split = split_train_test(s, 0.5);
  REQUIRE(split.test.events.size() == 1);
  CHECK(split.test.events[0].t == 10.0);
  CHECK(split.test_raw == 3);
}

TEST_CASE("split reports inductive percentage") {
  auto s = make_stream({{1, 2, 0}, {1, 2, 1}, {1, 2, 5}, {3, 4, 6}}, 5);
  auto split = split_train_test(s, 0.5);
  REQUIRE(split.test.events.size() == 2);
  CHECK(split.inductive_pct == doctest::Approx(50.0));
}

TEST_CASE("split boundary moves off a timestamp group toward train") {
  auto s = make_stream({{0, 1, 0}, {0, 1, 5}, {2, 3, 5}, {4, 5, 5}}, 6);
  auto split = split_train_test(s, 0.5);
  // Cut would land inside the t=5 group; whole group goes to test.
  CHECK(split.train.events.size() == 1);
  REQUIRE(split.test.events.size() == 3);
  for (const auto& e : split.test.events) CHECK(e.t == 5.0);
}

TEST_CASE("split without dedup keeps every test event") {
  auto s = make_stream({{0, 1, 0}, {1, 2, 8}, {1, 2, 9}}, 3);
  auto split = split_train_test(s, 0.67, /*dedup_test=*/false);
  CHECK(split.test.events.size() == 2);
}

TEST_CASE("batching partitions the stream") {
  auto s = make_stream({{0, 1, 0}, {1, 2, 0}, {2, 3, 1}}, 4);
  auto steps = batch_by_timestep(s);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].observed.size() == 2);
  CHECK(steps[1].observed.size() == 1);
  CHECK(steps[0].t_bar == -1.0);
  CHECK(steps[1].t_bar == 0.0);

  std::size_t total = 0;
  for (const auto& st : steps) total += st.observed.size();
  CHECK(total == s.events.size());

  // flatten(batch(s)) == s
  std::vector<Event> flat;
  for (const auto& st : steps) {
    flat.insert(flat.end(), st.observed.begin(), st.observed.end());
  }
  REQUIRE(flat.size() == s.events.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flat[i].u == s.events[i].u);
    CHECK(flat[i].v == s.events[i].v);
    CHECK(flat[i].t == s.events[i].t);
  }
}

TEST_CASE("singleton stream gets t_bar one unit back") {
  auto steps = batch_by_timestep(make_stream({{0, 1, 7}}, 2));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].t == 7.0);
  CHECK(steps[0].t_bar == 6.0);
}

TEST_CASE("masking") {
  std::vector<Event> evs;
  for (int i = 0; i < 100; ++i) evs.push_back({i % 7, (i + 1) % 7, double(i)});
  auto s = make_stream(evs, 7);

  auto id = mask_events(s, 0.0, 1);
  CHECK(id.kept.events.size() == 100);
  CHECK(id.masked.events.empty());

  auto half = mask_events(s, 0.5, 1);
  CHECK(half.kept.events.size() == 50);
  CHECK(half.masked.events.size() == 50);

  auto again = mask_events(s, 0.5, 1);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(again.kept.events[i].t == half.kept.events[i].t);
  }
  auto other = mask_events(s, 0.5, 2);
  bool differs = false;
  for (std::size_t i = 0; i < 50; ++i) {
    differs |= other.kept.events[i].t != half.kept.events[i].t;
  }
  CHECK(differs);

  CHECK_THROWS_AS(mask_events(s, 1.0, 1), std::runtime_error);
  CHECK_THROWS_AS(mask_events(s, -0.1, 1), std::runtime_error);
}

TEST_CASE("synthetic generation is deterministic") {
  auto a = generate_synthetic(40, 800, SyntheticRegime::kPeriodicCommunities, 9);
  auto b = generate_synthetic(40, 800, SyntheticRegime::kPeriodicCommunities, 9);
  REQUIRE(a.stream.events.size() == 800);
  REQUIRE(b.stream.events.size() == 800);
  for (std::size_t i = 0; i < 800; ++i) {
    CHECK(a.stream.events[i].u == b.stream.events[i].u);
    CHECK(a.stream.events[i].v == b.stream.events[i].v);
    CHECK(a.stream.events[i].t == b.stream.events[i].t);
  }
}

TEST_CASE("synthetic mean gap tracks the configured log-normal") {
  for (auto regime :
       {SyntheticRegime::kPeriodicCommunities, SyntheticRegime::kPreferentialBursty}) {
    auto res = generate_synthetic(60, 6000, regime, 17);
    // Sample mean of per-pair inter-event gaps vs exp(mu + sigma^2/2).
    std::map<std::pair<int, int>, double> last;
    double total = 0;
    std::size_t count = 0;
    for (const auto& e : res.stream.events) {
      const auto key = std::make_pair(std::min(e.u, e.v), std::max(e.u, e.v));
      auto it = last.find(key);
      if (it != last.end()) {
        total += e.t - it->second;
        ++count;
        it->second = e.t;
      } else {
        last.emplace(key, e.t);
      }
    }
    REQUIRE(count > 1000);
    const double mean = total / static_cast<double>(count);
    CAPTURE(regime_to_string(regime));
    CHECK(std::abs(mean - res.meta.true_mean_gap) / res.meta.true_mean_gap < 0.05);
  }
}

TEST_CASE("synthetic community regime stays mostly intra-community") {
  auto res = generate_synthetic(80, 4000, SyntheticRegime::kPeriodicCommunities, 23);
  REQUIRE(res.meta.community_of.size() == 80);
  std::size_t intra = 0;
  for (const auto& e : res.stream.events) {
    if (res.meta.community_of[e.u] == res.meta.community_of[e.v]) ++intra;
  }
  CHECK(static_cast<double>(intra) / res.stream.events.size() >= 0.8);
}

TEST_CASE("synthetic rejects degenerate sizes") {
  CHECK_THROWS_AS(generate_synthetic(100, 50, SyntheticRegime::kPeriodicCommunities, 1),
                  std::runtime_error);
}

TEST_CASE("synthetic metadata serializes generator parameters") {
  auto res = generate_synthetic(24, 240, SyntheticRegime::kPeriodicCommunities, 3);
  const auto json = res.meta.to_json();
  CHECK(json.find("\"regime\"") != std::string::npos);
  CHECK(json.find("periodic-communities") != std::string::npos);
  CHECK(json.find("true_mean_gap") != std::string::npos);
}
