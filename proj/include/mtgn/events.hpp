#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtgn {

enum class EventKind { kObserved, kMissing };

/// One timestamped undirected interaction. Observed events carry integral
/// timestamps in dataset units; generated missing events live strictly inside
/// an inter-observation window, so their time is fractional.
struct Event {
  int u = 0;
  int v = 0;
  double t = 0.0;
  EventKind kind = EventKind::kObserved;
};

struct EventStream {
  std::vector<Event> events;  // nondecreasing timestamps
  int node_count = 0;
  std::string time_unit = "1 unit";
};

/// All concurrent observed events sharing one timestamp, plus the missing
/// events generated for the window (t_bar, t).
struct TimeStep {
  double t = 0.0;
  double t_bar = 0.0;
  std::vector<Event> observed;
  std::vector<Event> missing;
};

struct ParseResult {
  EventStream stream;
  std::vector<std::string> id_map;  // dense id -> raw id, first-appearance order
};

/// Reads a whitespace-separated "src dst timestamp" edge list. Lines starting
/// with '#' are ignored. Raw ids may be arbitrary tokens; they are remapped
/// densely in order of first appearance. Events are stably sorted by time,
/// rebased so the earliest timestamp is 0, then floor-divided by
/// `time_unit_divisor`.
ParseResult parse_events(const std::string& path, std::int64_t time_unit_divisor = 1,
                         const std::string& unit_label = "1 unit");

/// Canonical normalized form: one "u v t" line per event, dense ids.
void write_events(const EventStream& stream, const std::string& path);
void write_id_map(const std::vector<std::string>& id_map, const std::string& path);

struct SplitResult {
  EventStream train;
  EventStream test;          // deduplicated unless disabled
  std::size_t test_raw = 0;  // size before dedup
  double inductive_pct = 0.0;
};

/// Chronological split. If the cut lands inside a timestamp group the
/// boundary moves to the group edge on the train side, so the whole group
/// tests. In the test set only the earliest event per unordered node pair is
/// kept (disable with dedup_test=false).
SplitResult split_train_test(const EventStream& stream, double test_fraction,
                             bool dedup_test = true);

/// One step per distinct timestamp; t_bar is the previous step's timestamp
/// (first step: t - 1). Missing lists start empty.
std::vector<TimeStep> batch_by_timestep(const EventStream& stream);

struct MaskResult {
  EventStream kept;
  EventStream masked;  // diagnostics only, never trained on
};

/// Uniformly removes floor(z * |E|) events, deterministic under seed.
MaskResult mask_events(const EventStream& stream, double z, std::uint64_t seed);

}  // namespace mtgn
