#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace insitu {

using ActorId = std::uint64_t;

/// Workflow stage tags: Simulate, Ingest, Get, Analyze, Send, Collect.
enum class StageLabel { S, I, G, A, Se, C, other };

std::string_view to_string(StageLabel label);
std::optional<StageLabel> parse_stage_label(std::string_view text);

struct TraceEvent {
  double time = 0;
  ActorId actor = 0;
  StageLabel label = StageLabel::other;
  std::string detail;
  std::uint64_t seq = 0;

  bool operator==(const TraceEvent&) const = default;
};

/// Stage-boundary details are written as "<begin|end> step=<i>"; helpers keep producers and parsers in sync.
std::string stage_detail(bool begin, long step);

struct StageMark {
  bool begin = false;
  long step  = 0;
};
/// Parses a detail produced by stage_detail(); anything else yields nullopt.
std::optional<StageMark> parse_stage_detail(std::string_view detail);

/// CSV with header `time,actor,label,detail,seq`, times with 9 decimals.
void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& events);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace_csv(std::istream& in);

} // namespace insitu
