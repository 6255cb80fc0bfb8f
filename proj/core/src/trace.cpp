#include "insitu/trace.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace insitu {

namespace {
constexpr std::array<std::string_view, 7> kLabelNames{"S", "I", "G", "A", "Se", "C", "other"};

std::string csv_escape(std::string_view field)
{
  if (field.find_first_of(",\"\n") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <class T> T parse_number(const std::string& s, std::string_view what)
{
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(fmt::format("trace: invalid {} '{}'", what, s));
  return value;
}
} // namespace

std::string_view to_string(StageLabel label)
{
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<StageLabel> parse_stage_label(std::string_view text)
{
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == text)
      return static_cast<StageLabel>(i);
  return std::nullopt;
}

std::string stage_detail(bool begin, long step)
{
  return fmt::format("{} step={}", begin ? "begin" : "end", step);
}

std::optional<StageMark> parse_stage_detail(std::string_view detail)
{
  StageMark mark;
  if (detail.starts_with("begin step=")) {
    mark.begin = true;
    detail.remove_prefix(11);
  } else if (detail.starts_with("end step=")) {
    detail.remove_prefix(9);
  } else {
    return std::nullopt;
  }
  auto [ptr, ec] = std::from_chars(detail.data(), detail.data() + detail.size(), mark.step);
  if (ec != std::errc() || ptr != detail.data() + detail.size())
    return std::nullopt;
  return mark;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& events)
{
  out << "time,actor,label,detail,seq\n";
  for (const auto& e : events)
    out << fmt::format("{:.9f},{},{},{},{}\n", e.time, e.actor, to_string(e.label), csv_escape(e.detail), e.seq);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceEvent>& events)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError(fmt::format("cannot write trace file '{}'", path.string()));
  write_trace_csv(out, events);
  if (!out)
    throw IoError(fmt::format("error while writing trace file '{}'", path.string()));
}

std::vector<TraceEvent> read_trace_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || line != "time,actor,label,detail,seq")
    throw ParseError("trace: missing or unexpected header");
  std::vector<TraceEvent> events;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto f = split_csv_line(line);
    if (f.size() != 5)
      throw ParseError(fmt::format("trace: expected 5 fields, got {}", f.size()));
    TraceEvent e;
    e.time   = parse_number<double>(f[0], "time");
    e.actor  = parse_number<ActorId>(f[1], "actor");
    auto lbl = parse_stage_label(f[2]);
    if (!lbl)
      throw ParseError(fmt::format("trace: unknown label '{}'", f[2]));
    e.label  = *lbl;
    e.detail = f[3];
    e.seq    = parse_number<std::uint64_t>(f[4], "seq");
    events.push_back(std::move(e));
  }
  return events;
}

} // namespace insitu
