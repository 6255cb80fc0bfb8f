#include "insitu/errors.hpp"
#include "insitu/experiments.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace insitu {

namespace {

enum class Kind { text, integer, number, seconds, ratio };

struct Column {
  std::string_view name;
  Kind kind;
  std::variant<std::string ReportRow::*, int ReportRow::*, long ReportRow::*, double ReportRow::*> field;
};

const std::vector<Column>& columns()
{
  static const std::vector<Column> cols{
      {"name", Kind::text, &ReportRow::name},
      {"nodes", Kind::integer, &ReportRow::nodes},
      {"sim_cores", Kind::integer, &ReportRow::sim_cores},
      {"ana_cores", Kind::integer, &ReportRow::ana_cores},
      {"R", Kind::integer, &ReportRow::R},
      {"stride", Kind::integer, &ReportRow::stride},
      {"cost_scale", Kind::number, &ReportRow::cost_scale},
      {"mapping", Kind::text, &ReportRow::mapping},
      {"dedicated_nodes", Kind::integer, &ReportRow::dedicated_nodes},
      {"data_scale", Kind::number, &ReportRow::data_scale},
      {"dtl", Kind::text, &ReportRow::dtl},
      {"rho", Kind::integer, &ReportRow::rho},
      {"S", Kind::seconds, &ReportRow::S},
      {"I", Kind::seconds, &ReportRow::I},
      {"G", Kind::seconds, &ReportRow::G},
      {"A", Kind::seconds, &ReportRow::A},
      {"Se", Kind::seconds, &ReportRow::Se},
      {"C", Kind::seconds, &ReportRow::C},
      {"idle_S", Kind::seconds, &ReportRow::idle_S},
      {"idle_A", Kind::seconds, &ReportRow::idle_A},
      {"makespan_predicted", Kind::seconds, &ReportRow::makespan_predicted},
      {"makespan_simulated", Kind::seconds, &ReportRow::makespan_simulated},
      {"eta_predicted", Kind::ratio, &ReportRow::eta_predicted},
      {"eta_simulated", Kind::ratio, &ReportRow::eta_simulated},
      {"scenario", Kind::text, &ReportRow::scenario},
      {"sim_active", Kind::seconds, &ReportRow::sim_active},
      {"sim_idle", Kind::seconds, &ReportRow::sim_idle},
      {"ana_active", Kind::seconds, &ReportRow::ana_active},
      {"ana_idle", Kind::seconds, &ReportRow::ana_idle},
      {"simulation_time", Kind::seconds, &ReportRow::simulation_time},
  };
  return cols;
}

std::string csv_escape(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const ReportRow& row, const Column& c)
{
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = row.*member;
        using V       = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>)
          return csv_escape(v);
        else if constexpr (std::is_integral_v<V>)
          return fmt::format("{}", v);
        else if (c.kind == Kind::seconds)
          return fmt::format("{:.9f}", v);
        else if (c.kind == Kind::ratio)
          return fmt::format("{:.6f}", v);
        else
          return fmt::format("{}", v);
      },
      c.field);
}

template <class T>
T parse_number(std::string_view text, std::string_view column)
{
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(fmt::format("report column '{}': invalid value '{}'", column, text));
  return v;
}

void assign(ReportRow& row, const Column& c, std::string_view text)
{
  std::visit(
      [&](auto member) {
        auto& v = row.*member;
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>)
          v = std::string(text);
        else
          v = parse_number<V>(text, c.name);
      },
      c.field);
}

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else if (ch != '\r') {
      out.back() += ch;
    }
  }
  if (quoted)
    throw ParseError("unterminated quoted field in report");
  return out;
}

} // namespace

ReportFormat parse_report_format(std::string_view text)
{
  if (text == "csv")
    return ReportFormat::csv;
  if (text == "structured" || text == "json")
    return ReportFormat::structured;
  throw ParseError(fmt::format("unknown report format '{}' (expected csv or structured)", text));
}

std::vector<std::string> report_columns()
{
  std::vector<std::string> out;
  for (const auto& c : columns())
    out.emplace_back(c.name);
  return out;
}

ReportRow to_report_row(const SweepResult& r)
{
  const Scenario& s = r.scenario;
  const auto& m     = r.report;
  ReportRow row;
  row.name               = s.name;
  row.nodes              = s.n_nodes;
  row.sim_cores          = s.ratio.sim_cores_per_node;
  row.ana_cores          = s.ratio.ana_cores_per_node;
  row.R                  = s.ratio.R;
  row.stride             = s.stride;
  row.cost_scale         = s.cost_scale;
  row.mapping            = std::string(to_string(s.mapping_mode));
  row.dedicated_nodes    = s.mapping_mode == MappingMode::in_transit ? s.dedicated_nodes : 0;
  row.data_scale         = s.data_scale;
  row.dtl                = std::string(to_string(s.dtl_mode));
  row.rho                = m.rho;
  row.S                  = m.stages.S;
  row.I                  = m.stages.I;
  row.G                  = m.stages.G;
  row.A                  = m.stages.A;
  row.Se                 = m.stages.Se;
  row.C                  = m.stages.C;
  row.idle_S             = m.idle_S;
  row.idle_A             = m.idle_A;
  row.makespan_predicted = m.makespan_predicted;
  row.makespan_simulated = m.makespan_simulated;
  row.eta_predicted      = m.eta_predicted;
  row.eta_simulated      = m.eta_simulated;
  row.scenario           = std::string(to_string(m.scenario));
  row.sim_active         = r.component_times.sim_active;
  row.sim_idle           = r.component_times.sim_idle;
  row.ana_active         = r.component_times.ana_active;
  row.ana_idle           = r.component_times.ana_idle;
  row.simulation_time    = r.simulation_time;
  return row;
}

void export_report(std::ostream& out, const std::vector<SweepResult>& results, ReportFormat format)
{
  if (results.empty())
    throw std::invalid_argument("export_report: no results to export");

  if (format == ReportFormat::csv) {
    std::string line;
    for (const auto& c : columns())
      line += (line.empty() ? "" : ",") + std::string(c.name);
    out << line << '\n';
    for (const auto& r : results) {
      ReportRow row = to_report_row(r);
      line.clear();
      for (std::size_t i = 0; i < columns().size(); ++i)
        line += (i ? "," : "") + csv_cell(row, columns()[i]);
      out << line << '\n';
    }
    return;
  }

  nlohmann::ordered_json doc;
  doc["columns"] = report_columns();
  auto& rows     = doc["results"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    ReportRow row = to_report_row(r);
    nlohmann::ordered_json obj;
    for (const auto& c : columns())
      std::visit([&](auto member) { obj[std::string(c.name)] = row.*member; }, c.field);
    rows.push_back(std::move(obj));
  }
  out << doc.dump(2) << '\n';
}

void export_report(const std::filesystem::path& path, const std::vector<SweepResult>& results, ReportFormat format)
{
  std::ostringstream buffer;
  export_report(buffer, results, format);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError(fmt::format("cannot write report '{}'", path.string()));
  out << buffer.str();
  if (!out.flush())
    throw IoError(fmt::format("failed while writing report '{}'", path.string()));
}

std::vector<ReportRow> parse_report(std::string_view text, ReportFormat format)
{
  std::vector<ReportRow> rows;
  const auto& cols = columns();

  if (format == ReportFormat::csv) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line))
      throw ParseError("empty report");
    if (split_csv_line(line) != report_columns())
      throw ParseError("report header does not match the expected columns");
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty())
        continue;
      auto cells = split_csv_line(line);
      if (cells.size() != cols.size())
        throw ParseError(fmt::format("report line {}: expected {} cells, got {}", lineno, cols.size(), cells.size()));
      ReportRow row;
      for (std::size_t i = 0; i < cols.size(); ++i)
        assign(row, cols[i], cells[i]);
      rows.push_back(std::move(row));
    }
    return rows;
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid structured report: {}", e.what()));
  }
  if (!doc.contains("results") || !doc["results"].is_array())
    throw ParseError("structured report has no 'results' array");
  for (const auto& obj : doc["results"]) {
    ReportRow row;
    for (const auto& c : cols) {
      std::string key(c.name);
      if (!obj.contains(key))
        throw ParseError(fmt::format("structured report row lacks '{}'", key));
      try {
        std::visit([&](auto member) { obj.at(key).get_to(row.*member); }, c.field);
      } catch (const nlohmann::json::exception&) {
        throw ParseError(fmt::format("structured report field '{}' has the wrong type", key));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace insitu
