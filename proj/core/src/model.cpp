#include "insitu/model.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

namespace insitu {

namespace {

std::size_t stage_index(StageLabel l)
{
  return static_cast<std::size_t>(l);
}

double& stage_ref(StageCosts& s, std::size_t i)
{
  switch (i) {
  case 0: return s.S;
  case 1: return s.I;
  case 2: return s.G;
  case 3: return s.A;
  case 4: return s.Se;
  default: return s.C;
  }
}

double stage_value(const StageCosts& s, std::size_t i)
{
  return stage_ref(const_cast<StageCosts&>(s), i);
}

} // namespace

void StageCosts::validate() const
{
  for (std::size_t i = 0; i < kStageLabels.size(); ++i) {
    double v = stage_value(*this, i);
    if (!std::isfinite(v) || v < 0)
      throw ValidationError(fmt::format("stage {} must be finite and non-negative, got {}",
                                        to_string(kStageLabels[i]), v));
  }
}

StageCosts StageCosts::scaled(double lambda) const
{
  return StageCosts{S * lambda, I * lambda, G * lambda, A * lambda, Se * lambda, C * lambda};
}

void ModelInputs::validate() const
{
  stages.validate();
  if (T < 1 || N < 1)
    throw ValidationError("N and T must be >= 1");
  if (N % T != 0)
    throw ValidationError(fmt::format("T={} does not divide N={}", T, N));
}

std::string_view to_string(ScenarioClass s)
{
  switch (s) {
  case ScenarioClass::IA: return "IA";
  case ScenarioClass::IS: return "IS";
  case ScenarioClass::idle_free: return "idle-free";
  }
  return "?";
}

ScenarioClass parse_scenario_class(std::string_view text)
{
  if (text == "IA")
    return ScenarioClass::IA;
  if (text == "IS")
    return ScenarioClass::IS;
  if (text == "idle-free")
    return ScenarioClass::idle_free;
  throw ParseError(fmt::format("unknown scenario class '{}'", text));
}

double simulation_side(const StageCosts& s, ModelOptions o)
{
  return s.S + s.I + (o.strict ? s.C : 0.0);
}

double analytics_side(const StageCosts& s, ModelOptions o)
{
  return s.G + s.A + (o.strict ? s.Se : 0.0);
}

ScenarioClass classify_scenario(const StageCosts& s, ModelOptions o)
{
  const double sim = simulation_side(s, o);
  const double ana = analytics_side(s, o);
  if (sim > ana)
    return ScenarioClass::IA;
  if (ana > sim)
    return ScenarioClass::IS;
  return ScenarioClass::idle_free;
}

double idle_time(const StageCosts& s, ModelOptions o)
{
  return std::abs(simulation_side(s, o) - analytics_side(s, o));
}

double makespan(const ModelInputs& m, ModelOptions o)
{
  m.validate();
  return static_cast<double>(m.rho()) * std::max(simulation_side(m.stages, o), analytics_side(m.stages, o));
}

double efficiency(const ModelInputs& m, ModelOptions o)
{
  m.validate();
  const double longest = std::max(simulation_side(m.stages, o), analytics_side(m.stages, o));
  if (longest <= 0)
    throw DegenerateInput("efficiency is undefined when every stage is zero");
  return 1.0 - idle_time(m.stages, o) / longest;
}

EfficiencyReport evaluate(const ModelInputs& m, ModelOptions o)
{
  EfficiencyReport r;
  r.rho           = m.rho();
  r.makespan      = makespan(m, o);
  r.idle_per_step = idle_time(m.stages, o);
  r.eta           = efficiency(m, o);
  r.scenario      = classify_scenario(m.stages, o);
  return r;
}

ExtractedStages extract_stages(const std::vector<TraceEvent>& trace, long rho)
{
  if (rho < 3)
    throw MalformedTrace(fmt::format("insufficient steps: need at least 3, got {}", rho));

  std::vector<const TraceEvent*> events;
  events.reserve(trace.size());
  for (const auto& e : trace)
    if (e.label != StageLabel::other)
      events.push_back(&e);
  std::stable_sort(events.begin(), events.end(), [](const TraceEvent* a, const TraceEvent* b) {
    return std::tie(a->time, a->seq) < std::tie(b->time, b->seq);
  });

  using Key = std::tuple<ActorId, std::size_t, long>; // actor, stage, step
  std::map<Key, double> open;
  std::map<Key, double> busy;
  ExtractedStages x;
  x.rho = rho;
  x.steps.resize(static_cast<std::size_t>(rho));
  for (long i = 0; i < rho; ++i)
    x.steps[static_cast<std::size_t>(i)].step = i + 1;

  for (const TraceEvent* e : events) {
    auto mark = parse_stage_detail(e->detail);
    if (!mark)
      throw MalformedTrace(fmt::format("stage event with unreadable detail '{}' at t={}", e->detail, e->time));
    if (mark->step < 1 || mark->step > rho)
      throw MalformedTrace(fmt::format("stage event for step {} outside 1..{}", mark->step, rho));
    const std::size_t s = stage_index(e->label);
    Key key{e->actor, s, mark->step};
    StageInterval& iv = x.steps[static_cast<std::size_t>(mark->step - 1)].intervals[s];
    if (mark->begin) {
      if (!open.emplace(key, e->time).second)
        throw MalformedTrace(fmt::format("actor {} opens {} step {} twice", e->actor, to_string(e->label), mark->step));
      iv.start   = iv.present ? std::min(iv.start, e->time) : e->time;
      iv.end     = iv.present ? iv.end : e->time;
      iv.present = true;
    } else {
      auto it = open.find(key);
      if (it == open.end())
        throw MalformedTrace(fmt::format("unpaired end of {} step {} for actor {}", to_string(e->label), mark->step,
                                         e->actor));
      busy[key] += e->time - it->second;
      open.erase(it);
      iv.end = std::max(iv.end, e->time);
    }
  }
  if (!open.empty()) {
    const auto& [actor, s, step] = open.begin()->first;
    throw MalformedTrace(fmt::format("unpaired begin of {} step {} for actor {}", to_string(kStageLabels[s]), step,
                                     actor));
  }

  for (const auto& [key, seconds] : busy) {
    const auto& [actor, s, step] = key;
    double& d = stage_ref(x.steps[static_cast<std::size_t>(step - 1)].durations, s);
    d         = std::max(d, seconds);
  }

  for (auto& st : x.steps) {
    for (StageLabel l : {StageLabel::S, StageLabel::I, StageLabel::G, StageLabel::A})
      if (!st.intervals[stage_index(l)].present)
        throw MalformedTrace(fmt::format("step {} has no {} stage", st.step, to_string(l)));
    const double sim = simulation_side(st.durations);
    const double ana = analytics_side(st.durations);
    st.idle_S        = std::max(0.0, ana - sim);
    st.idle_A        = std::max(0.0, sim - ana);
  }

  const double n = static_cast<double>(rho - 1);
  for (std::size_t s = 0; s < kStageLabels.size(); ++s) {
    double sum = 0;
    for (long i = 1; i < rho; ++i)
      sum += stage_value(x.steps[static_cast<std::size_t>(i)].durations, s);
    stage_ref(x.steady, s) = sum / n;
  }

  const double period = std::max(simulation_side(x.steady), analytics_side(x.steady));
  if (period > 0) {
    for (std::size_t s = 0; s < kStageLabels.size(); ++s)
      for (long i = 1; i < rho; ++i) {
        double dev = std::abs(stage_value(x.steps[static_cast<std::size_t>(i)].durations, s) - stage_value(x.steady, s));
        x.max_deviation = std::max(x.max_deviation, dev / period);
      }
  }
  if (x.max_deviation > kConstancyWarningThreshold)
    x.warnings.push_back(fmt::format("stage durations vary by up to {:.1f}% of the step period across steps",
                                     100.0 * x.max_deviation));

  const auto& first = x.steps.front();
  const auto& last  = x.steps.back();
  const std::size_t iI = stage_index(StageLabel::I);
  x.steady_span        = last.intervals[iI].end - first.intervals[iI].end;

  double end = 0;
  for (const auto& iv : last.intervals)
    if (iv.present)
      end = std::max(end, iv.end);
  x.makespan_simulated = end - first.intervals[stage_index(StageLabel::S)].start;

  const double measured_period = x.steady_span / n;
  const double shorter         = std::min(simulation_side(x.steady), analytics_side(x.steady));
  x.eta_simulated              = measured_period > 0 ? shorter / measured_period : 1.0;
  return x;
}

ExtractedStages extract_stages(const std::vector<TraceEvent>& trace, const WorkflowConfig& cfg)
{
  return extract_stages(trace, cfg.steps());
}

ModelReport compare_with_model(const ExtractedStages& x, ModelOptions o)
{
  ModelInputs in{x.steady, x.rho, 1};
  ModelReport r;
  r.rho                = x.rho;
  r.stages             = x.steady;
  const double sim     = simulation_side(x.steady, o);
  const double ana     = analytics_side(x.steady, o);
  r.idle_S             = std::max(0.0, ana - sim);
  r.idle_A             = std::max(0.0, sim - ana);
  r.makespan_predicted = makespan(in, o);
  r.makespan_simulated = x.makespan_simulated;
  r.eta_predicted      = efficiency(in, o);
  r.eta_simulated      = x.eta_simulated;
  r.scenario           = classify_scenario(x.steady, o);
  return r;
}

namespace {

const std::array<std::string_view, 14> kReportKeys{"rho",    "S",      "I",
                                                   "G",      "A",      "Se",
                                                   "C",      "idle_S", "idle_A",
                                                   "makespan_predicted", "makespan_simulated", "eta_predicted",
                                                   "eta_simulated",      "scenario"};

double parse_double(std::string_view key, std::string_view text)
{
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(fmt::format("report field '{}': not a number: '{}'", key, text));
  return v;
}

} // namespace

std::string format_model_report(const ModelReport& r)
{
  std::string out;
  auto num = [&out](std::string_view key, double v) { out += fmt::format("{} = {:.17g}\n", key, v); };
  out += fmt::format("rho = {}\n", r.rho);
  num("S", r.stages.S);
  num("I", r.stages.I);
  num("G", r.stages.G);
  num("A", r.stages.A);
  num("Se", r.stages.Se);
  num("C", r.stages.C);
  num("idle_S", r.idle_S);
  num("idle_A", r.idle_A);
  num("makespan_predicted", r.makespan_predicted);
  num("makespan_simulated", r.makespan_simulated);
  num("eta_predicted", r.eta_predicted);
  num("eta_simulated", r.eta_simulated);
  out += fmt::format("scenario = {}\n", to_string(r.scenario));
  return out;
}

ModelReport parse_model_report(std::string_view text)
{
  std::map<std::string, std::string, std::less<>> fields;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(fmt::format("report line without '=': '{}'", line));
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (auto key : kReportKeys)
    if (!fields.count(key))
      throw ParseError(fmt::format("report is missing field '{}'", key));

  auto get = [&](std::string_view key) { return parse_double(key, fields.find(key)->second); };
  ModelReport r;
  r.rho                = static_cast<long>(get("rho"));
  r.stages             = StageCosts{get("S"), get("I"), get("G"), get("A"), get("Se"), get("C")};
  r.idle_S             = get("idle_S");
  r.idle_A             = get("idle_A");
  r.makespan_predicted = get("makespan_predicted");
  r.makespan_simulated = get("makespan_simulated");
  r.eta_predicted      = get("eta_predicted");
  r.eta_simulated      = get("eta_simulated");
  r.scenario           = parse_scenario_class(fields.find("scenario")->second);
  return r;
}

} // namespace insitu
