#pragma once

#include "insitu/trace.hpp"
#include "insitu/workflow.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace insitu {

/// Per-step stage durations in seconds, assumed constant across steps.
struct StageCosts {
  double S  = 0; // simulate
  double I  = 0; // ingest
  double G  = 0; // get
  double A  = 0; // analyze
  double Se = 0; // send metrics
  double C  = 0; // collect metrics

  /// Throws ValidationError on a negative or non-finite stage.
  void validate() const;
  StageCosts scaled(double lambda) const;
  bool operator==(const StageCosts&) const = default;
};

struct ModelInputs {
  StageCosts stages;
  long N = 1;
  long T = 1;

  long rho() const { return T > 0 ? N / T : 0; }
  void validate() const;
};

/// IA: the analytics idles (simulation is the bottleneck). IS: the simulation idles.
enum class ScenarioClass { IA, IS, idle_free };

std::string_view to_string(ScenarioClass s);
ScenarioClass parse_scenario_class(std::string_view text);

/// strict adds C to the simulation side and Se to the analytics side.
struct ModelOptions {
  bool strict = false;
};

double simulation_side(const StageCosts& s, ModelOptions o = {});
double analytics_side(const StageCosts& s, ModelOptions o = {});

ScenarioClass classify_scenario(const StageCosts& s, ModelOptions o = {});
/// Total idle time of one step, |(S+I) - (G+A)|.
double idle_time(const StageCosts& s, ModelOptions o = {});
/// rho * max(S+I, G+A).
double makespan(const ModelInputs& m, ModelOptions o = {});
/// 1 - rho * idle / makespan. Throws DegenerateInput when both sides are zero.
double efficiency(const ModelInputs& m, ModelOptions o = {});

struct EfficiencyReport {
  long rho                = 0;
  double makespan         = 0;
  double idle_per_step    = 0;
  double eta              = 1;
  ScenarioClass scenario  = ScenarioClass::idle_free;
};

EfficiencyReport evaluate(const ModelInputs& m, ModelOptions o = {});

// --- trace extraction --------------------------------------------------------------------------------------------

inline constexpr std::array<StageLabel, 6> kStageLabels{StageLabel::S,  StageLabel::I, StageLabel::G,
                                                        StageLabel::A,  StageLabel::Se, StageLabel::C};

struct StageInterval {
  bool present = false;
  double start = 0; // earliest begin over the component
  double end   = 0; // latest end over the component
};

struct StepReport {
  long step = 0;
  std::array<StageInterval, 6> intervals; // indexed like kStageLabels
  StageCosts durations;
  double idle_S = 0;
  double idle_A = 0;
};

struct ExtractedStages {
  long rho = 0;
  StageCosts steady; // mean over steps 2..rho
  std::vector<StepReport> steps;
  double max_deviation = 0; // max |x_i - mean| over stages and steps, relative to the steady period
  double steady_span   = 0; // ingest completion of step rho minus that of step 1, latest rank
  double makespan_simulated = 0;
  double eta_simulated      = 1;
  std::vector<std::string> warnings;
};

inline constexpr double kConstancyWarningThreshold = 0.05;

/// Rebuilds per-step stage durations from a workflow trace.
///
/// A stage's duration within a step is the largest per-entity busy time in that stage, so an analytics actor that
/// processes several messages per step accumulates them. Throws MalformedTrace on fewer than 3 steps, unpaired
/// begin/end events or a step missing one of S, I, G, A.
ExtractedStages extract_stages(const std::vector<TraceEvent>& trace, long rho);
ExtractedStages extract_stages(const std::vector<TraceEvent>& trace, const WorkflowConfig& cfg);

// --- report ------------------------------------------------------------------------------------------------------

struct ModelReport {
  long rho = 0;
  StageCosts stages;
  double idle_S             = 0;
  double idle_A             = 0;
  double makespan_predicted = 0;
  double makespan_simulated = 0;
  double eta_predicted      = 1;
  double eta_simulated      = 1;
  ScenarioClass scenario    = ScenarioClass::idle_free;

  bool operator==(const ModelReport&) const = default;
};

ModelReport compare_with_model(const ExtractedStages& x, ModelOptions o = {});

/// `key = value` lines in a fixed order, full precision.
std::string format_model_report(const ModelReport& r);
ModelReport parse_model_report(std::string_view text);

} // namespace insitu
