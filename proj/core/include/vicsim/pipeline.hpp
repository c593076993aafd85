#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vicsim/comm.hpp"
#include "vicsim/fusion.hpp"
#include "vicsim/idapm.hpp"
#include "vicsim/loss.hpp"
#include "vicsim/metrics.hpp"
#include "vicsim/ptcm.hpp"
#include "vicsim/scenario.hpp"
#include "vicsim/sensing.hpp"

namespace vicsim {

// What the infrastructure decides to transmit. RiskIntent masks by the
// relevance heatmap; Visibility is the occupancy-confidence baseline; Full
// transmits everything; None is the ego-only lower bound.
enum class MaskPolicy { RiskIntent, Visibility, Full, None };
enum class HeatSource { Analytic, Trained };

MaskPolicy policy_from_string(const std::string& s);
const char* to_string(MaskPolicy p);
HeatSource heat_source_from_string(const std::string& s);
const char* to_string(HeatSource h);

struct RunConfig {
  // Scenario sources: explicit files win over generated suites.
  std::vector<std::string> scenario_paths;
  ScenarioTemplate tmpl{ScenarioTemplate::OccludedCrossing};
  std::uint64_t first_seed{1};
  int scenario_count{1};
  int n_agents{4};

  GridSpec grid{};
  PtcmParams ptcm{};
  LossParams loss{};

  MaskPolicy policy{MaskPolicy::RiskIntent};
  HeatSource heat_source{HeatSource::Analytic};
  std::string weights_path;

  double tau{0.1};
  // When set, the mask takes the top-k cells of the policy score per frame
  // instead of thresholding at tau; used to pin policies to one cell budget.
  std::optional<std::size_t> budget_cells;

  int block_size{4};
  int bytes_per_cell{4};
  int header_bytes{4};
  ChannelModel channel{};

  int temporal_frames{3};
  bool no_temporal{false};
  bool no_motion{false};    // zero the flow planes fed to the predictor
  bool no_velocity{false};  // drop the kinematic-risk term from relevance

  int n_rays{720};
  double sensor_range{60.0};
  int min_cells{3};
  double min_count{1.0};
  double match_iou{0.15};
  double critical_threshold{0.5};

  std::string out_dir;

  void validate() const;
};

RunConfig load_run_config(const std::string& path);

struct FrameArtifacts {
  int scenario_index{0};
  int frame{0};
  const Heatmap* gt_heat{nullptr};
  const Heatmap* pred_heat{nullptr};
  const CellMask* mask{nullptr};
  const OccupancyGrid* fused{nullptr};
  const std::vector<DetectionBox>* detections{nullptr};
};
using FrameSink = std::function<void(const FrameArtifacts&)>;

std::vector<Scenario> load_or_generate_scenarios(const RunConfig& config);

// Renders every sensor view of a scenario suite once and then evaluates any
// number of transmission configurations against them. Sweeps and
// budget-tuning loops vary only the masking/channel/detection side, so the
// expensive ray casting does not need to repeat.
class SuiteRunner {
 public:
  SuiteRunner(const RunConfig& config, std::vector<Scenario> scenarios);

  const std::vector<Scenario>& scenarios() const { return scenarios_; }

  // `config` may change policy, thresholds, budget, channel, ablation and
  // detection fields; the grid and sensing fields must match the ones the
  // views were rendered with.
  EvalReport run(const RunConfig& config, const FrameSink& sink = {}) const;

 private:
  RunConfig base_;
  std::vector<Scenario> scenarios_;
  std::vector<std::vector<SensorView>> ego_views_;    // [scenario][frame]
  std::vector<std::vector<SensorView>> infra_views_;  // [scenario][frame]
};

// Full pipeline over the given scenarios: render both sensors, score
// relevance, build the ground-truth/predicted heatmaps, mask, blockify,
// transmit, fuse, detect, match, aggregate. Throws on any internal
// invariant violation (mask not covered by blocks, fusion leaking outside
// received blocks).
EvalReport run_scenarios(const RunConfig& config, const std::vector<Scenario>& scenarios,
                         const FrameSink& sink = {});

EvalReport run(const RunConfig& config);

struct SweepRow {
  double tau{0.0};
  double comm_percent{0.0};
  double ap{0.0};
  double critical_recall{0.0};
  double corr_miou{0.0};
  double iou_error{0.0};
};

std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& taus);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Writes summary.csv, frames.csv, summary.txt and per-frame P5 images
// (ground-truth heatmap, predicted heatmap, detections over the fused grid).
// Output is byte-stable across repeated runs of the same config.
EvalReport report(const RunConfig& config, const std::string& out_dir);

void write_eval_csv(const EvalReport& report, const RunConfig& config,
                    const std::string& path);

}  // namespace vicsim
