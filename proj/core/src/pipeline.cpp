#include "vicsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>

#include <json.hpp>

namespace vicsim {

MaskPolicy policy_from_string(const std::string& s) {
  if (s == "risk_intent") return MaskPolicy::RiskIntent;
  if (s == "visibility") return MaskPolicy::Visibility;
  if (s == "full") return MaskPolicy::Full;
  if (s == "none") return MaskPolicy::None;
  throw std::invalid_argument("unknown mask policy '" + s + "'");
}

const char* to_string(MaskPolicy p) {
  switch (p) {
    case MaskPolicy::RiskIntent:
      return "risk_intent";
    case MaskPolicy::Visibility:
      return "visibility";
    case MaskPolicy::Full:
      return "full";
    case MaskPolicy::None:
      return "none";
  }
  return "risk_intent";
}

HeatSource heat_source_from_string(const std::string& s) {
  if (s == "analytic") return HeatSource::Analytic;
  if (s == "trained") return HeatSource::Trained;
  throw std::invalid_argument("unknown heat source '" + s + "'");
}

const char* to_string(HeatSource h) {
  return h == HeatSource::Analytic ? "analytic" : "trained";
}

void RunConfig::validate() const {
  grid.validate();
  ptcm.validate();
  loss.validate();
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("RunConfig: tau must be non-negative");
  }
  if (scenario_paths.empty() && scenario_count < 1) {
    throw std::invalid_argument("RunConfig: need scenario files or a positive count");
  }
  if (heat_source == HeatSource::Trained && weights_path.empty()) {
    throw std::invalid_argument("RunConfig: trained heat source needs weights_path");
  }
  if (!(critical_threshold > 0.0 && critical_threshold < 1.0)) {
    throw std::invalid_argument("RunConfig: critical_threshold must be in (0, 1)");
  }
  if (temporal_frames < 1) {
    throw std::invalid_argument("RunConfig: temporal_frames must be >= 1");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("load_run_config: cannot open " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_run_config: " + path + ": " + e.what());
  }
  RunConfig c;
  if (j.contains("scenarios")) {
    for (const auto& p : j.at("scenarios")) {
      c.scenario_paths.push_back(p.get<std::string>());
    }
  }
  if (j.contains("template")) c.tmpl = template_from_string(j.at("template"));
  c.first_seed = j.value("first_seed", c.first_seed);
  c.scenario_count = j.value("count", c.scenario_count);
  c.n_agents = j.value("agents", c.n_agents);
  if (j.contains("policy")) c.policy = policy_from_string(j.at("policy"));
  if (j.contains("heat_source")) c.heat_source = heat_source_from_string(j.at("heat_source"));
  c.weights_path = j.value("weights", c.weights_path);
  c.tau = j.value("tau", c.tau);
  if (j.contains("budget_cells")) c.budget_cells = j.at("budget_cells").get<std::size_t>();
  c.block_size = j.value("block_size", c.block_size);
  c.bytes_per_cell = j.value("bytes_per_cell", c.bytes_per_cell);
  c.header_bytes = j.value("header_bytes", c.header_bytes);
  c.channel.drop_probability = j.value("drop_probability", c.channel.drop_probability);
  c.channel.seed = j.value("channel_seed", c.channel.seed);
  c.temporal_frames = j.value("temporal_frames", c.temporal_frames);
  c.no_temporal = j.value("no_temporal", c.no_temporal);
  c.no_motion = j.value("no_motion", c.no_motion);
  c.no_velocity = j.value("no_velocity", c.no_velocity);
  c.n_rays = j.value("n_rays", c.n_rays);
  c.sensor_range = j.value("sensor_range", c.sensor_range);
  c.min_cells = j.value("min_cells", c.min_cells);
  c.min_count = j.value("min_count", c.min_count);
  c.match_iou = j.value("match_iou", c.match_iou);
  c.critical_threshold = j.value("critical_threshold", c.critical_threshold);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("ptcm")) {
    const auto& p = j.at("ptcm");
    c.ptcm.d_lower = p.value("d_lower", c.ptcm.d_lower);
    c.ptcm.d_upper = p.value("d_upper", c.ptcm.d_upper);
    c.ptcm.lambda_traj = p.value("lambda_traj", c.ptcm.lambda_traj);
    c.ptcm.horizon = p.value("horizon", c.ptcm.horizon);
    c.ptcm.dt = p.value("dt", c.ptcm.dt);
    c.ptcm.v_max = p.value("v_max", c.ptcm.v_max);
    c.ptcm.r_min = p.value("r_min", c.ptcm.r_min);
    c.ptcm.r_max = p.value("r_max", c.ptcm.r_max);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    c.loss.alpha_under = l.value("alpha_under", c.loss.alpha_under);
    c.loss.alpha_over = l.value("alpha_over", c.loss.alpha_over);
    c.loss.gamma1 = l.value("gamma1", c.loss.gamma1);
    c.loss.gamma2 = l.value("gamma2", c.loss.gamma2);
    c.loss.epsilon = l.value("epsilon", c.loss.epsilon);
    if (l.contains("variant")) c.loss.variant = loss_variant_from_string(l.at("variant"));
  }
  return c;
}

std::vector<Scenario> load_or_generate_scenarios(const RunConfig& config) {
  std::vector<Scenario> out;
  if (!config.scenario_paths.empty()) {
    for (const auto& p : config.scenario_paths) {
      out.push_back(load_scenario(p));
    }
    return out;
  }
  out.reserve(config.scenario_count);
  for (int i = 0; i < config.scenario_count; ++i) {
    out.push_back(generate_scenario(config.tmpl,
                                    config.first_seed + static_cast<std::uint64_t>(i),
                                    config.n_agents));
  }
  return out;
}

namespace {

Heatmap normalized_occupancy(const OccupancyGrid& occ) {
  Heatmap h(occ.spec(), 0.0);
  double max_v = 0.0;
  for (double v : occ.cells()) {
    max_v = std::max(max_v, v);
  }
  if (max_v > 0.0) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      h.cells()[i] = occ.cells()[i] / max_v;
    }
  }
  return h;
}

// Sent blocks must cover the mask; fusion must leave cells outside the
// *delivered* blocks untouched (the channel may have dropped some).
void check_invariants(const CellMask& mask, const FeatureBlockSet& sent,
                      const FeatureBlockSet& delivered, const OccupancyGrid& ego,
                      const OccupancyGrid& fused, int block_size) {
  const int block_cols = mask.cols() / block_size;
  const std::size_t n_blocks =
      static_cast<std::size_t>(mask.rows() / block_size) * block_cols;
  std::vector<std::uint8_t> sent_cover(n_blocks, 0);
  std::vector<std::uint8_t> delivered_cover(n_blocks, 0);
  for (const auto& b : sent.blocks) {
    sent_cover[static_cast<std::size_t>(b.block_row) * block_cols + b.block_col] = 1;
  }
  for (const auto& b : delivered.blocks) {
    delivered_cover[static_cast<std::size_t>(b.block_row) * block_cols + b.block_col] =
        1;
  }
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const std::size_t block =
          static_cast<std::size_t>(r / block_size) * block_cols + c / block_size;
      if (mask.at(r, c) != 0 && sent_cover[block] == 0) {
        throw std::runtime_error("invariant violated: masked cell outside every block");
      }
      if (delivered_cover[block] == 0 && fused.at(r, c) != ego.at(r, c)) {
        throw std::runtime_error(
            "invariant violated: fusion changed a cell outside received blocks");
      }
    }
  }
}

}  // namespace

SuiteRunner::SuiteRunner(const RunConfig& config, std::vector<Scenario> scenarios)
    : base_(config), scenarios_(std::move(scenarios)) {
  base_.validate();
  ego_views_.reserve(scenarios_.size());
  infra_views_.reserve(scenarios_.size());
  for (const auto& scenario : scenarios_) {
    std::vector<SensorView> ego, infra;
    ego.reserve(scenario.frames);
    infra.reserve(scenario.frames);
    for (int f = 0; f < scenario.frames; ++f) {
      ego.push_back(render_view(scenario, f, SensorKind::Ego, base_.grid, base_.n_rays,
                                base_.sensor_range));
      infra.push_back(render_view(scenario, f, SensorKind::Infra, base_.grid,
                                  base_.n_rays, base_.sensor_range));
    }
    ego_views_.push_back(std::move(ego));
    infra_views_.push_back(std::move(infra));
  }
}

EvalReport SuiteRunner::run(const RunConfig& config, const FrameSink& sink) const {
  config.validate();
  if (!(config.grid == base_.grid) || config.n_rays != base_.n_rays ||
      config.sensor_range != base_.sensor_range) {
    throw std::invalid_argument(
        "SuiteRunner: grid/sensing fields differ from the rendered views");
  }
  HeatmapPredictor predictor;
  if (config.heat_source == HeatSource::Trained) {
    predictor = load_predictor(config.weights_path);
  }

  EvalReport eval;
  std::vector<RankedDetection> ap_records;
  std::vector<CriticalOutcome> critical;
  std::uint64_t order_key = 0;
  int gt_total = 0;
  double corr_sum = 0.0;
  double err_sum = 0.0;

  for (std::size_t si = 0; si < scenarios_.size(); ++si) {
    const Scenario& scenario = scenarios_[si];
    const int horizon = config.ptcm.horizon;
    const int first_eval = 1;
    const int last_eval = scenario.frames - 1 - horizon;
    if (last_eval < first_eval) {
      throw std::invalid_argument("run: scenario " + std::to_string(si) +
                                  " too short for the configured horizon");
    }

    const std::vector<SensorView>& ego_views = ego_views_[si];
    const std::vector<SensorView>& infra_views = infra_views_[si];
    const int window = config.no_temporal ? 1 : config.temporal_frames;
    for (int f = first_eval; f <= last_eval; ++f) {
      const int w0 = std::max(0, f - window + 1);
      const OccupancyGrid ego_acc = accumulate_temporal(
          std::span<const SensorView>(ego_views.data() + w0, f - w0 + 1));
      const OccupancyGrid infra_acc = accumulate_temporal(
          std::span<const SensorView>(infra_views.data() + w0, f - w0 + 1));

      auto relevances = relevance_all(scenario, f, config.ptcm);
      if (config.no_velocity) {
        for (auto& r : relevances) {
          r.risk_score = 0.0;
          r.relevance = std::min(r.traj_score, 1.0);
        }
      }
      const Heatmap gt_heat =
          render_gt_heatmap(scenario, f, relevances, config.grid, horizon);

      Heatmap pred_heat;
      if (config.heat_source == HeatSource::Analytic) {
        pred_heat = gt_heat;
      } else {
        MotionFeatureStack feats =
            rasterize_motion_features(scenario, f, config.grid, scenario.ego_intent);
        if (config.no_motion) {
          feats.flow_x.fill(0.0);
          feats.flow_y.fill(0.0);
        }
        pred_heat = predictor.forward(feats);
      }

      // Mask per policy, then blockify / transmit / fuse.
      CellMask mask(config.grid, 0);
      switch (config.policy) {
        case MaskPolicy::None:
          break;
        case MaskPolicy::Full:
          mask.fill(1);
          break;
        case MaskPolicy::RiskIntent:
          mask = config.budget_cells ? top_k_mask(pred_heat, *config.budget_cells)
                                     : build_mask(pred_heat, config.tau);
          break;
        case MaskPolicy::Visibility: {
          const Heatmap conf = normalized_occupancy(infra_acc);
          mask = config.budget_cells ? top_k_mask(conf, *config.budget_cells)
                                     : build_mask(conf, config.tau);
          break;
        }
      }

      FeatureBlockSet blocks{config.block_size, config.grid, {}};
      OccupancyGrid fused = ego_acc;
      CommStats stats = comm_volume(blocks, config.bytes_per_cell, config.header_bytes);
      if (config.policy != MaskPolicy::None) {
        blocks = blockify(mask, infra_acc, config.block_size);
        stats = comm_volume(blocks, config.bytes_per_cell, config.header_bytes);
        const FeatureBlockSet delivered = transmit(blocks, config.channel);
        fused = fuse(ego_acc, delivered);
        check_invariants(mask, blocks, delivered, ego_acc, fused, config.block_size);
      }

      auto detections = detect(fused, config.min_cells, config.min_count);

      // The ego knows its own pose; silhouettes of itself inside received
      // data are suppressed rather than reported as objects.
      OrientedBox ego_box = scenario.ego().footprint_at(f);
      ego_box.half_length += 1.0;
      ego_box.half_width += 1.0;
      detections.erase(std::remove_if(detections.begin(), detections.end(),
                                      [&](const DetectionBox& b) {
                                        return ego_box.contains(b.center);
                                      }),
                       detections.end());

      std::vector<GtBox> gt_boxes;
      for (const auto& a : scenario.agents) {
        if (a.state.id == scenario.ego_id) {
          continue;
        }
        gt_boxes.push_back({a.state.id, a.footprint_at(f).aabb()});
      }
      match_detections(detections, gt_boxes, config.match_iou);

      int matched_count = 0;
      for (const auto& d : detections) {
        ap_records.push_back({d.confidence, d.matched_gt.has_value(), order_key++});
        matched_count += d.matched_gt.has_value();
      }
      gt_total += static_cast<int>(gt_boxes.size());

      int crit_total = 0;
      int crit_matched = 0;
      for (const auto& r : relevances) {
        bool matched = false;
        for (const auto& d : detections) {
          if (d.matched_gt && *d.matched_gt == r.target_id) {
            matched = true;
            break;
          }
        }
        critical.push_back({r.relevance, matched});
        if (r.relevance >= config.critical_threshold) {
          ++crit_total;
          crit_matched += matched;
        }
      }

      FrameStats fs;
      fs.scenario_index = static_cast<int>(si);
      fs.frame = f;
      fs.corr_miou = corr_miou(pred_heat, gt_heat, config.tau);
      fs.iou_error = iou_error(pred_heat, gt_heat, config.tau);
      fs.gt_count = static_cast<int>(gt_boxes.size());
      fs.detection_count = static_cast<int>(detections.size());
      fs.matched_count = matched_count;
      fs.critical_total = crit_total;
      fs.critical_matched = crit_matched;
      fs.comm = stats;
      corr_sum += fs.corr_miou;
      err_sum += fs.iou_error;
      eval.frames.push_back(fs);

      if (sink) {
        FrameArtifacts art;
        art.scenario_index = static_cast<int>(si);
        art.frame = f;
        art.gt_heat = &gt_heat;
        art.pred_heat = &pred_heat;
        art.mask = &mask;
        art.fused = &fused;
        art.detections = &detections;
        sink(art);
      }
    }
  }

  const auto n_frames = static_cast<double>(eval.frames.size());
  eval.corr_miou = n_frames > 0 ? corr_sum / n_frames : 0.0;
  eval.iou_error = n_frames > 0 ? err_sum / n_frames : 0.0;
  eval.ap = gt_total > 0 ? average_precision(ap_records, gt_total) : 0.0;
  eval.critical_recall = critical_recall(critical, config.critical_threshold);

  CommStats total;
  for (const auto& fs : eval.frames) {
    total.cells_sent += fs.comm.cells_sent;
    total.cells_total += fs.comm.cells_total;
    total.bytes_sent += fs.comm.bytes_sent;
  }
  if (total.bytes_sent > 0) {
    total.volume_log2 = std::log2(static_cast<double>(total.bytes_sent) * 8.0);
  }
  total.percent_of_full =
      total.cells_total > 0
          ? 100.0 * static_cast<double>(total.cells_sent) / total.cells_total
          : 0.0;
  eval.comm = total;
  return eval;
}

EvalReport run_scenarios(const RunConfig& config, const std::vector<Scenario>& scenarios,
                         const FrameSink& sink) {
  return SuiteRunner(config, scenarios).run(config, sink);
}

EvalReport run(const RunConfig& config) {
  return run_scenarios(config, load_or_generate_scenarios(config));
}

std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& taus) {
  if (taus.empty()) {
    throw std::invalid_argument("sweep: need at least one tau");
  }
  const SuiteRunner runner(config, load_or_generate_scenarios(config));
  std::vector<SweepRow> rows;
  rows.reserve(taus.size());
  for (double tau : taus) {
    RunConfig c = config;
    c.tau = tau;
    const EvalReport r = runner.run(c);
    rows.push_back({tau, r.comm.percent_of_full, r.ap, r.critical_recall, r.corr_miou,
                    r.iou_error});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_sweep_csv: cannot open " + path);
  }
  out << "tau,comm_percent,ap,critical_recall,corr_miou,iou_error\n";
  for (const auto& r : rows) {
    out << fmt(r.tau) << "," << fmt(r.comm_percent) << "," << fmt(r.ap) << ","
        << fmt(r.critical_recall) << "," << fmt(r.corr_miou) << "," << fmt(r.iou_error)
        << "\n";
  }
}

void write_eval_csv(const EvalReport& report, const RunConfig& config,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_eval_csv: cannot open " + path);
  }
  out << "policy,heat_source,tau,corr_miou,iou_error,ap,critical_recall,"
         "cells_sent,cells_total,comm_percent,bytes_sent,volume_log2\n";
  out << to_string(config.policy) << "," << to_string(config.heat_source) << ","
      << fmt(config.tau) << "," << fmt(report.corr_miou) << ","
      << fmt(report.iou_error) << "," << fmt(report.ap) << ","
      << fmt(report.critical_recall) << "," << report.comm.cells_sent << ","
      << report.comm.cells_total << "," << fmt(report.comm.percent_of_full) << ","
      << report.comm.bytes_sent << ","
      << (report.comm.volume_log2 ? fmt(*report.comm.volume_log2) : "") << "\n";
}

namespace {

void write_frames_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("report: cannot open " + path);
  }
  out << "scenario,frame,corr_miou,iou_error,gt,detections,matched,"
         "critical_total,critical_matched,cells_sent,comm_percent\n";
  for (const auto& f : report.frames) {
    out << f.scenario_index << "," << f.frame << "," << fmt(f.corr_miou) << ","
        << fmt(f.iou_error) << "," << f.gt_count << "," << f.detection_count << ","
        << f.matched_count << "," << f.critical_total << "," << f.critical_matched
        << "," << f.comm.cells_sent << "," << fmt(f.comm.percent_of_full) << "\n";
  }
}

void append_detections_csv(std::ofstream& out, int scenario_index, int frame,
                           const std::vector<DetectionBox>& detections) {
  char buf[256];
  for (const auto& d : detections) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,", scenario_index,
                  frame, d.center.x, d.center.y, d.half_x, d.half_y, d.confidence);
    out << buf;
    if (d.matched_gt) {
      out << *d.matched_gt;
    }
    out << "\n";
  }
}

Heatmap detections_image(const OccupancyGrid& fused,
                         const std::vector<DetectionBox>& detections) {
  Heatmap img(fused.spec(), 0.0);
  double max_v = 0.0;
  for (double v : fused.cells()) {
    max_v = std::max(max_v, v);
  }
  if (max_v > 0.0) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      img.cells()[i] = 0.6 * fused.cells()[i] / max_v;
    }
  }
  const GridSpec& spec = fused.spec();
  for (const auto& d : detections) {
    const int c0 = std::max(
        0, static_cast<int>(std::floor((d.center.x - d.half_x - spec.x_min) /
                                       spec.cell_size)));
    const int c1 = std::min(
        spec.cols() - 1, static_cast<int>(std::floor((d.center.x + d.half_x -
                                                      spec.x_min) /
                                                     spec.cell_size)));
    const int r0 = std::max(
        0, static_cast<int>(std::floor((d.center.y - d.half_y - spec.y_min) /
                                       spec.cell_size)));
    const int r1 = std::min(
        spec.rows() - 1, static_cast<int>(std::floor((d.center.y + d.half_y -
                                                      spec.y_min) /
                                                     spec.cell_size)));
    for (int c = c0; c <= c1; ++c) {
      img.at(r0, c) = 1.0;
      img.at(r1, c) = 1.0;
    }
    for (int r = r0; r <= r1; ++r) {
      img.at(r, c0) = 1.0;
      img.at(r, c1) = 1.0;
    }
  }
  return img;
}

}  // namespace

EvalReport report(const RunConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto scenarios = load_or_generate_scenarios(config);

  std::ofstream det_csv(out_dir + "/detections.csv");
  if (!det_csv) {
    throw std::runtime_error("report: cannot open " + out_dir + "/detections.csv");
  }
  det_csv << "scenario,frame,center_x,center_y,ext_x,ext_y,confidence,matched_gt\n";

  FrameSink sink = [&](const FrameArtifacts& art) {
    char stem[64];
    std::snprintf(stem, sizeof(stem), "s%02d_f%02d", art.scenario_index, art.frame);
    const std::string base = out_dir + "/" + stem;
    write_pgm(*art.gt_heat, base + "_gt.pgm");
    write_pgm(*art.pred_heat, base + "_pred.pgm");
    write_pgm(detections_image(*art.fused, *art.detections), base + "_det.pgm");
    append_detections_csv(det_csv, art.scenario_index, art.frame, *art.detections);
  };
  const EvalReport eval = run_scenarios(config, scenarios, sink);

  write_eval_csv(eval, config, out_dir + "/summary.csv");
  write_frames_csv(eval, out_dir + "/frames.csv");

  std::ofstream txt(out_dir + "/summary.txt");
  if (!txt) {
    throw std::runtime_error("report: cannot open " + out_dir + "/summary.txt");
  }
  txt << "policy:           " << to_string(config.policy) << "\n"
      << "heat source:      " << to_string(config.heat_source) << "\n"
      << "tau:              " << fmt(config.tau) << "\n"
      << "scenarios:        " << scenarios.size() << "\n"
      << "frames evaluated: " << eval.frames.size() << "\n"
      << "corr-mIoU [%]:    " << fmt(eval.corr_miou) << "\n"
      << "IoU-error [%]:    " << fmt(eval.iou_error) << "\n"
      << "AP:               " << fmt(eval.ap) << "\n"
      << "critical recall:  " << fmt(eval.critical_recall) << "\n"
      << "cells sent:       " << eval.comm.cells_sent << " / " << eval.comm.cells_total
      << " (" << fmt(eval.comm.percent_of_full) << "%)\n"
      << "bytes sent:       " << eval.comm.bytes_sent << "\n"
      << "volume log2:      "
      << (eval.comm.volume_log2 ? fmt(*eval.comm.volume_log2) : "n/a") << "\n";
  return eval;
}

}  // namespace vicsim
