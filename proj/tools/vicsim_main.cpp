// Command line front end: scenario generation, pipeline runs, threshold
// sweeps, relevance and loss evaluation, and predictor training.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vicsim/idapm.hpp"
#include "vicsim/loss.hpp"
#include "vicsim/pipeline.hpp"
#include "vicsim/ptcm.hpp"
#include "vicsim/scenario.hpp"

namespace {

using namespace vicsim;

std::vector<double> parse_taus(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(std::stod(item));
    }
  }
  return out;
}

// Common run/sweep options. Flags given on the command line override values
// from --config.
void add_run_options(CLI::App* cmd, RunConfig& cfg, std::string& policy_str,
                     std::string& heat_str, std::string& template_str) {
  cmd->add_option("--scenario", cfg.scenario_paths, "scenario file(s) to run");
  cmd->add_option("--template", template_str,
                  "Intersection | Oncoming | OccludedCrossing");
  cmd->add_option("--seed", cfg.first_seed, "seed of the first generated scenario");
  cmd->add_option("--count", cfg.scenario_count, "number of generated scenarios");
  cmd->add_option("--agents", cfg.n_agents, "agents per generated scenario");
  cmd->add_option("--policy", policy_str, "risk_intent | visibility | full | none");
  cmd->add_option("--heat-source", heat_str, "analytic | trained");
  cmd->add_option("--weights", cfg.weights_path, "predictor weights file");
  cmd->add_option("--tau", cfg.tau, "mask threshold");
  cmd->add_option("--block-size", cfg.block_size, "transmission block edge, cells");
  cmd->add_option("--bytes-per-cell", cfg.bytes_per_cell, "payload bytes per cell");
  cmd->add_option("--header-bytes", cfg.header_bytes, "per-block header bytes");
  cmd->add_option("--drop-prob", cfg.channel.drop_probability,
                  "independent block drop probability");
  cmd->add_option("--channel-seed", cfg.channel.seed, "channel seed");
  cmd->add_option("--temporal-frames", cfg.temporal_frames,
                  "frames accumulated per view");
  cmd->add_flag("--no-temporal", cfg.no_temporal, "single-frame views");
  cmd->add_flag("--no-motion", cfg.no_motion, "zero the flow feature planes");
  cmd->add_flag("--no-velocity", cfg.no_velocity, "drop the kinematic-risk term");
  cmd->add_option("--n-rays", cfg.n_rays, "rays per rendered view");
  cmd->add_option("--sensor-range", cfg.sensor_range, "sensor range, meters");
  cmd->add_option("--min-cells", cfg.min_cells, "minimum component size");
  cmd->add_option("--min-count", cfg.min_count, "minimum cell evidence");
  cmd->add_option("--match-iou", cfg.match_iou, "detection match IoU threshold");
  cmd->add_option("--critical-threshold", cfg.critical_threshold,
                  "relevance threshold for critical targets");
  cmd->add_option("--out-dir", cfg.out_dir, "write report files here");
}

void print_summary(const RunConfig& cfg, const EvalReport& r) {
  std::printf("policy:           %s\n", to_string(cfg.policy));
  std::printf("heat source:      %s\n", to_string(cfg.heat_source));
  std::printf("tau:              %.6f\n", cfg.tau);
  std::printf("frames evaluated: %zu\n", r.frames.size());
  std::printf("corr-mIoU [%%]:    %.6f\n", r.corr_miou);
  std::printf("IoU-error [%%]:    %.6f\n", r.iou_error);
  std::printf("AP:               %.6f\n", r.ap);
  std::printf("critical recall:  %.6f\n", r.critical_recall);
  std::printf("cells sent:       %lld / %lld (%.6f%%)\n",
              static_cast<long long>(r.comm.cells_sent),
              static_cast<long long>(r.comm.cells_total), r.comm.percent_of_full);
  std::printf("bytes sent:       %lld\n", static_cast<long long>(r.comm.bytes_sent));
  if (r.comm.volume_log2) {
    std::printf("volume log2:      %.6f\n", *r.comm.volume_log2);
  } else {
    std::printf("volume log2:      n/a\n");
  }
}

int run_main(const RunConfig& cfg) {
  EvalReport r;
  if (!cfg.out_dir.empty()) {
    r = report(cfg, cfg.out_dir);
  } else {
    r = run(cfg);
  }
  print_summary(cfg, r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bandwidth-aware vehicle-infrastructure perception simulator"};
  app.require_subcommand(1);

  // gen-scenario ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-scenario", "generate a synthetic scenario file");
  std::string gen_template = "Intersection";
  std::uint64_t gen_seed = 0;
  int gen_agents = 4;
  std::string gen_out;
  gen->add_option("--template", gen_template,
                  "Intersection | Oncoming | OccludedCrossing");
  gen->add_option("--seed", gen_seed, "generator seed")->required();
  gen->add_option("--agents", gen_agents, "agent count including the ego");
  gen->add_option("--out", gen_out, "output path")->required();

  // run / sweep ---------------------------------------------------------
  RunConfig cfg;
  std::string config_path;
  std::string policy_str, heat_str, template_str;
  auto* run_cmd = app.add_subcommand("run", "run the full pipeline");
  run_cmd->add_option("--config", config_path, "JSON run configuration");
  add_run_options(run_cmd, cfg, policy_str, heat_str, template_str);

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep mask thresholds");
  std::string taus_csv = "0.0,0.05,0.1,0.2,0.4,0.8";
  std::string sweep_out;
  sweep_cmd->add_option("--config", config_path, "JSON run configuration");
  add_run_options(sweep_cmd, cfg, policy_str, heat_str, template_str);
  sweep_cmd->add_option("--taus", taus_csv, "comma-separated thresholds");
  sweep_cmd->add_option("--out", sweep_out, "CSV output path (default stdout)");

  // eval-ptcm ----------------------------------------------------------
  auto* ptcm_cmd = app.add_subcommand("eval-ptcm", "per-target relevance scores");
  std::string ptcm_scenario;
  int ptcm_frame = 1;
  std::string ptcm_out;
  ptcm_cmd->add_option("--scenario", ptcm_scenario, "scenario file")->required();
  ptcm_cmd->add_option("--frame", ptcm_frame, "frame to evaluate");
  ptcm_cmd->add_option("--out", ptcm_out, "CSV output path (default stdout)");

  // eval-loss ----------------------------------------------------------
  auto* loss_cmd = app.add_subcommand("eval-loss", "loss and gradient table");
  std::string pairs_path, loss_out;
  LossParams loss_params;
  std::string loss_variant_str;
  loss_cmd->add_option("--pairs", pairs_path, "CSV of x,gt pairs")->required();
  loss_cmd->add_option("--variant", loss_variant_str,
                       "rescale_focal | focal | l1 | l2");
  loss_cmd->add_option("--alpha-under", loss_params.alpha_under, "");
  loss_cmd->add_option("--alpha-over", loss_params.alpha_over, "");
  loss_cmd->add_option("--gamma1", loss_params.gamma1, "");
  loss_cmd->add_option("--gamma2", loss_params.gamma2, "");
  loss_cmd->add_option("--epsilon", loss_params.epsilon, "");
  loss_cmd->add_option("--out", loss_out, "CSV output path (default stdout)");

  // train-idapm --------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train-idapm", "train the heatmap predictor");
  bool train_synthetic = false;
  std::vector<std::string> train_scenarios;
  int train_iters = 200;
  std::uint64_t train_seed = 0;
  int train_batch = 8;
  std::string train_out, trace_out, train_variant_str;
  train_cmd->add_flag("--synthetic", train_synthetic, "use the synthetic batch");
  train_cmd->add_option("--scenario", train_scenarios, "scenario files for training");
  train_cmd->add_option("--iters", train_iters, "gradient descent iterations");
  train_cmd->add_option("--seed", train_seed, "init / batch seed");
  train_cmd->add_option("--batch", train_batch, "synthetic batch size");
  train_cmd->add_option("--out", train_out, "weights output path")->required();
  train_cmd->add_option("--trace", trace_out, "loss trace CSV path");
  train_cmd->add_option("--loss-variant", train_variant_str,
                        "rescale_focal | focal | l1 | l2");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const Scenario s =
          generate_scenario(template_from_string(gen_template), gen_seed, gen_agents);
      save_scenario(s, gen_out);
      std::printf("wrote %s (%zu agents, %d frames)\n", gen_out.c_str(),
                  s.agents.size(), s.frames);
      return 0;
    }

    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      // Start from the file config when given, then overwrite with any flag
      // that was actually provided on the command line.
      RunConfig merged = config_path.empty() ? cfg : load_run_config(config_path);
      auto* active = run_cmd->parsed() ? run_cmd : sweep_cmd;
      auto given = [&](const std::string& name) {
        return active->count(name) > 0;
      };
      if (given("--scenario")) merged.scenario_paths = cfg.scenario_paths;
      if (given("--seed")) merged.first_seed = cfg.first_seed;
      if (given("--count")) merged.scenario_count = cfg.scenario_count;
      if (given("--agents")) merged.n_agents = cfg.n_agents;
      if (given("--weights")) merged.weights_path = cfg.weights_path;
      if (given("--tau")) merged.tau = cfg.tau;
      if (given("--block-size")) merged.block_size = cfg.block_size;
      if (given("--bytes-per-cell")) merged.bytes_per_cell = cfg.bytes_per_cell;
      if (given("--header-bytes")) merged.header_bytes = cfg.header_bytes;
      if (given("--drop-prob")) merged.channel.drop_probability = cfg.channel.drop_probability;
      if (given("--channel-seed")) merged.channel.seed = cfg.channel.seed;
      if (given("--temporal-frames")) merged.temporal_frames = cfg.temporal_frames;
      if (given("--no-temporal")) merged.no_temporal = cfg.no_temporal;
      if (given("--no-motion")) merged.no_motion = cfg.no_motion;
      if (given("--no-velocity")) merged.no_velocity = cfg.no_velocity;
      if (given("--n-rays")) merged.n_rays = cfg.n_rays;
      if (given("--sensor-range")) merged.sensor_range = cfg.sensor_range;
      if (given("--min-cells")) merged.min_cells = cfg.min_cells;
      if (given("--min-count")) merged.min_count = cfg.min_count;
      if (given("--match-iou")) merged.match_iou = cfg.match_iou;
      if (given("--critical-threshold")) merged.critical_threshold = cfg.critical_threshold;
      if (given("--out-dir")) merged.out_dir = cfg.out_dir;
      if (!policy_str.empty()) merged.policy = policy_from_string(policy_str);
      if (!heat_str.empty()) merged.heat_source = heat_source_from_string(heat_str);
      if (!template_str.empty()) merged.tmpl = template_from_string(template_str);

      if (run_cmd->parsed()) {
        return run_main(merged);
      }
      const auto rows = sweep(merged, parse_taus(taus_csv));
      if (sweep_out.empty()) {
        std::printf("tau,comm_percent,ap,critical_recall,corr_miou,iou_error\n");
        for (const auto& r : rows) {
          std::printf("%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.tau, r.comm_percent, r.ap,
                      r.critical_recall, r.corr_miou, r.iou_error);
        }
      } else {
        write_sweep_csv(rows, sweep_out);
        std::printf("wrote %s (%zu rows)\n", sweep_out.c_str(), rows.size());
      }
      return 0;
    }

    if (ptcm_cmd->parsed()) {
      const Scenario s = load_scenario(ptcm_scenario);
      const auto reports = relevance_all(s, ptcm_frame, PtcmParams{});
      std::ostringstream out;
      out << "target_id,T_S,R_S,relevance\n";
      char buf[128];
      for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.target_id,
                      r.traj_score, r.risk_score, r.relevance);
        out << buf;
      }
      if (ptcm_out.empty()) {
        std::fputs(out.str().c_str(), stdout);
      } else {
        std::ofstream f(ptcm_out);
        f << out.str();
      }
      return 0;
    }

    if (loss_cmd->parsed()) {
      if (!loss_variant_str.empty()) {
        loss_params.variant = loss_variant_from_string(loss_variant_str);
      }
      std::ifstream f(pairs_path);
      if (!f) {
        throw std::runtime_error("eval-loss: cannot open " + pairs_path);
      }
      std::ostringstream out;
      out << "x,gt,loss,grad\n";
      std::string line;
      char buf[160];
      while (std::getline(f, line)) {
        if (line.empty() || !(std::isdigit(line[0]) || line[0] == '.' ||
                              line[0] == '-' || line[0] == '+')) {
          continue;  // header or blank
        }
        double x = 0.0, gt = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &gt) != 2) {
          throw std::runtime_error("eval-loss: bad line '" + line + "'");
        }
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", x, gt,
                      loss_value(x, gt, loss_params), loss_grad(x, gt, loss_params));
        out << buf;
      }
      if (loss_out.empty()) {
        std::fputs(out.str().c_str(), stdout);
      } else {
        std::ofstream of(loss_out);
        of << out.str();
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      LossParams loss_cfg;
      if (!train_variant_str.empty()) {
        loss_cfg.variant = loss_variant_from_string(train_variant_str);
      }
      std::vector<TrainingSample> dataset;
      if (train_synthetic || train_scenarios.empty()) {
        dataset = make_synthetic_batch(train_seed, train_batch);
      } else {
        const GridSpec spec = GridSpec::default_spec();
        const PtcmParams ptcm;
        for (const auto& path : train_scenarios) {
          const Scenario s = load_scenario(path);
          for (int f = 1; f <= s.frames - 1 - ptcm.horizon; ++f) {
            TrainingSample sample{
                rasterize_motion_features(s, f, spec, s.ego_intent),
                render_gt_heatmap(s, f, relevance_all(s, f, ptcm), spec, ptcm.horizon)};
            dataset.push_back(std::move(sample));
          }
        }
      }
      const TrainResult result = train_predictor(dataset, loss_cfg, train_iters,
                                                 train_seed);
      save_predictor(result.model, train_out);
      if (!trace_out.empty()) {
        std::ofstream tf(trace_out);
        tf << "iteration,loss\n";
        char buf[64];
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, result.loss_trace[i]);
          tf << buf;
        }
      }
      std::printf("trained on %zu samples, loss %.6f -> %.6f, wrote %s\n",
                  dataset.size(), result.loss_trace.front(), result.loss_trace.back(),
                  train_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
