#include "vicsim/idapm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vicsim/rng.hpp"
#include "vicsim/sensing.hpp"

namespace vicsim {

namespace {

constexpr int kK = HeatmapPredictor::kKernel;
constexpr int kIn = HeatmapPredictor::kInPlanes;
constexpr int kHidden = HeatmapPredictor::kHiddenPlanes;

constexpr std::size_t kW1 = static_cast<std::size_t>(kHidden) * kIn * kK * kK;
constexpr std::size_t kB1 = kHidden;
constexpr std::size_t kW2 = static_cast<std::size_t>(kHidden) * kK * kK;
constexpr std::size_t kB2 = 1;

double intent_plane_value(DrivingIntent intent) {
  // 1-based ordinal over four intents, so every intent is distinguishable
  // from an absent plane.
  return (static_cast<double>(static_cast<int>(intent)) + 1.0) / 4.0;
}

// Distance (meters) from a point to the boundary of an oriented box; zero
// inside the box.
double distance_to_box(const OrientedBox& box, const Point2& p) {
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const Point2 d = p - box.center;
  const double along = c * d.x + s * d.y;
  const double across = -s * d.x + c * d.y;
  const double ox = std::max(0.0, std::abs(along) - box.half_length);
  const double oy = std::max(0.0, std::abs(across) - box.half_width);
  return std::hypot(ox, oy);
}

void splat_box(Heatmap& heat, const OrientedBox& box, double value) {
  if (value <= 0.0) {
    return;
  }
  const GridSpec& spec = heat.spec();
  const double sigma_m = spec.cell_size;  // one cell
  const double skirt = 3.5 * sigma_m;
  AlignedRect bb = box.aabb();
  bb.x_min -= skirt;
  bb.x_max += skirt;
  bb.y_min -= skirt;
  bb.y_max += skirt;
  const int c0 = static_cast<int>(std::floor((bb.x_min - spec.x_min) / spec.cell_size));
  const int c1 = static_cast<int>(std::floor((bb.x_max - spec.x_min) / spec.cell_size));
  const int r0 = static_cast<int>(std::floor((bb.y_min - spec.y_min) / spec.cell_size));
  const int r1 = static_cast<int>(std::floor((bb.y_max - spec.y_min) / spec.cell_size));
  for (int row = std::max(0, r0); row <= std::min(spec.rows() - 1, r1); ++row) {
    for (int col = std::max(0, c0); col <= std::min(spec.cols() - 1, c1); ++col) {
      const double dist = distance_to_box(box, spec.cell_center({row, col}));
      const double g = std::exp(-(dist * dist) / (2.0 * sigma_m * sigma_m));
      const double v = std::min(1.0, value * g);
      double& cell = heat.at(row, col);
      cell = std::max(cell, v);
    }
  }
}

}  // namespace

MotionFeatureStack rasterize_motion_features(const Scenario& scenario, int frame,
                                             const GridSpec& spec,
                                             DrivingIntent intent) {
  if (frame < 0 || frame + 1 >= scenario.frames) {
    throw std::out_of_range(
        "rasterize_motion_features: flow needs frame+1 inside the scenario");
  }
  MotionFeatureStack f{Grid<double>(spec, 0.0), Grid<double>(spec, 0.0),
                       Grid<double>(spec, 0.0), Grid<double>(spec, 0.0),
                       Grid<double>(spec, 0.0), Grid<double>(spec, 0.0),
                       Grid<double>(spec, intent_plane_value(intent))};

  std::vector<const Agent*> agents;
  for (const auto& a : scenario.agents) {
    agents.push_back(&a);
  }
  std::sort(agents.begin(), agents.end(),
            [](const Agent* a, const Agent* b) { return a->state.id < b->state.id; });

  for (const Agent* a : agents) {
    const auto pos = a->trajectory.position_at(frame);
    const auto pos_next = a->trajectory.position_at(frame + 1);
    if (!pos || !pos_next) {
      continue;
    }
    const OrientedBox box = a->footprint_at(frame);
    const double radius = 0.5 * std::hypot(a->state.length, a->state.width);
    const Point2 flow{(pos_next->x - pos->x) / spec.cell_size,
                      (pos_next->y - pos->y) / spec.cell_size};
    for (const auto& c : footprint_cells(spec, box)) {
      const Point2 cc = spec.cell_center(c);
      f.seg.at(c) = 1.0;
      const double d = distance(cc, box.center);
      f.cen.at(c) = std::max(f.cen.at(c), std::max(0.0, 1.0 - d / radius));
      f.off_x.at(c) = (box.center.x - cc.x) / spec.cell_size;
      f.off_y.at(c) = (box.center.y - cc.y) / spec.cell_size;
      f.flow_x.at(c) = flow.x;
      f.flow_y.at(c) = flow.y;
    }
    if (const auto center_cell = world_to_cell(spec, box.center)) {
      f.cen.at(*center_cell) = 1.0;
    }
  }
  return f;
}

Heatmap render_gt_heatmap(const Scenario& scenario, int frame,
                          const std::vector<RelevanceReport>& relevances,
                          const GridSpec& spec, int n_future) {
  Heatmap heat(spec, 0.0);
  for (const auto& rep : relevances) {
    const Agent* a = scenario.find_agent(rep.target_id);
    if (!a || rep.relevance <= 0.0) {
      continue;
    }
    for (int k = 0; k <= n_future; ++k) {
      const auto pos = a->trajectory.position_at(frame + k);
      if (!pos) {
        break;
      }
      OrientedBox box{*pos, a->state.length / 2.0, a->state.width / 2.0,
                      a->heading_at(frame + k)};
      splat_box(heat, box, rep.relevance);
    }
  }
  return heat;
}

HeatmapPredictor::HeatmapPredictor() : weights_(parameter_count(), 0.0) {}

std::size_t HeatmapPredictor::parameter_count() { return kW1 + kB1 + kW2 + kB2; }

HeatmapPredictor HeatmapPredictor::random_init(std::uint64_t seed) {
  HeatmapPredictor m;
  SeededRng rng(seed);
  for (auto& w : m.weights_) {
    w = rng.uniform(-0.1, 0.1);
  }
  return m;
}

namespace {

struct Planes {
  int rows;
  int cols;
  std::vector<std::vector<double>> data;  // plane-major
};

Planes planes_of(const MotionFeatureStack& feats) {
  const auto ptrs = feats.planes();
  const GridSpec& spec = ptrs[0]->spec();
  for (const auto* p : ptrs) {
    if (!(p->spec() == spec)) {
      throw std::invalid_argument("predictor: feature planes have mismatched specs");
    }
  }
  Planes out{spec.rows(), spec.cols(), {}};
  out.data.reserve(kIn);
  for (const auto* p : ptrs) {
    out.data.push_back(p->cells());
  }
  return out;
}

void conv3x3_accum(const std::vector<double>& in, int rows, int cols, const double* k,
                   std::vector<double>& out) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int dy = 0; dy < kK; ++dy) {
        const int rr = r + dy - 1;
        if (rr < 0 || rr >= rows) continue;
        for (int dx = 0; dx < kK; ++dx) {
          const int cc = c + dx - 1;
          if (cc < 0 || cc >= cols) continue;
          acc += k[dy * kK + dx] * in[static_cast<std::size_t>(rr) * cols + cc];
        }
      }
      out[static_cast<std::size_t>(r) * cols + c] += acc;
    }
  }
}

void conv3x3_kernel_grad(const std::vector<double>& in, const std::vector<double>& dout,
                         int rows, int cols, double* gk) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double g = dout[static_cast<std::size_t>(r) * cols + c];
      if (g == 0.0) continue;
      for (int dy = 0; dy < kK; ++dy) {
        const int rr = r + dy - 1;
        if (rr < 0 || rr >= rows) continue;
        for (int dx = 0; dx < kK; ++dx) {
          const int cc = c + dx - 1;
          if (cc < 0 || cc >= cols) continue;
          gk[dy * kK + dx] += g * in[static_cast<std::size_t>(rr) * cols + cc];
        }
      }
    }
  }
}

void conv3x3_input_grad(const std::vector<double>& dout, int rows, int cols,
                        const double* k, std::vector<double>& din) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double g = dout[static_cast<std::size_t>(r) * cols + c];
      if (g == 0.0) continue;
      for (int dy = 0; dy < kK; ++dy) {
        const int rr = r + dy - 1;
        if (rr < 0 || rr >= rows) continue;
        for (int dx = 0; dx < kK; ++dx) {
          const int cc = c + dx - 1;
          if (cc < 0 || cc >= cols) continue;
          din[static_cast<std::size_t>(rr) * cols + cc] += g * k[dy * kK + dx];
        }
      }
    }
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ForwardState {
  std::vector<std::vector<double>> pre_hidden;  // before rectifier
  std::vector<std::vector<double>> hidden;
  std::vector<double> out;  // after logistic
};

ForwardState run_forward(const std::vector<double>& w, const Planes& in) {
  const std::size_t n = static_cast<std::size_t>(in.rows) * in.cols;
  ForwardState st;
  st.pre_hidden.assign(kHidden, std::vector<double>(n, 0.0));
  st.hidden.assign(kHidden, std::vector<double>(n, 0.0));
  for (int h = 0; h < kHidden; ++h) {
    auto& pre = st.pre_hidden[h];
    pre.assign(n, w[kW1 + h]);  // bias
    for (int i = 0; i < kIn; ++i) {
      const double* kernel = &w[(static_cast<std::size_t>(h) * kIn + i) * kK * kK];
      conv3x3_accum(in.data[i], in.rows, in.cols, kernel, pre);
    }
    for (std::size_t j = 0; j < n; ++j) {
      st.hidden[h][j] = pre[j] > 0.0 ? pre[j] : 0.0;
    }
  }
  std::vector<double> z(n, w[kW1 + kB1 + kW2]);  // output bias
  for (int h = 0; h < kHidden; ++h) {
    const double* kernel = &w[kW1 + kB1 + static_cast<std::size_t>(h) * kK * kK];
    conv3x3_accum(st.hidden[h], in.rows, in.cols, kernel, z);
  }
  st.out.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    st.out[j] = sigmoid(z[j]);
  }
  return st;
}

}  // namespace

Heatmap HeatmapPredictor::forward(const MotionFeatureStack& feats) const {
  const Planes in = planes_of(feats);
  const ForwardState st = run_forward(weights_, in);
  Heatmap out(feats.spec(), 0.0);
  out.cells() = st.out;
  return out;
}

double HeatmapPredictor::loss_and_gradient(const MotionFeatureStack& feats,
                                           const Heatmap& target,
                                           const LossParams& loss_cfg,
                                           std::vector<double>* grad) const {
  if (!(target.spec() == feats.spec())) {
    throw std::invalid_argument("predictor: target spec does not match features");
  }
  const Planes in = planes_of(feats);
  const ForwardState st = run_forward(weights_, in);
  const std::size_t n = st.out.size();
  const auto& gt = target.cells();

  double loss_sum = 0.0;
  std::vector<double> dz(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    loss_sum += loss_value(st.out[j], gt[j], loss_cfg);
    if (grad) {
      const double dldx = loss_grad(st.out[j], gt[j], loss_cfg) / static_cast<double>(n);
      dz[j] = dldx * st.out[j] * (1.0 - st.out[j]);
    }
  }
  const double loss = loss_sum / static_cast<double>(n);
  if (!grad) {
    return loss;
  }

  std::vector<double>& g = *grad;
  if (g.size() != weights_.size()) {
    g.assign(weights_.size(), 0.0);
  }

  // Output layer.
  for (std::size_t j = 0; j < n; ++j) {
    g[kW1 + kB1 + kW2] += dz[j];
  }
  std::vector<std::vector<double>> dhidden(kHidden,
                                           std::vector<double>(n, 0.0));
  for (int h = 0; h < kHidden; ++h) {
    conv3x3_kernel_grad(st.hidden[h], dz, in.rows, in.cols,
                        &g[kW1 + kB1 + static_cast<std::size_t>(h) * kK * kK]);
    const double* kernel =
        &weights_[kW1 + kB1 + static_cast<std::size_t>(h) * kK * kK];
    conv3x3_input_grad(dz, in.rows, in.cols, kernel, dhidden[h]);
  }

  // Hidden layer.
  for (int h = 0; h < kHidden; ++h) {
    auto& dpre = dhidden[h];
    for (std::size_t j = 0; j < n; ++j) {
      if (st.pre_hidden[h][j] <= 0.0) {
        dpre[j] = 0.0;
      }
      g[kW1 + h] += dpre[j];
    }
    for (int i = 0; i < kIn; ++i) {
      conv3x3_kernel_grad(in.data[i], dpre, in.rows, in.cols,
                          &g[(static_cast<std::size_t>(h) * kIn + i) * kK * kK]);
    }
  }
  return loss;
}

Heatmap predict_heatmap(const HeatmapPredictor& model, const MotionFeatureStack& feats) {
  return model.forward(feats);
}

double gradient_check(const HeatmapPredictor& model, const TrainingSample& sample,
                      const LossParams& loss_cfg, std::uint64_t seed, int n_probes) {
  std::vector<double> analytic(model.weights().size(), 0.0);
  model.loss_and_gradient(sample.features, sample.target, loss_cfg, &analytic);

  HeatmapPredictor probe = model;
  SeededRng rng(seed);
  const double h = 1e-5;
  double worst = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    const auto idx = static_cast<std::size_t>(
        rng.next_u64() % probe.weights().size());
    const double saved = probe.weights()[idx];
    probe.weights()[idx] = saved + h;
    const double up =
        probe.loss_and_gradient(sample.features, sample.target, loss_cfg, nullptr);
    probe.weights()[idx] = saved - h;
    const double down =
        probe.loss_and_gradient(sample.features, sample.target, loss_cfg, nullptr);
    probe.weights()[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max(std::abs(fd) + std::abs(analytic[idx]), 1e-8);
    worst = std::max(worst, std::abs(fd - analytic[idx]) / denom);
  }
  return worst;
}

TrainResult train_predictor(const std::vector<TrainingSample>& dataset,
                            const LossParams& loss_cfg, int iters, std::uint64_t seed) {
  if (dataset.empty()) {
    throw std::invalid_argument("train_predictor: dataset must be non-empty");
  }
  if (iters < 1) {
    throw std::invalid_argument("train_predictor: iters must be >= 1");
  }
  TrainResult result;
  result.model = HeatmapPredictor::random_init(seed);

  const double check = gradient_check(result.model, dataset.front(), loss_cfg,
                                      mix_u64(seed ^ 0x67726164ULL), 24);
  if (!(check < 1e-4)) {
    throw std::runtime_error("train_predictor: gradient check failed (" +
                             std::to_string(check) + ")");
  }

  const double step = 0.05;
  std::vector<double> grad(result.model.weights().size(), 0.0);
  result.loss_trace.reserve(iters);
  for (int it = 0; it < iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (const auto& sample : dataset) {
      loss += result.model.loss_and_gradient(sample.features, sample.target, loss_cfg,
                                             &grad);
    }
    loss /= static_cast<double>(dataset.size());
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_predictor: non-finite loss at iteration " +
                               std::to_string(it));
    }
    result.loss_trace.push_back(loss);
    const double scale = step / static_cast<double>(dataset.size());
    auto& w = result.model.weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= scale * grad[i];
    }
  }
  return result;
}

GridSpec synthetic_batch_spec() { return {-12.8, 12.8, -12.8, 12.8, 0.8}; }

std::vector<TrainingSample> make_synthetic_batch(std::uint64_t seed, int count) {
  const GridSpec spec = synthetic_batch_spec();
  std::vector<TrainingSample> batch;
  batch.reserve(count);
  for (int i = 0; i < count; ++i) {
    SeededRng rng(mix_u64(seed + static_cast<std::uint64_t>(i) * 0x9e37ULL));
    Scenario s;
    s.frames = 8;
    s.ego_id = 0;
    s.seed = seed;
    const int intent_pick = rng.uniform_int(0, 3);
    s.ego_intent = static_cast<DrivingIntent>(intent_pick);

    const int n_agents = rng.uniform_int(2, 4);
    std::vector<RelevanceReport> relevances;
    for (int id = 0; id < n_agents; ++id) {
      Agent a;
      a.state.id = id;
      a.state.cls = AgentClass::Car;
      a.state.length = rng.uniform(3.5, 5.0);
      a.state.width = rng.uniform(1.6, 2.2);
      a.state.position = {rng.uniform(-9.0, 9.0), rng.uniform(-9.0, 9.0)};
      a.state.heading = rng.uniform(0.0, 6.28318530717958647692);
      a.state.speed = rng.uniform(0.0, 3.0);
      const Point2 dir{std::cos(a.state.heading), std::sin(a.state.heading)};
      for (int k = 0; k < s.frames; ++k) {
        a.trajectory.waypoints.push_back(
            {k, a.state.position + dir * (a.state.speed * 0.5 * k)});
      }
      s.agents.push_back(std::move(a));
      if (id != s.ego_id) {
        relevances.push_back({id, 0.0, 0.0, rng.uniform(0.2, 1.0)});
      }
    }
    TrainingSample sample{rasterize_motion_features(s, 1, spec, s.ego_intent),
                          render_gt_heatmap(s, 1, relevances, spec, 6)};
    batch.push_back(std::move(sample));
  }
  return batch;
}

namespace {

constexpr char kWeightsMagic[8] = {'I', 'D', 'A', 'P', 'M', 'W', 'T', '1'};

void put_u16(std::vector<unsigned char>& buf, std::uint16_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_f32(std::vector<unsigned char>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
  }
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  }
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_predictor(const HeatmapPredictor& model, const std::string& path) {
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kWeightsMagic, kWeightsMagic + 8);
  put_u16(buf, 1);  // version
  put_u16(buf, kIn);
  put_u16(buf, kHidden);
  put_u16(buf, 1);
  for (double w : model.weights()) {
    put_f32(buf, static_cast<float>(w));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("save_predictor: cannot open " + path);
  }
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) {
    throw std::runtime_error("save_predictor: write failed for " + path);
  }
}

HeatmapPredictor load_predictor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("load_predictor: cannot open " + path);
  }
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  const std::size_t expected = 16 + HeatmapPredictor::parameter_count() * 4;
  if (buf.size() != expected) {
    throw std::runtime_error("load_predictor: unexpected file size in " + path);
  }
  if (std::memcmp(buf.data(), kWeightsMagic, 8) != 0) {
    throw std::runtime_error("load_predictor: bad magic in " + path);
  }
  if (get_u16(&buf[8]) != 1) {
    throw std::runtime_error("load_predictor: unsupported version in " + path);
  }
  if (get_u16(&buf[10]) != kIn || get_u16(&buf[12]) != kHidden ||
      get_u16(&buf[14]) != 1) {
    throw std::runtime_error("load_predictor: plane counts do not match model in " +
                             path);
  }
  HeatmapPredictor model;
  for (std::size_t i = 0; i < model.weights().size(); ++i) {
    model.weights()[i] = get_f32(&buf[16 + i * 4]);
  }
  return model;
}

}  // namespace vicsim
