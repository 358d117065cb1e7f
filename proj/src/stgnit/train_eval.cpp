#include "stgnit/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include <json.hpp>

#include "stgnit/metrics.hpp"
#include "stgnit/network.hpp"
#include "stgnit/numfmt.hpp"
#include "stgnit/random.hpp"

namespace stgnit {

namespace {

bool has_label(const Window& w, const std::vector<bool>& scored) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!scored.empty() && !scored[i]) continue;
    for (const auto& p : w.future[i]) {
      if (p.is_observed()) return true;
    }
  }
  return false;
}

// Slot labels with unscored pedestrians masked out.
SlotLabels scored_labels(const Sample& s, const STGraph& g) {
  SlotLabels labels = slot_labels(s.window, g);
  if (s.scored.empty()) return labels;
  for (int slot = 0; slot < g.nodes(); ++slot) {
    const auto us = static_cast<std::size_t>(slot);
    if (g.kinds[us] != NodeKind::Pedestrian || s.scored[static_cast<std::size_t>(g.order[us])]) continue;
    for (auto& row : labels.mask) row[us] = false;
  }
  return labels;
}

}  // namespace

std::vector<Sample> make_samples(const Dataset& dataset, Mode mode, int t_obs, int t_pred, int stride) {
  if (dataset.observation.size() != dataset.label.size()) {
    throw DataError("dataset '" + dataset.name + "': observation and label views differ in scene count");
  }
  std::vector<Sample> out;
  for (std::size_t k = 0; k < dataset.observation.size(); ++k) {
    const Scene& obs = dataset.observation[k];
    std::shared_ptr<const OccupancyGrid> grid;
    if (obs.grid_ref) {
      auto it = dataset.grids.find(*obs.grid_ref);
      if (it == dataset.grids.end()) {
        throw DataError("scene '" + obs.scene_id + "' references missing grid '" + *obs.grid_ref + "'");
      }
      grid = it->second;
    }
    for (auto& w : slice_windows(obs, dataset.label[k], t_obs, t_pred, stride)) {
      Window m = materialize_mode(w, mode);
      if (m.empty() || !has_label(m, {})) continue;
      out.push_back({std::move(m), grid, {}});
    }
  }
  return out;
}

std::string Ablation::label() const {
  std::string s;
  const auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += "+";
    s += name;
  };
  add(no_obs, "no_obs");
  add(no_code, "no_code");
  add(no_clu, "no_clu");
  return s.empty() ? "full" : s;
}

void align_scored(std::vector<Sample>& a, std::vector<Sample>& b) {
  std::map<std::pair<std::string, Frame>, std::size_t> index;
  for (std::size_t k = 0; k < b.size(); ++k) index[{b[k].window.scene_id, b[k].window.t0}] = k;
  std::vector<Sample> out_a, out_b;
  for (auto& sa : a) {
    const auto it = index.find({sa.window.scene_id, sa.window.t0});
    if (it == index.end()) continue;
    Sample& sb = b[it->second];
    const auto mark = [](Sample& s, const Sample& other) {
      std::vector<bool> keep(s.window.size(), false);
      for (std::size_t i = 0; i < s.window.size(); ++i) {
        const bool scored = s.scored.empty() || s.scored[i];
        const auto& ids = other.window.pedestrian_ids;
        const auto pos = std::find(ids.begin(), ids.end(), s.window.pedestrian_ids[i]);
        const bool shared = pos != ids.end() &&
                            (other.scored.empty() || other.scored[static_cast<std::size_t>(pos - ids.begin())]);
        keep[i] = scored && shared;
      }
      return keep;
    };
    std::vector<bool> ka = mark(sa, sb), kb = mark(sb, sa);
    sa.scored = std::move(ka);
    sb.scored = std::move(kb);
    if (!has_label(sa.window, sa.scored) || !has_label(sb.window, sb.scored)) continue;
    out_a.push_back(std::move(sa));
    out_b.push_back(std::move(sb));
  }
  a = std::move(out_a);
  b = std::move(out_b);
}

PredictorConfig predictor_config(const Ablation& ablation, const InteractionParams& interaction) {
  PredictorConfig c;
  c.od = interaction.od;
  c.fd = interaction.fd;
  c.graph.cluster_eps = interaction.ad;
  c.graph.cluster = !ablation.no_clu;
  c.graph.encode = !ablation.no_code;
  c.use_obstacles = !ablation.no_obs;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (!(interaction.od > 0.0) || !(interaction.ad > 0.0) || !(interaction.fd > 0.0)) {
    throw std::invalid_argument("od, ad and fd must be positive");
  }
}

TrainingDiverged::TrainingDiverged(int epoch_, int batch_, double loss)
    : std::runtime_error("training diverged: non-finite loss " + format_double(loss) + " in epoch " +
                         std::to_string(epoch_) + ", batch " + std::to_string(batch_)),
      epoch(epoch_),
      batch(batch_) {}

Adam::Adam(const ModelConfig& config, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(config), v_(config), lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {}

void Adam::step(ModelParams& params, const ModelParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  std::vector<Tensor*> p, m, v;
  std::vector<const Tensor*> g;
  params.for_each([&](const std::string&, Tensor& t) { p.push_back(&t); });
  m_.for_each([&](const std::string&, Tensor& t) { m.push_back(&t); });
  v_.for_each([&](const std::string&, Tensor& t) { v.push_back(&t); });
  grad.for_each([&](const std::string&, const Tensor& t) { g.push_back(&t); });
  for (std::size_t b = 0; b < p.size(); ++b) {
    double* pd = p[b]->data();
    double* md = m[b]->data();
    double* vd = v[b]->data();
    const double* gd = g[b]->data();
    for (std::size_t k = 0; k < p[b]->size(); ++k) {
      md[k] = b1_ * md[k] + (1.0 - b1_) * gd[k];
      vd[k] = b2_ * vd[k] + (1.0 - b2_) * gd[k] * gd[k];
      pd[k] -= lr_ * (md[k] / c1) / (std::sqrt(vd[k] / c2) + eps_);
    }
  }
}

double batch_gradient(const ModelParams& params, const std::vector<const Sample*>& batch,
                      const std::vector<const STGraph*>& pass1_graphs, const PredictorConfig& config,
                      ModelParams& grad) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sample& s = *batch[b];
    const STGraph g = second_pass_graph(params, *pass1_graphs[b], s.grid.get(), config);
    ForwardTrace trace;
    const auto out = forward(params, g, &trace);
    const SlotLabels labels = scored_labels(s, g);
    LossResult loss = window_loss(out.positions, labels.gt, labels.mask);
    total += loss.value;
    for (auto& d : loss.d_candidates.values()) d *= scale;
    backward(params, trace, loss.d_candidates, grad);
  }
  return total * scale;
}

TrainResult train(const std::vector<Sample>& samples, ModelParams init, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("train: no training windows");
  const PredictorConfig pcfg = predictor_config(config.ablation, config.interaction);
  std::vector<STGraph> pass1;
  pass1.reserve(samples.size());
  for (const auto& s : samples) pass1.push_back(build_graph(s.window, pcfg.graph));

  TrainResult result{std::move(init), {}};
  ModelParams& params = result.params;
  Adam adam(params.config, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  ModelParams grad(params.config);
  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    int batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      std::vector<const STGraph*> graphs;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&samples[order[k]]);
        graphs.push_back(&pass1[order[k]]);
      }
      grad.set_zero();
      const double loss = batch_gradient(params, batch, graphs, pcfg, grad);
      if (!std::isfinite(loss) || !grad.all_finite()) throw TrainingDiverged(epoch, batch_id, loss);
      adam.step(params, grad);
      if (!params.all_finite()) throw TrainingDiverged(epoch, batch_id, loss);
      epoch_sum += loss * static_cast<double>(batch.size());
      ++batch_id;
    }
    const EpochRecord rec{epoch, epoch_sum / static_cast<double>(samples.size())};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec, params);
    if (config.stop_below && rec.loss < *config.stop_below) break;
  }
  return result;
}

EvalMetrics evaluate_samples(const ModelParams& params, const std::vector<Sample>& samples,
                             const PredictorConfig& config) {
  EvalMetrics m;
  double ade_sum = 0.0, fde_sum = 0.0;
  long ade_count = 0, fde_count = 0;
  for (const auto& s : samples) {
    if (s.window.empty() || !has_label(s.window, s.scored)) continue;
    const PredictionResult r = predict_two_pass(s.window, s.grid.get(), params, config);
    const SlotLabels labels = scored_labels(s, r.graph);
    // Metrics run on entity order; rebuild labels from slots.
    const int P = s.window.t_pred, n = static_cast<int>(s.window.size());
    Tensor gt({P, n, 2});
    LabelMask mask(static_cast<std::size_t>(P), std::vector<bool>(static_cast<std::size_t>(n), false));
    for (int slot = 0; slot < r.graph.nodes(); ++slot) {
      if (r.graph.kinds[static_cast<std::size_t>(slot)] != NodeKind::Pedestrian) continue;
      const int e = r.graph.order[static_cast<std::size_t>(slot)];
      for (int t = 0; t < P; ++t) {
        gt(t, e, 0) = labels.gt(t, slot, 0);
        gt(t, e, 1) = labels.gt(t, slot, 1);
        mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] =
            labels.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(slot)];
      }
    }
    const MinKResult a = min_k(r.candidates, gt, mask, Metric::Ade);
    ade_sum += a.error_sum;
    ade_count += a.count;
    for (int c : a.chosen) m.pedestrians += c >= 0 ? 1 : 0;
    bool any_final = false;
    for (int i = 0; i < n; ++i) any_final = any_final || mask.back()[static_cast<std::size_t>(i)];
    if (any_final) {
      const MinKResult f = min_k(r.candidates, gt, mask, Metric::Fde);
      fde_sum += f.error_sum;
      fde_count += f.count;
    }
    ++m.windows;
  }
  m.empty = ade_count == 0;
  if (ade_count > 0) m.min_ade = ade_sum / static_cast<double>(ade_count);
  if (fde_count > 0) m.min_fde = fde_sum / static_cast<double>(fde_count);
  return m;
}

std::string condition_semantics(Mode train_mode, Mode test_mode, bool corrupted) {
  const auto describe = [](Mode m) {
    return m == Mode::Filtration ? "complete histories only" : "eligible pedestrians with gapped histories";
  };
  return std::string("trained in ") + to_string(train_mode) + " mode (" + describe(train_mode) +
         "), tested in " + to_string(test_mode) + " mode (" + describe(test_mode) + ") on " +
         (corrupted ? "corrupted" : "clean") +
         " observations; labels from the label view, unlabelled future frames masked out";
}

void write_report_json(std::ostream& os, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["provenance"] = nlohmann::ordered_json::parse(report.provenance_json);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["dataset"] = r.dataset;
    row["train_mode"] = to_string(r.train_mode);
    row["test_mode"] = to_string(r.test_mode);
    row["data"] = r.corrupted ? "corrupted" : "clean";
    row["ablation"] = r.ablation;
    row["minADE"] = r.metrics.empty ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.metrics.min_ade);
    row["minFDE"] = r.metrics.empty ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.metrics.min_fde);
    row["windows"] = r.metrics.windows;
    row["pedestrians"] = r.metrics.pedestrians;
    row["empty"] = r.metrics.empty;
    row["semantics"] = r.semantics;
    j["rows"].push_back(std::move(row));
  }
  os << j.dump(2) << "\n";
}

void write_report_text(std::ostream& os, const EvalReport& report) {
  os << "dataset  train  test  data  ablation  minADE  minFDE  windows  pedestrians\n";
  for (const auto& r : report.rows) {
    os << r.dataset << "  " << (r.train_mode == Mode::Pad ? "p" : "f") << "  "
       << (r.test_mode == Mode::Pad ? "p" : "f") << "  " << (r.corrupted ? "corrupted" : "clean") << "  "
       << r.ablation << "  ";
    if (r.metrics.empty) {
      os << "empty  empty";
    } else {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f  %.4f", r.metrics.min_ade, r.metrics.min_fde);
      os << buf;
    }
    os << "  " << r.metrics.windows << "  " << r.metrics.pedestrians << "\n";
  }
}

void write_history_jsonl(std::ostream& os, const std::vector<EpochRecord>& history) {
  for (const auto& h : history) {
    nlohmann::ordered_json j;
    j["epoch"] = h.epoch;
    j["loss"] = h.loss;
    os << j.dump() << "\n";
  }
}

}  // namespace stgnit
