// Copyright 2026 The HDG Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hdg/trainer.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hdg/embedding_io.h"
#include "hdg/rng.h"
#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;

std::string_view ObjectiveName(Objective objective) {
  switch (objective) {
    case Objective::kErm: return "erm";
    case Objective::kClipBase: return "clipbase";
    case Objective::kSciPd: return "scipd";
  }
  return "unknown";
}

Objective ParseObjective(std::string_view name) {
  if (name == "erm") return Objective::kErm;
  if (name == "clipbase") return Objective::kClipBase;
  if (name == "scipd") return Objective::kSciPd;
  throw Error(ErrorCode::kInvalidArgument, "unknown objective '" + std::string(name) + "' (erm|clipbase|scipd)");
}

void TrainerConfig::Validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "weight_decay must be non-negative");
  if (!(unknown_threshold > 0.0 && unknown_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown_threshold must lie in (0, 1)");
  }
  perturbation.Validate();
}

namespace {

Eigen::MatrixXd UniformInit(Xoshiro256& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.Uniform(-bound, bound);
  }
  return m;
}

std::vector<std::string> Ids(const std::vector<Sample>& samples) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.id);
  return ids;
}

std::vector<Eigen::Index> Labels(const std::vector<Sample>& samples, const LabelSpace& label_space) {
  std::vector<Eigen::Index> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    auto idx = label_space.KnownIndex(s.class_name);
    if (!idx) throw Error(ErrorCode::kUnknownClass, "training sample of a non-known class", s.id);
    labels.push_back(static_cast<Eigen::Index>(*idx));
  }
  return labels;
}

Eigen::MatrixXd Rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double ClosedSetAccuracy(const ClassifierHead& head, const Eigen::MatrixXd& features,
                         const std::vector<Eigen::Index>& labels) {
  if (labels.empty()) return 0.0;
  const Eigen::MatrixXd logits = head.Logits(features);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (ArgMax(logits.row(i)) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Plain SGD with momentum: v <- mu v + (g + wd p); p <- p - lr v.
void SgdStep(Eigen::MatrixXd& param, Eigen::MatrixXd& velocity, const Eigen::MatrixXd& grad, const TrainerConfig& cfg) {
  velocity = cfg.momentum * velocity + grad + cfg.weight_decay * param;
  param -= cfg.learning_rate * velocity;
}

}  // namespace

TrainedModel Train(const EvalTask& task, const LabelSpace& label_space, const EmbeddingTable& features,
                   const TeacherScores* teacher, const EmbeddingTable* texts, const TrainerConfig& cfg) {
  cfg.Validate();
  const auto num_classes = static_cast<Eigen::Index>(label_space.num_known());
  if (cfg.objective != Objective::kErm && teacher == nullptr) {
    throw Error(ErrorCode::kMissingScores, "objective " + std::string(ObjectiveName(cfg.objective)) +
                                               " needs teacher scores");
  }
  if (cfg.objective == Objective::kSciPd && texts == nullptr) {
    throw Error(ErrorCode::kMissingEmbedding, "objective scipd needs teacher text embeddings");
  }
  if (texts != nullptr) ValidateTextTable(*texts, label_space);
  if (teacher != nullptr && teacher->class_order != label_space.known()) {
    throw Error(ErrorCode::kShapeMismatch, "teacher class order differs from the known classes");
  }

  const std::vector<Sample> train_samples = task.AllTrain();
  const std::vector<Sample> val_samples = task.AllVal();
  if (train_samples.empty()) throw Error(ErrorCode::kEmptyInput, "task has no training samples");
  const Eigen::MatrixXd train_x = features.Gather(Ids(train_samples));
  const Eigen::MatrixXd val_x = features.Gather(Ids(val_samples));
  const std::vector<Eigen::Index> train_y = Labels(train_samples, label_space);
  const std::vector<Eigen::Index> val_y = Labels(val_samples, label_space);

  Eigen::MatrixXd train_targets;  // teacher distributions, or one-hot for ERM
  if (cfg.objective == Objective::kErm) {
    train_targets = Eigen::MatrixXd::Zero(train_x.rows(), num_classes);
    for (std::size_t i = 0; i < train_y.size(); ++i) train_targets(static_cast<Eigen::Index>(i), train_y[i]) = 1.0;
  } else {
    train_targets = teacher->Gather(Ids(train_samples));
  }
  Eigen::MatrixXd text_matrix;
  if (texts != nullptr) text_matrix = texts->matrix();

  const auto feature_dim = static_cast<Eigen::Index>(features.dim());
  const Eigen::Index shared_dim = texts != nullptr ? static_cast<Eigen::Index>(texts->dim()) : feature_dim;

  const Xoshiro256 root(cfg.seed);
  Xoshiro256 init_rng = root.Fork(1);
  Xoshiro256 batch_rng = root.Fork(2);

  TrainedModel model;
  model.class_order = label_space.known();
  ClassifierHead head;
  head.weights = UniformInit(init_rng, num_classes, shared_dim, shared_dim);
  if (feature_dim != shared_dim) head.projection = UniformInit(init_rng, shared_dim, feature_dim, feature_dim);

  Eigen::MatrixXd w_velocity = Eigen::MatrixXd::Zero(head.weights.rows(), head.weights.cols());
  Eigen::MatrixXd p_velocity;
  if (head.projection) p_velocity = Eigen::MatrixXd::Zero(head.projection->rows(), head.projection->cols());

  std::vector<std::size_t> order(train_samples.size());
  double best_val = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    batch_rng.Shuffle(std::span(order));
    double epoch_loss = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Eigen::MatrixXd x = Rows(train_x, idx);
      const Eigen::MatrixXd targets = Rows(train_targets, idx);

      double loss = 0.0;
      HeadGradients grads;
      if (cfg.objective == Objective::kSciPd) {
        std::vector<Eigen::Index> y;
        y.reserve(idx.size());
        for (std::size_t i : idx) y.push_back(train_y[i]);
        LossBreakdown breakdown = TotalLoss(head, x, targets, y, text_matrix, cfg.perturbation);
        loss = breakdown.total;
        grads.weights = std::move(breakdown.grad_weights);
        grads.projection = std::move(breakdown.grad_projection);
      } else {
        const SoftTargetResult result = SoftTargetLoss(head.Logits(x), targets);
        loss = result.loss;
        grads = BackpropLogits(head, x, result.grad_logits);
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergence, "non-finite training loss",
                    "epoch " + std::to_string(epoch) + " batch " + std::to_string(steps + 1));
      }
      SgdStep(head.weights, w_velocity, grads.weights, cfg);
      if (head.projection) SgdStep(*head.projection, p_velocity, grads.projection, cfg);
      if (!head.weights.allFinite()) {
        throw Error(ErrorCode::kDivergence, "non-finite head weights",
                    "epoch " + std::to_string(epoch) + " batch " + std::to_string(steps + 1));
      }
      model.step_losses.push_back(loss);
      epoch_loss += loss;
      ++steps;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / steps;
    // Val holds known classes only; fall back to train accuracy when the
    // split left no validation samples.
    record.val_accuracy = val_y.empty() ? ClosedSetAccuracy(head, train_x, train_y)
                                        : ClosedSetAccuracy(head, val_x, val_y);
    model.history.push_back(record);
    if (record.val_accuracy > best_val) {
      best_val = record.val_accuracy;
      model.selected_epoch = epoch;
      model.head = head;
    }
  }
  return model;
}

std::string PredictionSet::PredictedName(const Prediction& row) const {
  if (!row.predicted) return "UNKNOWN";
  return class_order.at(*row.predicted);
}

PredictionSet InferOpenSet(const TrainedModel& model, const EmbeddingTable& features,
                           const std::vector<Sample>& samples, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  PredictionSet out;
  out.class_order = model.class_order;
  if (samples.empty()) return out;
  const Eigen::MatrixXd logits = model.head.Logits(features.Gather(Ids(samples)));
  out.rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::VectorXd p = Softmax(logits.row(static_cast<Eigen::Index>(i)).transpose());
    const Eigen::Index best = ArgMax(p);
    Prediction row;
    row.sample_id = samples[i].id;
    row.max_prob = p(best);
    row.true_class = samples[i].class_name;
    if (!(row.max_prob < theta)) row.predicted = static_cast<std::size_t>(best);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string PredictionsToTsv(const PredictionSet& predictions) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& row : predictions.rows) {
    os << row.sample_id << '\t' << (row.predicted ? std::to_string(*row.predicted) : std::string("UNKNOWN")) << '\t'
       << row.max_prob << '\t' << row.true_class << '\n';
  }
  return os.str();
}

PredictionSet PredictionsFromTsv(std::string_view text, std::vector<std::string> class_order) {
  PredictionSet out;
  out.class_order = std::move(class_order);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 4) throw Error(ErrorCode::kParse, "expected 4 tab-separated fields", "line " + std::to_string(line_no));
    Prediction row;
    row.sample_id = fields[0];
    try {
      if (fields[1] != "UNKNOWN") {
        row.predicted = static_cast<std::size_t>(std::stoull(fields[1]));
        if (*row.predicted >= out.class_order.size()) throw std::out_of_range("class index");
      }
      row.max_prob = std::stod(fields[2]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, "bad prediction field", "line " + std::to_string(line_no));
    }
    row.true_class = fields[3];
    out.rows.push_back(std::move(row));
  }
  return out;
}

EmbeddingTable CheckpointToTable(const TrainedModel& model, const std::string& extra_footer_json) {
  const ClassifierHead& head = model.head;
  EmbeddingTable table(EmbeddingKind::kCheckpoint, static_cast<std::size_t>(head.shared_dim()));
  for (Eigen::Index i = 0; i < head.weights.rows(); ++i) {
    table.Add("W/" + model.class_order.at(static_cast<std::size_t>(i)), head.weights.row(i).transpose());
  }
  if (head.projection) {
    for (Eigen::Index j = 0; j < head.projection->cols(); ++j) {
      table.Add("P/" + std::to_string(j), head.projection->col(j));
    }
  }
  json footer;
  footer["class_order"] = model.class_order;
  footer["projection"] = head.projection ? "learned" : "identity";
  footer["feature_dim"] = head.feature_dim();
  footer["selected_epoch"] = model.selected_epoch;
  json history = json::array();
  for (const auto& h : model.history) {
    history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
  }
  footer["history"] = std::move(history);
  footer["extra"] = json::parse(extra_footer_json);
  table.set_footer(footer.dump());
  return table;
}

TrainedModel CheckpointFromTable(const EmbeddingTable& table, std::string* extra_footer_json) {
  if (table.kind() != EmbeddingKind::kCheckpoint) throw Error(ErrorCode::kBadKind, "expected a checkpoint table");
  TrainedModel model;
  json footer;
  try {
    footer = json::parse(table.footer());
    model.class_order = footer.at("class_order").get<std::vector<std::string>>();
    model.selected_epoch = footer.at("selected_epoch").get<int>();
    for (const auto& h : footer.at("history")) {
      model.history.push_back(
          {h.at("epoch").get<int>(), h.at("train_loss").get<double>(), h.at("val_accuracy").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad checkpoint footer: ") + e.what());
  }
  const auto dim = static_cast<Eigen::Index>(table.dim());
  model.head.weights.resize(static_cast<Eigen::Index>(model.class_order.size()), dim);
  for (std::size_t i = 0; i < model.class_order.size(); ++i) {
    model.head.weights.row(static_cast<Eigen::Index>(i)) = table.Row("W/" + model.class_order[i]).transpose();
  }
  if (footer.value("projection", "identity") == "learned") {
    const auto feature_dim = footer.at("feature_dim").get<Eigen::Index>();
    Eigen::MatrixXd projection(dim, feature_dim);
    for (Eigen::Index j = 0; j < feature_dim; ++j) projection.col(j) = table.Row("P/" + std::to_string(j));
    model.head.projection = std::move(projection);
  }
  if (extra_footer_json != nullptr) *extra_footer_json = footer.value("extra", json::object()).dump();
  return model;
}

void SaveCheckpoint(const TrainedModel& model, const std::filesystem::path& path, const std::string& extra_footer_json) {
  SaveEmbeddings(CheckpointToTable(model, extra_footer_json), path);
}

TrainedModel LoadCheckpoint(const std::filesystem::path& path, std::string* extra_footer_json) {
  return CheckpointFromTable(LoadEmbeddings(path), extra_footer_json);
}

}  // namespace hdg
