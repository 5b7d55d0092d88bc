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

#ifndef HDG_TRAINER_H_
#define HDG_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdg/loss.h"
#include "hdg/manifest.h"
#include "hdg/splits.h"
#include "hdg/teacher.h"

namespace hdg {

enum class Objective { kErm, kClipBase, kSciPd };

std::string_view ObjectiveName(Objective objective);
Objective ParseObjective(std::string_view name);

struct TrainerConfig {
  Objective objective = Objective::kSciPd;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 5.0;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  PerturbationConfig perturbation;
  double unknown_threshold = 0.5;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainedModel {
  ClassifierHead head;  // snapshot at selected_epoch
  std::vector<std::string> class_order;
  std::vector<EpochRecord> history;
  std::vector<double> step_losses;  // every optimizer step, in order
  int selected_epoch = 0;
};

/// Mini-batch SGD with momentum on the head, one seeded shuffle per epoch,
/// keeping the epoch with the best closed-set validation accuracy (earliest
/// on ties). `teacher` is required unless the objective is ERM; `texts` is
/// required for SCI-PD and fixes the shared dimension when present.
TrainedModel Train(const EvalTask& task, const LabelSpace& label_space, const EmbeddingTable& features,
                   const TeacherScores* teacher, const EmbeddingTable* texts, const TrainerConfig& cfg);

struct Prediction {
  std::string sample_id;
  std::optional<std::size_t> predicted;  // nullopt means UNKNOWN
  double max_prob = 0.0;
  std::string true_class;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct PredictionSet {
  std::vector<std::string> class_order;
  std::vector<Prediction> rows;

  /// Name of the predicted class, or "UNKNOWN".
  std::string PredictedName(const Prediction& row) const;
};

/// Softmax over logits; max probability below theta -> UNKNOWN, otherwise
/// argmax (lowest index on ties).
PredictionSet InferOpenSet(const TrainedModel& model, const EmbeddingTable& features,
                           const std::vector<Sample>& samples, double theta);

/// "sample_id<TAB>pred<TAB>max_prob<TAB>true_class" per line; pred is the
/// class index or UNKNOWN.
std::string PredictionsToTsv(const PredictionSet& predictions);
PredictionSet PredictionsFromTsv(std::string_view text, std::vector<std::string> class_order);

/// HDGE kind 4: rows "W/<class>" (N x d_t) and, for a learned projection,
/// "P/<j>" holding projection column j (d_f rows of length d_t). The JSON
/// footer carries the class order, selected epoch, history and
/// `extra_footer` (typically the training config).
EmbeddingTable CheckpointToTable(const TrainedModel& model, const std::string& extra_footer_json = "{}");
TrainedModel CheckpointFromTable(const EmbeddingTable& table, std::string* extra_footer_json = nullptr);
void SaveCheckpoint(const TrainedModel& model, const std::filesystem::path& path,
                    const std::string& extra_footer_json = "{}");
TrainedModel LoadCheckpoint(const std::filesystem::path& path, std::string* extra_footer_json = nullptr);

}  // namespace hdg

#endif  // HDG_TRAINER_H_
