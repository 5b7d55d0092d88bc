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

#include "hdg/cli.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "hdg/embedding_io.h"
#include "hdg/gradcheck.h"
#include "hdg/manifest.h"
#include "hdg/metrics.h"
#include "hdg/splits.h"
#include "hdg/synth.h"
#include "hdg/teacher.h"
#include "hdg/trainer.h"
#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::map<std::string, std::string> ParseConfigText(std::string_view text) {
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "expected key = value", "config line " + std::to_string(line_no));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    if (key.empty()) throw Error(ErrorCode::kParse, "empty key", "config line " + std::to_string(line_no));
    values[key] = value;
  }
  return values;
}

std::map<std::string, std::string> LoadConfigFile(const fs::path& path) { return ParseConfigText(ReadFile(path)); }

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

namespace {

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw Error(ErrorCode::kIo, "cannot open ledger", path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIo, "cannot lock ledger", path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

std::vector<std::string> SplitLines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

bool RunLedger::AppendIfAbsent(const std::string& run_id, const std::string& json_line) const {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  FileLock lock(path_);
  for (const auto& line : SplitLines(ReadFile(path_))) {
    try {
      if (json::parse(line).value("run_id", "") == run_id) return false;
    } catch (const json::exception&) {
      throw Error(ErrorCode::kParse, "corrupt ledger line", path_.string());
    }
  }
  const std::string record = json_line + "\n";
  if (::write(lock.fd(), record.data(), record.size()) != static_cast<ssize_t>(record.size())) {
    throw Error(ErrorCode::kIo, "ledger append failed", path_.string());
  }
  return true;
}

std::vector<std::string> RunLedger::ReadLines() const {
  if (!fs::exists(path_)) throw Error(ErrorCode::kIo, "ledger does not exist", path_.string());
  return SplitLines(ReadFile(path_));
}

namespace {

std::string Dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Resolves a setting with precedence: command-line flag > config file >
// built-in default.
class Settings {
 public:
  Settings(const CLI::App& root, const CLI::App& sub, const std::map<std::string, std::string>& flags,
           std::map<std::string, std::string> file)
      : root_(root), sub_(sub), flags_(flags), file_(std::move(file)) {}

  bool Has(const std::string& key) const { return FromFlag(key) != nullptr || file_.contains(key); }

  std::string Str(const std::string& key, const std::string& fallback = {}) const {
    if (const std::string* v = FromFlag(key)) return *v;
    if (auto it = file_.find(key); it != file_.end()) return it->second;
    return fallback;
  }

  std::string Required(const std::string& key) const {
    if (!Has(key)) throw Error(ErrorCode::kInvalidArgument, "missing required setting " + Dashed(key));
    return Str(key);
  }

  double Real(const std::string& key, double fallback) const {
    if (!Has(key)) return fallback;
    const std::string v = Str(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "setting " + Dashed(key) + " is not a number: '" + v + "'");
    }
  }

  long long Int(const std::string& key, long long fallback) const {
    if (!Has(key)) return fallback;
    const std::string v = Str(key);
    try {
      std::size_t used = 0;
      const long long i = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "setting " + Dashed(key) + " is not an integer: '" + v + "'");
    }
  }

  std::uint64_t Seed(std::uint64_t fallback) const {
    if (!Has("seed")) return fallback;
    const std::string v = Str("seed");
    try {
      std::size_t used = 0;
      const unsigned long long s = std::stoull(v, &used);
      if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
      return s;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "--seed is not an unsigned integer: '" + v + "'");
    }
  }

 private:
  const std::string* FromFlag(const std::string& key) const {
    const std::string name = Dashed(key);
    for (const CLI::App* app : {&sub_, &root_}) {
      const CLI::Option* opt = app->get_option_no_throw(name);
      if (opt != nullptr && opt->count() > 0) {
        auto it = flags_.find(key);
        if (it != flags_.end()) return &it->second;
      }
    }
    return nullptr;
  }

  const CLI::App& root_;
  const CLI::App& sub_;
  const std::map<std::string, std::string>& flags_;
  std::map<std::string, std::string> file_;
};

std::vector<Rational> ParseTargets(const std::string& text, std::int64_t num_sources) {
  if (text.empty() || text == "preset") return PresetHybridness(num_sources);
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(Rational::Parse(item));
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "no hybridness targets given");
  return out;
}

std::string LevelTag(const SplitPlan& split) {
  return std::to_string(split.pool_size) + "of" + std::to_string(split.num_known);
}

fs::path OutDir(const Settings& s, const std::string& fallback = ".") {
  fs::path dir = s.Str("out_dir", fallback);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------- synth

int CmdSynth(const Settings& s, std::ostream& out) {
  SynthConfig cfg;
  cfg.num_known = static_cast<int>(s.Int("num_known", cfg.num_known));
  cfg.num_unknown = static_cast<int>(s.Int("num_unknown", cfg.num_unknown));
  cfg.num_domains = static_cast<int>(s.Int("num_domains", cfg.num_domains));
  cfg.samples_per_class_per_domain = static_cast<int>(s.Int("samples_per_class", cfg.samples_per_class_per_domain));
  cfg.dim = static_cast<int>(s.Int("dim", cfg.dim));
  cfg.domain_shift = s.Real("domain_shift", cfg.domain_shift);
  cfg.noise_sigma = s.Real("noise_sigma", cfg.noise_sigma);
  cfg.teacher_fidelity = s.Real("teacher_fidelity", cfg.teacher_fidelity);
  cfg.seed = s.Seed(cfg.seed);
  const fs::path dir = OutDir(s);
  const SynthData data = Generate(cfg);
  WriteSynthData(data, dir);
  out << "wrote " << (dir / "manifest.json").string() << " (" << data.manifest.domains.size() << " domains, "
      << data.student_features.size() << " samples)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- split

int CmdSplit(const Settings& s, std::ostream& out) {
  const DatasetManifest manifest = LoadManifest(s.Required("manifest"));
  const auto num_sources = static_cast<std::int64_t>(manifest.domains.size()) - 1;
  const std::vector<Rational> targets = ParseTargets(s.Str("targets", "preset"), num_sources);
  const double val_fraction = s.Real("val_fraction", kDefaultValFraction);
  const std::uint64_t seed = s.Seed(0);
  const std::vector<EvalTask> tasks = LeaveOneDomainOut(manifest, targets, val_fraction, seed);
  const fs::path dir = OutDir(s);
  json index = json::array();
  for (const EvalTask& task : tasks) {
    const std::string name = task.split.target_domain + "__h" + LevelTag(task.split) + ".json";
    WriteFileAtomic(dir / name, SplitPlanToJson(task.split, val_fraction));
    index.push_back(name);
    out << name << " H=" << Hybridness(task.split, task.split.num_known).ToString() << " train="
        << task.AllTrain().size() << " val=" << task.AllVal().size() << " test=" << task.test.size() << "\n";
  }
  WriteFileAtomic(dir / "splits.json", index.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- train

TrainerConfig TrainerConfigFrom(const Settings& s) {
  TrainerConfig cfg;
  cfg.objective = ParseObjective(s.Str("objective", "scipd"));
  cfg.epochs = static_cast<int>(s.Int("epochs", cfg.epochs));
  cfg.batch_size = static_cast<int>(s.Int("batch_size", cfg.batch_size));
  cfg.learning_rate = s.Real("learning_rate", cfg.learning_rate);
  cfg.momentum = s.Real("momentum", cfg.momentum);
  cfg.weight_decay = s.Real("weight_decay", cfg.weight_decay);
  cfg.seed = s.Seed(cfg.seed);
  cfg.perturbation.tau = s.Real("tau", cfg.perturbation.tau);
  cfg.perturbation.alpha = s.Real("alpha", cfg.perturbation.alpha);
  cfg.perturbation.beta = s.Real("beta", cfg.perturbation.beta);
  cfg.perturbation.lambda = s.Real("lambda", cfg.perturbation.lambda);
  cfg.unknown_threshold = s.Real("theta", cfg.unknown_threshold);
  cfg.Validate();
  return cfg;
}

json TrainerConfigJson(const TrainerConfig& cfg) {
  return json{{"objective", ObjectiveName(cfg.objective)},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"momentum", cfg.momentum},
              {"weight_decay", cfg.weight_decay},
              {"seed", cfg.seed},
              {"tau", cfg.perturbation.tau},
              {"alpha", cfg.perturbation.alpha},
              {"beta", cfg.perturbation.beta},
              {"lambda", cfg.perturbation.lambda},
              {"theta", cfg.unknown_threshold}};
}

int CmdTrain(const Settings& s, std::ostream& out) {
  const fs::path manifest_path = s.Required("manifest");
  const fs::path split_path = s.Required("split");
  const fs::path features_path = s.Required("features");
  const TrainerConfig cfg = TrainerConfigFrom(s);

  const DatasetManifest manifest = LoadManifest(manifest_path);
  double val_fraction = kDefaultValFraction;
  const SplitPlan split = SplitPlanFromJson(ReadFile(split_path), &val_fraction);
  const EvalTask task = MakeEvalTask(manifest, split, val_fraction, split.seed);
  const EmbeddingTable features = LoadEmbeddings(features_path);

  std::optional<EmbeddingTable> texts;
  std::optional<TeacherScores> teacher;
  json inputs = {{"manifest", manifest_path.string()}, {"split", split_path.string()}, {"features", features_path.string()}};
  if (cfg.objective != Objective::kErm) {
    const fs::path text_path = s.Required("teacher_text");
    texts = LoadEmbeddings(text_path);
    inputs["teacher_text"] = text_path.string();
    // Inputs are recorded as requested, not by which path served them, so a
    // rerun that hits the cache keeps its run id.
    const std::string cache = s.Str("teacher_cache");
    if (s.Has("teacher_image")) inputs["teacher_image"] = s.Str("teacher_image");
    if (!cache.empty()) inputs["teacher_cache"] = cache;
    if (!cache.empty() && fs::exists(cache)) {
      teacher = LoadTeacherScores(cache);
    } else {
      const fs::path image_path = s.Required("teacher_image");
      teacher = ComputeTeacherScores(LoadEmbeddings(image_path), *texts, cfg.perturbation.lambda);
      if (!cache.empty()) {
        // Reload so a first run and later cached runs see identical f32-rounded scores.
        SaveTeacherScores(*teacher, cache);
        teacher = LoadTeacherScores(cache);
      }
    }
  }

  json config = {{"trainer", TrainerConfigJson(cfg)},
                 {"task",
                  {{"target_domain", split.target_domain},
                   {"hybridness", std::to_string(split.pool_size) + "/" + std::to_string(split.num_known)},
                   {"split_seed", split.seed},
                   {"val_fraction", val_fraction}}},
                 {"inputs", inputs}};
  const std::string digest = Sha256Hex(config.dump());
  const std::string run_id = std::string(ObjectiveName(cfg.objective)) + "-" + split.target_domain + "-h" +
                             LevelTag(split) + "-" + digest.substr(0, 12);

  const TrainedModel model = Train(task, manifest.label_space, features, teacher ? &*teacher : nullptr,
                                   texts ? &*texts : nullptr, cfg);
  const fs::path dir = OutDir(s);
  const fs::path checkpoint = dir / (run_id + ".ckpt.hdge");
  json extra = {{"run_id", run_id}, {"digest", digest}, {"config", config}};
  SaveCheckpoint(model, checkpoint, extra.dump());

  const auto& selected = model.history.at(static_cast<std::size_t>(model.selected_epoch - 1));
  json record = {{"run_id", run_id},
                 {"stage", "train"},
                 {"timestamp", UtcTimestamp()},
                 {"digest", digest},
                 {"config", config},
                 {"task",
                  {{"target_domain", split.target_domain},
                   {"hybridness", split.hybridness_target.ToString()},
                   {"objective", ObjectiveName(cfg.objective)},
                   {"seed", cfg.seed}}},
                 {"metrics", {{"selected_epoch", model.selected_epoch}, {"val_accuracy", selected.val_accuracy}}},
                 {"artifacts", {{"checkpoint", checkpoint.string()}}}};
  if (s.Has("ledger")) RunLedger(s.Str("ledger")).AppendIfAbsent(run_id, record.dump());
  out << run_id << " selected_epoch=" << model.selected_epoch << " val_accuracy=" << selected.val_accuracy
      << " checkpoint=" << checkpoint.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

int CmdEval(const Settings& s, std::ostream& out) {
  const fs::path checkpoint_path = s.Required("checkpoint");
  std::string extra_text;
  const TrainedModel model = LoadCheckpoint(checkpoint_path, &extra_text);
  const json extra = json::parse(extra_text);
  const json train_config = extra.value("config", json::object());

  const fs::path manifest_path = s.Has("manifest") ? fs::path(s.Str("manifest"))
                                                   : fs::path(train_config.at("inputs").at("manifest").get<std::string>());
  const fs::path split_path = s.Has("split") ? fs::path(s.Str("split"))
                                             : fs::path(train_config.at("inputs").at("split").get<std::string>());
  const fs::path features_path = s.Has("features")
                                     ? fs::path(s.Str("features"))
                                     : fs::path(train_config.at("inputs").at("features").get<std::string>());
  const double theta_default = train_config.contains("trainer") ? train_config["trainer"].value("theta", 0.5) : 0.5;
  const double theta = s.Real("theta", theta_default);

  const DatasetManifest manifest = LoadManifest(manifest_path);
  double val_fraction = kDefaultValFraction;
  const SplitPlan split = SplitPlanFromJson(ReadFile(split_path), &val_fraction);
  if (model.class_order != manifest.label_space.known()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint class order differs from the manifest's known classes");
  }
  const EmbeddingTable features = LoadEmbeddings(features_path);
  const std::vector<Sample>& test = manifest.Domain(split.target_domain).samples;
  const PredictionSet predictions = InferOpenSet(model, features, test, theta);

  CellMetrics m;
  m.acc_known = AccuracyKnown(predictions, manifest.label_space.known());
  m.acc_unknown = AccuracyUnknown(predictions, manifest.label_space.unknown());
  m.h_score = HScore(m.acc_known, m.acc_unknown);

  const std::string train_run = extra.value("run_id", checkpoint_path.stem().string());
  const std::string train_digest = extra.value("digest", "");
  json config = {{"train_run_id", train_run}, {"train_digest", train_digest}, {"theta", theta},
                 {"manifest", manifest_path.string()}, {"split", split_path.string()},
                 {"features", features_path.string()}};
  const std::string digest = Sha256Hex(config.dump());
  const std::string run_id = train_run + "-eval-" + digest.substr(0, 8);

  const fs::path dir = OutDir(s, checkpoint_path.parent_path().empty() ? "." : checkpoint_path.parent_path().string());
  const fs::path pred_path = dir / (run_id + ".predictions.tsv");
  WriteFileAtomic(pred_path, PredictionsToTsv(predictions));

  const json trainer = train_config.value("trainer", json::object());
  json record = {{"run_id", run_id},
                 {"stage", "eval"},
                 {"timestamp", UtcTimestamp()},
                 {"digest", digest},
                 {"config", config},
                 {"task",
                  {{"target_domain", split.target_domain},
                   {"hybridness", split.hybridness_target.ToString()},
                   {"objective", trainer.value("objective", "unknown")},
                   {"seed", trainer.value("seed", std::uint64_t{0})},
                   {"domains", manifest.DomainNames()}}},
                 {"metrics", {{"acc_known", m.acc_known}, {"acc_unknown", m.acc_unknown}, {"h_score", m.h_score}}},
                 {"artifacts", {{"checkpoint", checkpoint_path.string()}, {"predictions", pred_path.string()}}}};
  if (s.Has("ledger")) RunLedger(s.Str("ledger")).AppendIfAbsent(run_id, record.dump());
  out << json{{"run_id", run_id}, {"acc_known", m.acc_known}, {"acc_unknown", m.acc_unknown}, {"h_score", m.h_score}}.dump()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

int CmdReport(const Settings& s, std::ostream& out) {
  const RunLedger ledger(s.Required("ledger"));
  const std::string only = s.Str("objective");
  // objective -> (domain, level) -> latest metrics
  std::map<std::string, std::map<std::pair<std::string, std::string>, CellMetrics>> cells;
  std::map<std::string, std::set<std::string>> expected_domains;  // per objective, from the manifests
  for (const auto& line : ledger.ReadLines()) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::kParse, "corrupt ledger line", ledger.path().string());
    }
    if (rec.value("stage", "") != "eval") continue;
    const json& task = rec.at("task");
    const std::string objective = task.value("objective", "unknown");
    if (!only.empty() && objective != only) continue;
    if (task.contains("domains")) {
      for (const auto& d : task["domains"]) expected_domains[objective].insert(d.get<std::string>());
    }
    const json& metrics = rec.at("metrics");
    cells[objective][{task.at("target_domain").get<std::string>(), task.at("hybridness").get<std::string>()}] =
        CellMetrics{metrics.at("acc_known").get<double>(), metrics.at("acc_unknown").get<double>(),
                    metrics.at("h_score").get<double>()};
  }
  if (cells.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no eval records" + (only.empty() ? std::string() : " for objective " + only),
                ledger.path().string());
  }
  json combined = json::object();
  const bool write = s.Has("out_dir");
  for (const auto& [objective, grid] : cells) {
    std::vector<TaskResult> results;
    for (const auto& [key, m] : grid) results.push_back({key.first, Rational::Parse(key.second), m});
    const std::set<std::string>& domains = expected_domains[objective];
    const EvalReport report = Aggregate(results, {domains.begin(), domains.end()});
    const std::string table = RenderReportTable(report, objective);
    out << table << "\n";
    combined[objective] = json::parse(ReportToJson(report));
    if (write) {
      const fs::path dir = OutDir(s);
      WriteFileAtomic(dir / ("report_" + objective + ".txt"), table);
      WriteFileAtomic(dir / ("report_" + objective + ".json"), ReportToJson(report));
    }
  }
  if (write) WriteFileAtomic(OutDir(s) / "report.json", combined.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int CmdGradcheck(const Settings& s, std::ostream& out) {
  GradientSuiteOptions opts;
  opts.batches = static_cast<int>(s.Int("batches", opts.batches));
  opts.seed = s.Seed(opts.seed);
  opts.epsilon = s.Real("epsilon", opts.epsilon);
  opts.tolerance = s.Real("tolerance", opts.tolerance);
  if (opts.batches < 1) throw Error(ErrorCode::kInvalidArgument, "--batches must be >= 1");
  const GradientSuiteResult r = RunGradientSuite(opts);
  out << "batches=" << r.batches << " epsilon=" << opts.epsilon << " tolerance=" << opts.tolerance << "\n";
  out << "sip_loss/logits            " << r.sip.Describe() << "\n";
  out << "class_perturb_loss/W       " << r.class_perturb.Describe() << "\n";
  out << "total_loss/logits          " << r.total_logits.Describe() << "\n";
  out << "total_loss/W               " << r.total_weights.Describe() << "\n";
  out << "total_loss/projection      " << r.total_projection.Describe() << "\n";
  out << (r.passed ? "PASS" : "FAIL") << "\n";
  return r.passed ? kExitOk : kExitRuntime;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kDivergence:
    case ErrorCode::kNonDeterministic:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid domain generalization toolkit", "hdg"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  auto opt = [&flags](CLI::App* a, const std::string& key, const std::string& help) {
    return a->add_option(Dashed(key), flags[key], help);
  };
  opt(&app, "config", "key = value settings file (flags override it)");
  opt(&app, "seed", "random seed");
  opt(&app, "out_dir", "output directory");
  opt(&app, "ledger", "run ledger (JSON lines)");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  for (const char* k : {"num_known", "num_unknown", "num_domains", "samples_per_class", "dim", "domain_shift",
                        "noise_sigma", "teacher_fidelity"}) {
    opt(synth, k, k);
  }
  CLI::App* split = app.add_subcommand("split", "build leave-one-domain-out splits at target hybridness levels");
  opt(split, "manifest", "dataset manifest JSON");
  opt(split, "targets", "comma-separated levels such as 0,1/6,1/3,1 (default: preset)");
  opt(split, "val_fraction", "held-out validation fraction per class");

  CLI::App* train = app.add_subcommand("train", "train a head on one split");
  CLI::App* eval = app.add_subcommand("eval", "open-set evaluation of a checkpoint");
  for (CLI::App* a : {train, eval}) {
    opt(a, "manifest", "dataset manifest JSON");
    opt(a, "split", "split plan JSON");
    opt(a, "features", "student feature HDGE file");
    opt(a, "theta", "unknown-rejection threshold on max softmax probability");
  }
  for (const char* k : {"teacher_image", "teacher_text", "teacher_cache", "objective", "epochs", "batch_size",
                        "learning_rate", "momentum", "weight_decay", "tau", "alpha", "beta", "lambda"}) {
    opt(train, k, k);
  }
  opt(eval, "checkpoint", "checkpoint HDGE file");

  CLI::App* report = app.add_subcommand("report", "aggregate eval records from the ledger");
  opt(report, "objective", "restrict to one objective");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the loss gradients");
  for (const char* k : {"batches", "epsilon", "tolerance"}) opt(gradcheck, k, k);

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> argv_storage{"hdg"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error code=usage " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    std::map<std::string, std::string> file;
    if (app.get_option("--config")->count() > 0) file = LoadConfigFile(flags["config"]);
    const CLI::App* sub = app.get_subcommands().front();
    const Settings settings(app, *sub, flags, std::move(file));
    if (sub == synth) return CmdSynth(settings, out);
    if (sub == split) return CmdSplit(settings, out);
    if (sub == train) return CmdTrain(settings, out);
    if (sub == eval) return CmdEval(settings, out);
    if (sub == report) return CmdReport(settings, out);
    if (sub == gradcheck) return CmdGradcheck(settings, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error code=" << ErrorCodeName(e.code()) << " " << msg << "\n";
    return ExitCodeFor(e.code());
  } catch (const json::exception& e) {
    err << "error code=parse_error " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error code=runtime " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace hdg
