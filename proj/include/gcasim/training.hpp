#pragma once

#include <optional>

#include "gcasim/clustering.hpp"
#include "gcasim/engine.hpp"

namespace gcasim {

struct TrainConfig {
  // Loss weights: silhouette, hardening pressure, margin, size-entropy band.
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.5;
  double delta = 0.1;

  double margin = 0.1 * kLn2;
  double h_min_frac = 0.3;  // fractions of ln k bounding the size entropy
  double h_max_frac = 0.95;

  double lr = 0.05;
  double grad_clip = 10.0;  // per-component magnitude clamp

  double explore_threshold = 0.75;
  double target_silhouette = 0.9;
  std::size_t epochs_per_group = 10;
  std::size_t budget = 200;

  std::uint64_t seed = 0;
  double dominant_logit = 1.0;  // logit boost when promoting sampled ops

  PairDistanceConfig dist;
  SelectKConfig select;
};

struct NetworkGroup {
  std::string name;
  std::vector<std::string> net_names;
  std::vector<SpatialNetwork> nets;
};

struct GroupSet {
  std::vector<NetworkGroup> training;
  std::vector<NetworkGroup> validation;
};

// JSON file: {"training": [{"name": ..., "networks": [paths...]}, ...],
//             "validation": [...]}; paths resolve relative to the file.
GroupSet load_group_set(const std::filesystem::path& path, Warnings* warnings = nullptr);

struct GroupEval {
  std::string group;
  std::size_t k = 0;
  double sil = 0;
  double soft_sil = 0;
  double ch = 0;
  double db = 0;
  bool degenerate = false;
};

struct ValidationReport {
  std::vector<GroupEval> groups;
  double mean_sil = 0;
};

// Hard-mode evaluation: per group distance matrix, k selection, validity
// indices at the chosen k.
ValidationReport validate_rule(const RuleSpec& rule, const std::vector<NetworkGroup>& groups,
                               const TrainConfig& cfg);

struct LossBreakdown {
  double total = 0;
  double sil_term = 0;     // 1 - soft silhouette
  double soft_sil = 0;
  double hard_term = 0;    // mean gate softmax entropy
  double margin_term = 0;  // hinge on inter/intra separation
  double ent_term = 0;     // cluster-size entropy band penalty
};

// Training objective on a soft-mode distance matrix under fixed labels.
// Medoids default to the labels' medoids; pass them explicitly to pin them.
LossBreakdown loss_total(const DistanceMatrix& dist, const std::vector<int>& labels,
                         const GateTriple& triple, const TrainConfig& cfg,
                         const std::vector<std::size_t>* medoids = nullptr);

// Same objective evaluated end to end from the gate parameters on a fixed
// corpus with fixed labels/medoids (the loss head constants of one gradient
// step). Exposed for gradient checking.
LossBreakdown soft_corpus_loss(const GateTriple& triple,
                               const std::vector<const SpatialNetwork*>& nets,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& medoids, const TrainConfig& cfg);

// Gradient of soft_corpus_loss w.r.t. every gate logit.
struct CorpusLossGrads {
  LossBreakdown breakdown;
  TripleGrads grads;
};
CorpusLossGrads soft_corpus_loss_grads(const GateTriple& triple,
                                       const std::vector<const SpatialNetwork*>& nets,
                                       const std::vector<int>& labels,
                                       const std::vector<std::size_t>& medoids,
                                       const TrainConfig& cfg);

struct CandidateRecord {
  std::size_t index = 0;
  std::uint64_t op_seed = 0;
  double mean_val_sil = 0;
};

struct ExploreResult {
  std::vector<CandidateRecord> ranked;  // silhouette descending, index ascending
  HardGateTriple best;
  GateTriple base;  // wiring donor for all candidates (uniform-zero logits)
  bool promoted = false;
};

// Monte Carlo rule search: `budget` uniformly sampled dominant-op triples on
// one fixed wiring, each scored by mean validation silhouette in hard mode.
ExploreResult random_explore(const GroupSet& groups, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t group_index = 0;
  std::size_t epoch = 0;  // 1-based within the group
  LossBreakdown loss;
  std::size_t k = 0;  // clusters used for the epoch's labels
  double val_mean_sil = 0;
  bool new_best = false;
};

struct TrainResult {
  RuleSpec best_rule;  // soft parameters of the best checkpoint, hard mode
  double best_val_sil = 0;
  std::vector<EpochRecord> history;
  bool reached_target = false;
  bool aborted_non_finite = false;
};

// Full-batch gradient descent over the training groups (epochs_per_group
// each), tracking the hardened validation silhouette; returns the best
// checkpoint seen, which includes the untrained starting point.
TrainResult fine_tune(const GateTriple& start, const GroupSet& groups, const TrainConfig& cfg);

struct PipelineResult {
  ExploreResult explore;
  std::optional<TrainResult> tuned;
  RuleSpec final_rule;
  double final_val_sil = 0;
};

// Exploration followed by fine-tuning when the best candidate clears
// explore_threshold; otherwise the best sampled rule is returned as is.
PipelineResult train_pipeline(const GroupSet& groups, const TrainConfig& cfg);

// Stable digest of the training hyperparameters, embedded in run outputs.
std::string train_config_digest(const TrainConfig& cfg);

}  // namespace gcasim
