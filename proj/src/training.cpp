#include "gcasim/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcasim/io_util.hpp"
#include "gcasim/tape.hpp"
#include "json.hpp"

namespace gcasim {

namespace {

std::size_t cluster_count_of(const std::vector<int>& labels) {
  int mx = -1;
  for (int l : labels) mx = std::max(mx, l);
  return static_cast<std::size_t>(mx + 1);
}

// Size-entropy band penalty. Labels are constants within a step, so this
// term carries no distance gradient.
double ent_band_term(const std::vector<int>& labels, const TrainConfig& cfg) {
  const std::size_t k = cluster_count_of(labels);
  if (k < 2) return 0.0;
  std::vector<double> counts(k, 0.0);
  for (int l : labels) counts[static_cast<std::size_t>(l)] += 1.0;
  const double n = static_cast<double>(labels.size());
  double h = 0;
  for (double c : counts) {
    if (c <= 0) continue;
    const double p = c / n;
    h -= p * std::log(p);
  }
  const double lnk = std::log(static_cast<double>(k));
  const double h_min = cfg.h_min_frac * lnk;
  const double h_max = cfg.h_max_frac * lnk;
  return std::max(h_min - h, 0.0) + std::max(h - h_max, 0.0);
}

// Mean softmax entropy across all gates of the triple, from precomputed
// probability tables.
double mean_triple_entropy(const GateProbs& fp, const GateProbs& ap, const GateProbs& up) {
  const double total = static_cast<double>(fp.size() + ap.size() + up.size());
  return (sum_gate_entropy(fp) + sum_gate_entropy(ap) + sum_gate_entropy(up)) / total;
}

void check_loss_args(const DistanceMatrix& dist, const std::vector<int>& labels) {
  if (labels.size() != dist.size())
    throw ValidationError("loss: label count does not match the distance matrix");
  if (labels.size() < 2) throw ValidationError("loss: need at least two items");
}

// Mean separation gap: mean inter-cluster minus mean intra-cluster distance
// over unordered pairs, row order. Shared by the value and tape paths.
struct MarginParts {
  double sum_intra = 0, sum_inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
};

MarginParts margin_counts(const std::vector<int>& labels) {
  MarginParts m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j])
        ++m.n_intra;
      else
        ++m.n_inter;
    }
  }
  return m;
}

double margin_term_value(const DistanceMatrix& dist, const std::vector<int>& labels,
                         double margin) {
  MarginParts m = margin_counts(labels);
  double sum_intra = 0, sum_inter = 0;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j])
        sum_intra += dist.at(i, j);
      else
        sum_inter += dist.at(i, j);
    }
  }
  const double mean_intra = m.n_intra > 0 ? sum_intra / static_cast<double>(m.n_intra) : 0.0;
  const double mean_inter = m.n_inter > 0 ? sum_inter / static_cast<double>(m.n_inter) : 0.0;
  const double gap = mean_inter - mean_intra;
  return std::max(margin - gap, 0.0);
}

// Tape replica of soft_silhouette + the margin hinge, producing the head
// gradient w.r.t. every distance-matrix entry. The arithmetic mirrors the
// double-precision implementations operation for operation so the reported
// term values are bit-identical.
struct HeadGrads {
  double soft_sil = 0;
  double margin_term = 0;
  std::vector<double> ddist;  // n x n, symmetric, d(weighted head)/dD
};

HeadGrads cluster_head_grads(const DistanceMatrix& dist, const std::vector<int>& labels,
                             const std::vector<std::size_t>& medoids, const TrainConfig& cfg) {
  const std::size_t n = labels.size();
  const std::size_t k = cluster_count_of(labels);
  const double temperature = cfg.select.temperature;
  if (temperature <= 0) throw ConfigError("loss: temperature must be positive");
  if (k < 2) throw ValidationError("loss: need at least two clusters");
  if (medoids.size() != k) throw ConfigError("loss: medoid count mismatch");

  Tape tape;
  std::vector<Var> d;  // full n x n leaf table; diagonal adjoints discarded
  d.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d.emplace_back(tape, dist.at(i, j));
  const Var zero(tape, 0.0);
  auto dat = [&](std::size_t i, std::size_t j) -> const Var& { return d[i * n + j]; };

  // Soft assignments p[i][c]: softmax of -d(i, medoid_c)/temperature. The
  // max shift is a value-level constant; softmax is shift-invariant, so
  // holding it fixed gives the exact derivative.
  std::vector<std::vector<Var>> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Var> raw;
    raw.reserve(k);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      raw.push_back(vneg(dat(i, medoids[c])) / temperature);
      mx = std::max(mx, raw.back().v);
    }
    std::vector<Var> e;
    e.reserve(k);
    Var sum = zero;
    bool first = true;
    for (std::size_t c = 0; c < k; ++c) {
      e.push_back(vexp(raw[c] - mx));
      sum = first ? e.back() : sum + e.back();
      first = false;
    }
    p[i].reserve(k);
    for (std::size_t c = 0; c < k; ++c) p[i].push_back(e[c] / sum);
  }

  std::vector<Var> wsum(k, zero);
  {
    std::vector<bool> started(k, false);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < k; ++c) {
        wsum[c] = started[c] ? wsum[c] + p[j][c] : p[j][c];
        started[c] = true;
      }
    }
  }

  Var total = zero;
  bool total_started = false;
  std::vector<Var> dtil(k, zero);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      Var num = zero;
      bool num_started = false;
      for (std::size_t j = 0; j < n; ++j) {
        const Var term = p[j][c] * dat(i, j);
        num = num_started ? num + term : term;
        num_started = true;
      }
      const Var denom = wsum[c] - p[i][c];
      dtil[c] = denom.v > 0 ? num / denom : zero;
    }
    Var mix = zero;
    bool mix_started = false;
    for (std::size_t c = 0; c < k; ++c) {
      const Var a = dtil[c];
      Var b = zero;
      bool b_started = false;
      for (std::size_t c2 = 0; c2 < k; ++c2) {
        if (c2 == c) continue;
        b = b_started ? vmin(b, dtil[c2]) : dtil[c2];
        b_started = true;
      }
      const Var denom = vmax(a, b);
      const Var s = denom.v > 0 ? (b - a) / denom : zero;
      const Var term = p[i][c] * s;
      mix = mix_started ? mix + term : term;
      mix_started = true;
    }
    total = total_started ? total + mix : mix;
    total_started = true;
  }
  const Var soft_sil = total / static_cast<double>(n);

  // Margin hinge on the inter/intra separation, same pair order as the
  // value path.
  const MarginParts mc = margin_counts(labels);
  Var sum_intra = zero, sum_inter = zero;
  bool intra_started = false, inter_started = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) {
        sum_intra = intra_started ? sum_intra + dat(i, j) : dat(i, j);
        intra_started = true;
      } else {
        sum_inter = inter_started ? sum_inter + dat(i, j) : dat(i, j);
        inter_started = true;
      }
    }
  }
  const Var mean_intra = mc.n_intra > 0 ? sum_intra / static_cast<double>(mc.n_intra) : zero;
  const Var mean_inter = mc.n_inter > 0 ? sum_inter / static_cast<double>(mc.n_inter) : zero;
  const Var gap = mean_inter - mean_intra;
  const Var margin_term = vrelu(cfg.margin - gap);

  const Var head = cfg.alpha * (1.0 - soft_sil) + cfg.gamma * margin_term;
  const std::vector<double> adj = tape.gradient(head.idx);

  HeadGrads out;
  out.soft_sil = soft_sil.v;
  out.margin_term = margin_term.v;
  out.ddist.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = adj[static_cast<std::size_t>(d[i * n + j].idx)] +
                       adj[static_cast<std::size_t>(d[j * n + i].idx)];
      out.ddist[i * n + j] = g;
      out.ddist[j * n + i] = g;
    }
  }
  return out;
}

LossBreakdown assemble_breakdown(double soft_sil, double hard_term, double margin_term,
                                 double ent_term, const TrainConfig& cfg) {
  LossBreakdown b;
  b.soft_sil = soft_sil;
  b.sil_term = 1.0 - soft_sil;
  b.hard_term = hard_term;
  b.margin_term = margin_term;
  b.ent_term = ent_term;
  b.total = cfg.alpha * b.sil_term + cfg.beta * b.hard_term + cfg.gamma * b.margin_term +
            cfg.delta * b.ent_term;
  return b;
}

std::vector<StateTrace> soft_traces(const GateTriple& triple,
                                    const std::vector<const SpatialNetwork*>& nets,
                                    const TrainConfig& cfg) {
  const RuleSpec rule = gate_rule(triple, RuleMode::Soft);
  std::vector<StateTrace> traces(nets.size());
  for (std::size_t i = 0; i < nets.size(); ++i)
    traces[i] = evolve(*nets[i], rule, cfg.dist.iterations);
  return traces;
}

std::vector<std::string> index_names(std::size_t n) {
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = std::to_string(i);
  return names;
}

CorpusLossGrads corpus_loss_grads_with_traces(const GateTriple& triple,
                                              const std::vector<const SpatialNetwork*>& nets,
                                              const std::vector<StateTrace>& traces,
                                              const DistanceMatrix& dist,
                                              const std::vector<int>& labels,
                                              const std::vector<std::size_t>& medoids,
                                              const TrainConfig& cfg) {
  check_loss_args(dist, labels);
  const SoftRuleContext ctx = make_soft_context(triple);
  const HeadGrads head = cluster_head_grads(dist, labels, medoids, cfg);
  const double hard_term =
      mean_triple_entropy(ctx.fusion_probs, ctx.attention_probs, ctx.update_probs);

  CorpusLossGrads out;
  out.breakdown = assemble_breakdown(head.soft_sil, hard_term, head.margin_term,
                                     ent_band_term(labels, cfg), cfg);
  out.grads = zero_grads(triple);

  const std::size_t n = nets.size();
  const std::size_t steps = cfg.dist.iterations;
  std::vector<std::vector<std::vector<double>>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    adj[i].assign(steps + 1, std::vector<double>(nets[i]->node_count(), 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = head.ddist[i * n + j];
      if (g == 0) continue;
      pair_distance_backward(traces[i], traces[j], cfg.dist, g, adj[i], adj[j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    evolve_backward(*nets[i], ctx, traces[i], adj[i], out.grads);

  const double total_gates = static_cast<double>(
      ctx.fusion_probs.size() + ctx.attention_probs.size() + ctx.update_probs.size());
  add_entropy_gradient(ctx.fusion_probs, cfg.beta / total_gates, out.grads.fusion);
  add_entropy_gradient(ctx.attention_probs, cfg.beta / total_gates, out.grads.attention);
  add_entropy_gradient(ctx.update_probs, cfg.beta / total_gates, out.grads.update);
  return out;
}

void apply_gd_step(GateNetwork& net, const LogitGrads& grads, double lr, double clip) {
  std::size_t g = 0;
  for (auto& layer : net.layers) {
    for (auto& gate : layer) {
      for (int k = 0; k < kGateOpCount; ++k) {
        const double gk = std::clamp(grads[g][k], -clip, clip);
        gate.logits[static_cast<std::size_t>(k)] -= lr * gk;
      }
      ++g;
    }
  }
}

std::vector<const SpatialNetwork*> net_ptrs(const NetworkGroup& group) {
  std::vector<const SpatialNetwork*> ptrs;
  ptrs.reserve(group.nets.size());
  for (const auto& net : group.nets) ptrs.push_back(&net);
  return ptrs;
}

void check_group(const NetworkGroup& group) {
  if (group.nets.size() < 3)
    throw ConfigError("group '" + group.name + "' needs at least three networks");
  if (group.net_names.size() != group.nets.size())
    throw ConfigError("group '" + group.name + "' name/network count mismatch");
}

}  // namespace

GroupSet load_group_set(const std::filesystem::path& path, Warnings* warnings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("group set " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("group set " + path.string() + ": expected an object");
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  auto load_side = [&](const char* key) {
    std::vector<NetworkGroup> side;
    if (!j.contains(key)) return side;
    if (!j.at(key).is_array()) throw ParseError(std::string("group set: ") + key + " must be an array");
    for (const auto& gj : j.at(key)) {
      if (!gj.is_object() || !gj.contains("name") || !gj.contains("networks"))
        throw ParseError("group set: each group needs name and networks");
      NetworkGroup group;
      group.name = gj.at("name").get<std::string>();
      for (const auto& pj : gj.at("networks")) {
        const std::filesystem::path raw = pj.get<std::string>();
        const std::filesystem::path full = raw.is_absolute() ? raw : base / raw;
        group.net_names.push_back(raw.string());
        group.nets.push_back(load_network(full, NetworkFormat::Auto, warnings));
      }
      side.push_back(std::move(group));
    }
    return side;
  };

  GroupSet set;
  set.training = load_side("training");
  set.validation = load_side("validation");
  if (set.training.empty() && set.validation.empty())
    throw ConfigError("group set: no groups defined");
  return set;
}

ValidationReport validate_rule(const RuleSpec& rule, const std::vector<NetworkGroup>& groups,
                               const TrainConfig& cfg) {
  if (groups.empty()) throw ConfigError("validate: no groups");
  ValidationReport report;
  double sum = 0;
  for (const auto& group : groups) {
    check_group(group);
    const DistanceMatrix dist = distance_matrix(net_ptrs(group), group.net_names, rule, cfg.dist);
    const ClusterResult res = select_k(dist, cfg.select);
    GroupEval ev;
    ev.group = group.name;
    ev.k = res.k;
    ev.sil = res.sil;
    ev.soft_sil = res.soft_sil;
    ev.ch = res.ch;
    ev.db = res.db;
    ev.degenerate = res.degenerate;
    sum += ev.sil;
    report.groups.push_back(std::move(ev));
  }
  report.mean_sil = sum / static_cast<double>(report.groups.size());
  return report;
}

LossBreakdown loss_total(const DistanceMatrix& dist, const std::vector<int>& labels,
                         const GateTriple& triple, const TrainConfig& cfg,
                         const std::vector<std::size_t>* medoids) {
  check_loss_args(dist, labels);
  const double soft = soft_silhouette(dist, labels, cfg.select.temperature, medoids);
  const double hard = mean_triple_entropy(softmax_probs(triple.fusion),
                                          softmax_probs(triple.attention),
                                          softmax_probs(triple.update));
  return assemble_breakdown(soft, hard, margin_term_value(dist, labels, cfg.margin),
                            ent_band_term(labels, cfg), cfg);
}

LossBreakdown soft_corpus_loss(const GateTriple& triple,
                               const std::vector<const SpatialNetwork*>& nets,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& medoids, const TrainConfig& cfg) {
  const std::vector<StateTrace> traces = soft_traces(triple, nets, cfg);
  const DistanceMatrix dist =
      distance_matrix_from_traces(traces, index_names(nets.size()), cfg.dist);
  return loss_total(dist, labels, triple, cfg, &medoids);
}

CorpusLossGrads soft_corpus_loss_grads(const GateTriple& triple,
                                       const std::vector<const SpatialNetwork*>& nets,
                                       const std::vector<int>& labels,
                                       const std::vector<std::size_t>& medoids,
                                       const TrainConfig& cfg) {
  const std::vector<StateTrace> traces = soft_traces(triple, nets, cfg);
  const DistanceMatrix dist =
      distance_matrix_from_traces(traces, index_names(nets.size()), cfg.dist);
  return corpus_loss_grads_with_traces(triple, nets, traces, dist, labels, medoids, cfg);
}

ExploreResult random_explore(const GroupSet& groups, const TrainConfig& cfg) {
  if (cfg.budget == 0) throw ConfigError("explore: budget must be positive");
  if (groups.validation.empty()) throw ConfigError("explore: validation groups required");

  ExploreResult out;
  out.base = default_gate_triple(derive_seed(cfg.seed, 1), LogitInit::UniformZero);

  auto sample_triple = [&](std::uint64_t op_seed) {
    HardGateTriple t;
    t.fusion = sample_dominant(out.base.fusion, derive_seed(op_seed, 1));
    t.attention = sample_dominant(out.base.attention, derive_seed(op_seed, 2));
    t.update = sample_dominant(out.base.update, derive_seed(op_seed, 3));
    return t;
  };

  out.ranked.reserve(cfg.budget);
  for (std::size_t i = 0; i < cfg.budget; ++i) {
    CandidateRecord rec;
    rec.index = i;
    rec.op_seed = derive_seed(cfg.seed, 1000 + i);
    const RuleSpec rule = hard_gate_rule(sample_triple(rec.op_seed));
    rec.mean_val_sil = validate_rule(rule, groups.validation, cfg).mean_sil;
    out.ranked.push_back(rec);
  }
  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const CandidateRecord& a, const CandidateRecord& b) {
              if (a.mean_val_sil != b.mean_val_sil) return a.mean_val_sil > b.mean_val_sil;
              return a.index < b.index;
            });
  out.best = sample_triple(out.ranked.front().op_seed);
  out.promoted = out.ranked.front().mean_val_sil >= cfg.explore_threshold;
  return out;
}

TrainResult fine_tune(const GateTriple& start, const GroupSet& groups, const TrainConfig& cfg) {
  if (groups.training.empty()) throw ConfigError("fine_tune: training groups required");
  if (groups.validation.empty()) throw ConfigError("fine_tune: validation groups required");
  for (const auto& g : groups.training) check_group(g);

  GateTriple triple = start;
  TrainResult out;
  out.best_rule = gate_rule(triple, RuleMode::Hard);
  out.best_val_sil = validate_rule(out.best_rule, groups.validation, cfg).mean_sil;

  for (std::size_t gi = 0; gi < groups.training.size(); ++gi) {
    const NetworkGroup& group = groups.training[gi];
    const std::vector<const SpatialNetwork*> nets = net_ptrs(group);
    for (std::size_t epoch = 1; epoch <= cfg.epochs_per_group; ++epoch) {
      const std::vector<StateTrace> traces = soft_traces(triple, nets, cfg);
      const DistanceMatrix dist = distance_matrix_from_traces(traces, group.net_names, cfg.dist);
      const ClusterResult sel = select_k(dist, cfg.select);
      const std::vector<std::size_t> medoids = medoids_for_labels(dist, sel.labels);
      const CorpusLossGrads step =
          corpus_loss_grads_with_traces(triple, nets, traces, dist, sel.labels, medoids, cfg);

      EpochRecord rec;
      rec.group_index = gi;
      rec.epoch = epoch;
      rec.loss = step.breakdown;
      rec.k = sel.k;

      if (!std::isfinite(step.breakdown.total)) {
        rec.val_mean_sil = out.best_val_sil;
        out.history.push_back(rec);
        out.aborted_non_finite = true;
        return out;
      }

      apply_gd_step(triple.fusion, step.grads.fusion, cfg.lr, cfg.grad_clip);
      apply_gd_step(triple.attention, step.grads.attention, cfg.lr, cfg.grad_clip);
      apply_gd_step(triple.update, step.grads.update, cfg.lr, cfg.grad_clip);

      const RuleSpec hard_now = gate_rule(triple, RuleMode::Hard);
      rec.val_mean_sil = validate_rule(hard_now, groups.validation, cfg).mean_sil;
      rec.new_best = rec.val_mean_sil > out.best_val_sil;
      if (rec.new_best) {
        out.best_val_sil = rec.val_mean_sil;
        out.best_rule = hard_now;
      }
      out.history.push_back(rec);
      if (rec.val_mean_sil >= cfg.target_silhouette) {
        out.reached_target = true;
        return out;
      }
    }
  }
  return out;
}

PipelineResult train_pipeline(const GroupSet& groups, const TrainConfig& cfg) {
  PipelineResult out;
  out.explore = random_explore(groups, cfg);
  if (out.explore.promoted) {
    const GateTriple start = soften(out.explore.best, cfg.dominant_logit);
    out.tuned = fine_tune(start, groups, cfg);
    out.final_rule = out.tuned->best_rule;
    out.final_val_sil = out.tuned->best_val_sil;
  } else {
    out.final_rule = hard_gate_rule(out.explore.best);
    out.final_val_sil = out.explore.ranked.front().mean_val_sil;
  }
  return out;
}

std::string train_config_digest(const TrainConfig& cfg) {
  std::ostringstream s;
  s << "alpha=" << fmt_double(cfg.alpha) << ";beta=" << fmt_double(cfg.beta)
    << ";gamma=" << fmt_double(cfg.gamma) << ";delta=" << fmt_double(cfg.delta)
    << ";margin=" << fmt_double(cfg.margin) << ";h_min=" << fmt_double(cfg.h_min_frac)
    << ";h_max=" << fmt_double(cfg.h_max_frac) << ";lr=" << fmt_double(cfg.lr)
    << ";clip=" << fmt_double(cfg.grad_clip)
    << ";explore_threshold=" << fmt_double(cfg.explore_threshold)
    << ";target=" << fmt_double(cfg.target_silhouette) << ";epochs=" << cfg.epochs_per_group
    << ";budget=" << cfg.budget << ";seed=" << cfg.seed
    << ";dominant=" << fmt_double(cfg.dominant_logit) << ";iters=" << cfg.dist.iterations
    << ";bins=" << cfg.dist.bins << ";t0=" << (cfg.dist.include_t0 ? 1 : 0)
    << ";kmin=" << cfg.select.k_min << ";kmax=" << cfg.select.k_max
    << ";temp=" << fmt_double(cfg.select.temperature);
  return hex64(fnv1a64(s.str()));
}

}  // namespace gcasim
