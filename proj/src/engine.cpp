#include "gcasim/engine.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gcasim/io_util.hpp"

namespace gcasim {

namespace {

// Sums values in ascending order so the result depends only on the multiset
// of addends, not on neighbor enumeration order.
double sorted_sum(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end());
  double s = 0;
  for (double v : buf) s += v;
  return s;
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

struct HalfEdgeEval {
  GateActivations f_acts;
  GateActivations a_acts;
  double f = 0;
  double w = 0;
  double wh = 0;
};

struct NodeScratch {
  std::vector<HalfEdgeEval> edges;
  std::vector<double> sortbuf;
  GateActivations u_acts;
  double m = 0;
  double out = 0;
};

// Evaluates fusion/attention/update for one node, recording activations.
void soft_node_forward(const SpatialNetwork& net, const SoftRuleContext& ctx,
                       const std::vector<double>& s, std::size_t u, NodeScratch& sc) {
  const auto& adj = net.adjacency[u];
  const std::size_t k = adj.size();
  if (sc.edges.size() < k) sc.edges.resize(k);
  const double su = s[u];

  for (std::size_t j = 0; j < k; ++j) {
    const std::uint32_t v = adj[j];
    const HalfEdgeFeature& feat = net.features[u][j];
    HalfEdgeEval& he = sc.edges[j];
    const double fin[2] = {su, s[v]};
    he.f = soft_forward_cached(ctx.triple->fusion, ctx.fusion_probs,
                               std::span<const double>(fin, 2), he.f_acts);
    const double ain[4] = {su, s[v], feat.d, feat.theta};
    he.w = soft_forward_cached(ctx.triple->attention, ctx.attention_probs,
                               std::span<const double>(ain, 4), he.a_acts);
  }

  sc.sortbuf.resize(k);
  for (std::size_t j = 0; j < k; ++j) sc.sortbuf[j] = std::abs(sc.edges[j].w);
  const double denom = sorted_sum(sc.sortbuf) + kAttentionEps;
  for (std::size_t j = 0; j < k; ++j) sc.edges[j].wh = sc.edges[j].w / denom;

  sc.sortbuf.resize(k);
  for (std::size_t j = 0; j < k; ++j) sc.sortbuf[j] = sc.edges[j].wh * sc.edges[j].f;
  sc.m = sorted_sum(sc.sortbuf);

  const double uin[2] = {su, sc.m};
  sc.out = soft_forward_cached(ctx.triple->update, ctx.update_probs,
                               std::span<const double>(uin, 2), sc.u_acts);
}

}  // namespace

HardGateTriple harden(const GateTriple& triple) {
  return {harden(triple.fusion), harden(triple.attention), harden(triple.update)};
}

GateTriple soften(const HardGateTriple& triple, double dominant_logit) {
  return {soften(triple.fusion, dominant_logit), soften(triple.attention, dominant_logit),
          soften(triple.update, dominant_logit)};
}

GateTriple default_gate_triple(std::uint64_t seed, LogitInit init) {
  GateTriple t;
  t.fusion = init_gate_network(2, {4, 2, 1}, derive_seed(seed, 1), init);
  t.attention = init_gate_network(4, {8, 4, 1}, derive_seed(seed, 2), init);
  t.update = init_gate_network(2, {16, 8, 4, 1}, derive_seed(seed, 3), init);
  return t;
}

HardGateTriple RuleSpec::hard_triple() const {
  if (hard.has_value()) return *hard;
  if (soft.has_value()) return harden(*soft);
  throw ConfigError("gate rule has neither soft parameters nor hard ops");
}

RuleSpec laplacian_rule() {
  RuleSpec r;
  r.kind = RuleKind::Laplacian;
  return r;
}

RuleSpec gate_rule(GateTriple triple, RuleMode mode) {
  RuleSpec r;
  r.kind = RuleKind::GateTriple;
  r.mode = mode;
  r.soft = std::move(triple);
  return r;
}

RuleSpec hard_gate_rule(HardGateTriple triple) {
  RuleSpec r;
  r.kind = RuleKind::GateTriple;
  r.mode = RuleMode::Hard;
  r.hard = std::move(triple);
  return r;
}

std::vector<double> laplacian_step(const SpatialNetwork& net, const std::vector<double>& states) {
  if (states.size() != net.node_count()) throw ConfigError("state vector size mismatch");
  std::vector<double> next(states.size());
  parallel_for(states.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf;
    for (std::size_t u = begin; u < end; ++u) {
      const auto& adj = net.adjacency[u];
      if (adj.empty()) {
        next[u] = states[u];
        continue;
      }
      buf.resize(adj.size());
      for (std::size_t j = 0; j < adj.size(); ++j) buf[j] = states[adj[j]];
      const double mean = sorted_sum(buf) / static_cast<double>(adj.size());
      next[u] = states[u] - mean;
      if (!std::isfinite(next[u])) {
        throw NumericError("non-finite state at node " + std::to_string(net.nodes[u].id));
      }
    }
  });
  return next;
}

std::vector<double> gca_step_hard(const SpatialNetwork& net, const HardGateTriple& triple,
                                  const std::vector<double>& states) {
  if (states.size() != net.node_count()) throw ConfigError("state vector size mismatch");
  std::vector<double> next(states.size());
  parallel_for(states.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> wbuf;
    std::vector<double> fbuf;
    std::vector<double> sortbuf;
    for (std::size_t u = begin; u < end; ++u) {
      const auto& adj = net.adjacency[u];
      const std::size_t k = adj.size();
      const double su = states[u];
      wbuf.resize(k);
      fbuf.resize(k);
      for (std::size_t j = 0; j < k; ++j) {
        const std::uint32_t v = adj[j];
        const HalfEdgeFeature& feat = net.features[u][j];
        const double fin[2] = {su, states[v]};
        fbuf[j] = hard_forward(triple.fusion, std::span<const double>(fin, 2));
        const double ain[4] = {su, states[v], feat.d, feat.theta};
        wbuf[j] = hard_forward(triple.attention, std::span<const double>(ain, 4));
      }
      sortbuf.resize(k);
      for (std::size_t j = 0; j < k; ++j) sortbuf[j] = std::abs(wbuf[j]);
      const double denom = sorted_sum(sortbuf) + kAttentionEps;
      sortbuf.resize(k);
      for (std::size_t j = 0; j < k; ++j) sortbuf[j] = wbuf[j] / denom * fbuf[j];
      const double m = sorted_sum(sortbuf);
      const double uin[2] = {su, m};
      next[u] = hard_forward(triple.update, std::span<const double>(uin, 2));
      if (!std::isfinite(next[u])) {
        throw NumericError("non-finite state at node " + std::to_string(net.nodes[u].id));
      }
    }
  });
  return next;
}

SoftRuleContext make_soft_context(const GateTriple& triple) {
  SoftRuleContext ctx;
  ctx.triple = &triple;
  ctx.fusion_probs = softmax_probs(triple.fusion);
  ctx.attention_probs = softmax_probs(triple.attention);
  ctx.update_probs = softmax_probs(triple.update);
  return ctx;
}

std::vector<double> gca_step_soft(const SpatialNetwork& net, const SoftRuleContext& ctx,
                                  const std::vector<double>& states) {
  if (states.size() != net.node_count()) throw ConfigError("state vector size mismatch");
  std::vector<double> next(states.size());
  parallel_for(states.size(), [&](std::size_t begin, std::size_t end) {
    NodeScratch sc;
    for (std::size_t u = begin; u < end; ++u) {
      soft_node_forward(net, ctx, states, u, sc);
      next[u] = sc.out;
      if (!std::isfinite(next[u])) {
        throw NumericError("non-finite state at node " + std::to_string(net.nodes[u].id));
      }
    }
  });
  return next;
}

std::vector<double> gca_step(const SpatialNetwork& net, const RuleSpec& rule,
                             const std::vector<double>& states) {
  if (rule.kind == RuleKind::Laplacian) return laplacian_step(net, states);
  if (rule.mode == RuleMode::Hard) return gca_step_hard(net, rule.hard_triple(), states);
  if (!rule.soft.has_value()) throw ConfigError("soft evaluation needs soft gate parameters");
  const SoftRuleContext ctx = make_soft_context(*rule.soft);
  return gca_step_soft(net, ctx, states);
}

StateTrace evolve(const SpatialNetwork& net, const RuleSpec& rule, std::size_t iterations,
                  const std::vector<double>* s0) {
  StateTrace trace;
  trace.states.reserve(iterations + 1);
  if (s0 != nullptr) {
    if (s0->size() != net.node_count()) throw ConfigError("initial state size mismatch");
    trace.states.push_back(*s0);
  } else {
    trace.states.push_back(init_states(net));
  }

  if (rule.kind == RuleKind::Laplacian) {
    for (std::size_t t = 1; t <= iterations; ++t) {
      try {
        trace.states.push_back(laplacian_step(net, trace.states.back()));
      } catch (const NumericError& e) {
        throw NumericError("iteration " + std::to_string(t) + ": " + e.what());
      }
    }
    return trace;
  }

  if (rule.mode == RuleMode::Hard) {
    const HardGateTriple hard = rule.hard_triple();
    for (std::size_t t = 1; t <= iterations; ++t) {
      try {
        trace.states.push_back(gca_step_hard(net, hard, trace.states.back()));
      } catch (const NumericError& e) {
        throw NumericError("iteration " + std::to_string(t) + ": " + e.what());
      }
    }
    return trace;
  }

  if (!rule.soft.has_value()) throw ConfigError("soft evaluation needs soft gate parameters");
  const SoftRuleContext ctx = make_soft_context(*rule.soft);
  for (std::size_t t = 1; t <= iterations; ++t) {
    try {
      trace.states.push_back(gca_step_soft(net, ctx, trace.states.back()));
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(t) + ": " + e.what());
    }
  }
  return trace;
}

TripleGrads zero_grads(const GateTriple& triple) {
  TripleGrads g;
  g.fusion.assign(triple.fusion.gate_count(), {});
  g.attention.assign(triple.attention.gate_count(), {});
  g.update.assign(triple.update.gate_count(), {});
  return g;
}

namespace {

// Backward through one soft step: given dL/d s_next in g_out, accumulates
// dL/d s_prev into g_prev and logit gradients into grads. Activations are
// recomputed from s_prev.
void soft_step_backward(const SpatialNetwork& net, const SoftRuleContext& ctx,
                        const std::vector<double>& s_prev, const std::vector<double>& g_out,
                        std::vector<double>& g_prev, TripleGrads& grads) {
  NodeScratch sc;
  std::vector<double> dwh;
  std::vector<double> dw;
  double in2[2];
  double in4[4];
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    const double up = g_out[u];
    if (up == 0) continue;
    soft_node_forward(net, ctx, s_prev, u, sc);
    const auto& adj = net.adjacency[u];
    const std::size_t k = adj.size();

    // Update submodule: inputs (s_u, m).
    in2[0] = 0;
    in2[1] = 0;
    soft_backward(ctx.triple->update, ctx.update_probs, sc.u_acts, up,
                  std::span<double>(in2, 2), grads.update);
    g_prev[u] += in2[0];
    const double gm = in2[1];
    if (k == 0) continue;

    // Message m = sum_j wh_j f_j with wh_j = w_j / (sum |w| + eps).
    dwh.resize(k);
    dw.resize(k);
    double dS_num = 0;
    const double denom = [&] {
      double s = 0;
      for (std::size_t j = 0; j < k; ++j) s += std::abs(sc.edges[j].w);
      return s + kAttentionEps;
    }();
    for (std::size_t j = 0; j < k; ++j) {
      dwh[j] = gm * sc.edges[j].f;
      dS_num += dwh[j] * sc.edges[j].w;
    }
    const double dS = -dS_num / (denom * denom);
    for (std::size_t j = 0; j < k; ++j) {
      dw[j] = dwh[j] / denom + dS * sign_of(sc.edges[j].w);
    }

    for (std::size_t j = 0; j < k; ++j) {
      const std::uint32_t v = adj[j];
      const double df = gm * sc.edges[j].wh;
      if (df != 0) {
        in2[0] = 0;
        in2[1] = 0;
        soft_backward(ctx.triple->fusion, ctx.fusion_probs, sc.edges[j].f_acts, df,
                      std::span<double>(in2, 2), grads.fusion);
        g_prev[u] += in2[0];
        g_prev[v] += in2[1];
      }
      if (dw[j] != 0) {
        in4[0] = 0;
        in4[1] = 0;
        in4[2] = 0;
        in4[3] = 0;
        soft_backward(ctx.triple->attention, ctx.attention_probs, sc.edges[j].a_acts, dw[j],
                      std::span<double>(in4, 4), grads.attention);
        g_prev[u] += in4[0];
        g_prev[v] += in4[1];
        // in4[2], in4[3] are d/theta adjoints; features are constants.
      }
    }
  }
}

}  // namespace

void evolve_backward(const SpatialNetwork& net, const SoftRuleContext& ctx,
                     const StateTrace& trace, const std::vector<std::vector<double>>& adjoints,
                     TripleGrads& grads) {
  const std::size_t T = trace.iterations();
  if (adjoints.size() != T + 1) throw ConfigError("adjoint count must match trace length");
  if (T == 0) return;
  std::vector<double> g = adjoints[T];
  std::vector<double> g_prev;
  for (std::size_t t = T; t >= 1; --t) {
    g_prev.assign(net.node_count(), 0.0);
    soft_step_backward(net, ctx, trace.states[t - 1], g, g_prev, grads);
    if (t >= 2) {
      for (std::size_t u = 0; u < g_prev.size(); ++u) g_prev[u] += adjoints[t - 1][u];
    }
    g = std::move(g_prev);
    g_prev = {};
  }
}

namespace {

nlohmann::json soft_net_to_json(const GateNetwork& net) {
  nlohmann::json j;
  j["input_arity"] = net.input_arity;
  j["layer_sizes"] = net.layer_sizes();
  j["wiring_seed"] = net.wiring_seed;
  nlohmann::json logits = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    for (const auto& gate : layer) logits.push_back(gate.logits);
  }
  j["logits"] = std::move(logits);
  return j;
}

nlohmann::json hard_net_to_json(const HardGateNetwork& net) {
  nlohmann::json j;
  j["input_arity"] = net.input_arity;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& layer : net.layers) sizes.push_back(layer.size());
  j["layer_sizes"] = std::move(sizes);
  j["wiring_seed"] = net.wiring_seed;
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    for (const auto& gate : layer) ops.push_back(gate_op_name(gate.op));
  }
  j["ops"] = std::move(ops);
  return j;
}

GateNetwork soft_net_from_json(const nlohmann::json& j) {
  const auto arity = j.at("input_arity").get<std::uint32_t>();
  const auto sizes = j.at("layer_sizes").get<std::vector<std::uint32_t>>();
  const auto seed = j.at("wiring_seed").get<std::uint64_t>();
  GateNetwork net = init_gate_network(arity, sizes, seed, LogitInit::UniformZero);
  const auto& logits = j.at("logits");
  if (logits.size() != net.gate_count()) throw ParseError("rule json: logit count mismatch");
  std::size_t idx = 0;
  for (auto& layer : net.layers) {
    for (auto& gate : layer) {
      const auto& row = logits[idx++];
      if (row.size() != kGateOpCount) throw ParseError("rule json: bad logit row");
      for (int k = 0; k < kGateOpCount; ++k) gate.logits[k] = row[k].get<double>();
    }
  }
  return net;
}

HardGateNetwork hard_net_from_json(const nlohmann::json& j) {
  const auto arity = j.at("input_arity").get<std::uint32_t>();
  const auto sizes = j.at("layer_sizes").get<std::vector<std::uint32_t>>();
  const auto seed = j.at("wiring_seed").get<std::uint64_t>();
  const GateNetwork wired = init_gate_network(arity, sizes, seed, LogitInit::UniformZero);
  HardGateNetwork net;
  net.input_arity = arity;
  net.wiring_seed = seed;
  const auto& ops = j.at("ops");
  if (ops.size() != wired.gate_count()) throw ParseError("rule json: op count mismatch");
  std::size_t idx = 0;
  for (const auto& layer : wired.layers) {
    std::vector<HardGate> hl;
    hl.reserve(layer.size());
    for (const auto& gate : layer) {
      hl.push_back({gate_op_from_name(ops[idx++].get<std::string>()), gate.in_a, gate.in_b});
    }
    net.layers.push_back(std::move(hl));
  }
  return net;
}

}  // namespace

std::string rule_to_json(const RuleSpec& rule) {
  nlohmann::json j;
  j["format"] = "gca-rule/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  if (rule.kind == RuleKind::Laplacian) {
    j["kind"] = "laplacian";
    return j.dump(2) + "\n";
  }
  j["kind"] = "gate_triple";
  j["mode"] = rule.mode == RuleMode::Soft ? "soft" : "hard";
  if (rule.soft.has_value()) {
    j["parameters"] = "logits";
    j["fusion"] = soft_net_to_json(rule.soft->fusion);
    j["attention"] = soft_net_to_json(rule.soft->attention);
    j["update"] = soft_net_to_json(rule.soft->update);
  } else {
    const HardGateTriple hard = rule.hard_triple();
    j["parameters"] = "ops";
    j["fusion"] = hard_net_to_json(hard.fusion);
    j["attention"] = hard_net_to_json(hard.attention);
    j["update"] = hard_net_to_json(hard.update);
  }
  return j.dump(2) + "\n";
}

RuleSpec rule_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rule json: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "gca-rule/1") {
    throw ParseError("rule json: missing or unsupported format marker");
  }
  RuleSpec rule;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "laplacian") {
    rule.kind = RuleKind::Laplacian;
    return rule;
  }
  if (kind != "gate_triple") throw ParseError("rule json: unknown kind '" + kind + "'");
  rule.kind = RuleKind::GateTriple;
  const std::string mode = j.value("mode", "hard");
  if (mode == "soft") {
    rule.mode = RuleMode::Soft;
  } else if (mode == "hard") {
    rule.mode = RuleMode::Hard;
  } else {
    throw ParseError("rule json: unknown mode '" + mode + "'");
  }
  const std::string params = j.value("parameters", "logits");
  if (params == "logits") {
    GateTriple t;
    t.fusion = soft_net_from_json(j.at("fusion"));
    t.attention = soft_net_from_json(j.at("attention"));
    t.update = soft_net_from_json(j.at("update"));
    rule.soft = std::move(t);
  } else if (params == "ops") {
    HardGateTriple t;
    t.fusion = hard_net_from_json(j.at("fusion"));
    t.attention = hard_net_from_json(j.at("attention"));
    t.update = hard_net_from_json(j.at("update"));
    rule.hard = std::move(t);
    rule.mode = RuleMode::Hard;
  } else {
    throw ParseError("rule json: unknown parameters '" + params + "'");
  }
  return rule;
}

void save_rule(const RuleSpec& rule, const std::filesystem::path& path) {
  write_text_file(path, rule_to_json(rule));
}

RuleSpec load_rule(const std::filesystem::path& path) {
  return rule_from_json(read_text_file(path));
}

std::string rule_hash(const RuleSpec& rule) { return hex64(fnv1a64(rule_to_json(rule))); }

}  // namespace gcasim
