// Command-line front end: network ingestion, rule evaluation, distance
// matrices, clustering, rule training, and the analysis utilities.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gcasim/analysis.hpp"
#include "gcasim/baselines.hpp"
#include "gcasim/clustering.hpp"
#include "gcasim/io_util.hpp"
#include "gcasim/synth.hpp"
#include "gcasim/training.hpp"
#include "json.hpp"

namespace {

using namespace gcasim;

void print_warnings(const Warnings& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

[[noreturn]] void fail_json(const char* category, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = {{"category", category}, {"message", message}};
  std::cerr << j.dump() << "\n";
  std::exit(code);
}

NetworkFormat format_from_flag(const std::string& flag) {
  if (flag == "auto") return NetworkFormat::Auto;
  if (flag == "csvdir") return NetworkFormat::EdgeListCsv;
  if (flag == "graphml") return NetworkFormat::GraphMl;
  if (flag == "json") return NetworkFormat::Json;
  throw ConfigError("unknown format '" + flag + "' (auto, csvdir, graphml, json)");
}

// --rule accepts the literal "laplacian" or a rule file path; --mode can
// force soft or hard evaluation of a gate rule.
RuleSpec resolve_rule(const std::string& rule_flag, const std::string& mode_flag) {
  RuleSpec rule = rule_flag == "laplacian" ? laplacian_rule() : load_rule(rule_flag);
  if (!mode_flag.empty()) {
    if (mode_flag == "soft") {
      if (!rule.soft.has_value())
        throw ConfigError("--mode soft needs a rule with soft parameters");
      rule.mode = RuleMode::Soft;
    } else if (mode_flag == "hard") {
      rule.mode = RuleMode::Hard;
    } else {
      throw ConfigError("unknown mode '" + mode_flag + "' (soft, hard)");
    }
  }
  return rule;
}

std::string stem_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string dist_config_digest(const PairDistanceConfig& cfg, const std::string& method,
                               const std::string& mode) {
  std::ostringstream s;
  s << "method=" << method << ";iters=" << cfg.iterations << ";bins=" << cfg.bins
    << ";t0=" << (cfg.include_t0 ? 1 : 0) << ";mode=" << mode;
  return hex64(fnv1a64(s.str()));
}

struct CommonDistFlags {
  std::vector<std::string> inputs;
  std::string rule_flag = "laplacian";
  std::string mode_flag;
  std::string method = "gca";
  std::size_t iterations = 5;
  int bins = 64;
  bool include_t0 = false;
};

void add_dist_flags(CLI::App* cmd, CommonDistFlags& flags) {
  cmd->add_option("-i,--input", flags.inputs, "network files (csv directory, .graphml or .json)")
      ->required()
      ->expected(-1);
  cmd->add_option("--rule", flags.rule_flag, "'laplacian' or a rule file");
  cmd->add_option("--mode", flags.mode_flag, "force soft or hard gate evaluation");
  cmd->add_option("--method", flags.method, "gca, degreejsd or netsimile");
  cmd->add_option("--iterations", flags.iterations, "compared iterations");
  cmd->add_option("--bins", flags.bins, "histogram bins");
  cmd->add_flag("--include-t0", flags.include_t0, "also compare initial states");
}

int run_dist(const CommonDistFlags& flags, const std::string& output) {
  Warnings warnings;
  if (flags.inputs.size() < 2) throw ConfigError("dist: need at least two networks");
  std::vector<SpatialNetwork> nets;
  std::vector<std::string> names;
  for (const std::string& path : flags.inputs) {
    nets.push_back(load_network(path, NetworkFormat::Auto, &warnings));
    names.push_back(stem_name(path));
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw ValidationError("dist: duplicate network name '" + names[i] + "'");
  std::vector<const SpatialNetwork*> ptrs;
  for (const auto& n : nets) ptrs.push_back(&n);

  PairDistanceConfig dcfg;
  dcfg.iterations = flags.iterations;
  dcfg.bins = flags.bins;
  dcfg.include_t0 = flags.include_t0;

  MatrixMeta meta;
  meta.method = flags.method;
  meta.sources = flags.inputs;

  DistanceMatrix dist;
  std::string mode_label = "hard";
  if (flags.method == "gca") {
    const RuleSpec rule = resolve_rule(flags.rule_flag, flags.mode_flag);
    mode_label = rule.kind == RuleKind::GateTriple && rule.mode == RuleMode::Soft ? "soft" : "hard";
    meta.rule_digest = rule_hash(rule);
    dist = distance_matrix(ptrs, names, rule, dcfg);
  } else if (flags.method == "degreejsd") {
    dist = baseline_matrix(ptrs, names, BaselineMethod::DegreeJsd);
  } else if (flags.method == "netsimile") {
    dist = baseline_matrix(ptrs, names, BaselineMethod::Netsimile);
  } else {
    throw ConfigError("unknown method '" + flags.method + "' (gca, degreejsd, netsimile)");
  }
  meta.config_digest = dist_config_digest(dcfg, flags.method, mode_label);

  const bool csv = std::filesystem::path(output).extension() == ".csv";
  write_text_file(output, csv ? matrix_to_csv(dist) : matrix_to_json(dist, meta));
  print_warnings(warnings);
  std::cout << "wrote " << output << " (" << dist.size() << " networks)\n";
  return 0;
}

int run_ingest(const std::string& input, const std::string& format, const std::string& output) {
  Warnings warnings;
  const SpatialNetwork net = load_network(input, format_from_flag(format), &warnings);
  save_network(net, output);
  print_warnings(warnings);
  std::cout << "wrote " << output << " (" << net.node_count() << " nodes, " << net.edge_count()
            << " edges)\n";
  return 0;
}

int run_features(const std::string& input, const std::string& output, const std::string& trace_out,
                 const std::string& quantiles_out, const std::string& rule_flag,
                 const std::string& mode_flag, std::size_t iterations, int levels) {
  Warnings warnings;
  const SpatialNetwork net = load_network(input, NetworkFormat::Auto, &warnings);
  if (!output.empty()) {
    std::string csv = "u,v,d,theta\n";
    for (std::size_t u = 0; u < net.node_count(); ++u) {
      for (std::size_t e = 0; e < net.adjacency[u].size(); ++e) {
        const std::size_t v = net.adjacency[u][e];
        csv += std::to_string(net.nodes[u].id);
        csv += ',';
        csv += std::to_string(net.nodes[v].id);
        csv += ',';
        csv += fmt_double(net.features[u][e].d);
        csv += ',';
        csv += fmt_double(net.features[u][e].theta);
        csv += '\n';
      }
    }
    write_text_file(output, csv);
    std::cout << "wrote " << output << "\n";
  }
  if (!trace_out.empty() || !quantiles_out.empty()) {
    const RuleSpec rule = resolve_rule(rule_flag, mode_flag);
    const StateTrace trace = evolve(net, rule, iterations);
    if (!trace_out.empty()) {
      write_text_file(trace_out, trace_to_csv(net, trace));
      std::cout << "wrote " << trace_out << "\n";
    }
    if (!quantiles_out.empty()) {
      write_text_file(quantiles_out, trace_quantiles_csv(trace, levels));
      std::cout << "wrote " << quantiles_out << "\n";
    }
  }
  print_warnings(warnings);
  return 0;
}

int run_cluster(const std::string& matrix_path, const std::string& output, std::size_t k_min,
                std::size_t k_max, double temperature) {
  const DistanceMatrix dist = load_matrix(matrix_path);
  SelectKConfig cfg;
  cfg.k_min = k_min;
  cfg.k_max = k_max;
  cfg.temperature = temperature;
  const ClusterResult result = select_k(dist, cfg);
  std::ostringstream s;
  s << "kmin=" << cfg.k_min << ";kmax=" << cfg.k_max
    << ";temp=" << fmt_double(cfg.temperature);
  write_text_file(output, cluster_result_to_json(result, dist, hex64(fnv1a64(s.str()))));
  std::cout << "wrote " << output << " (k=" << result.k << ", silhouette=" << fmt_double(result.sil)
            << ")\n";
  return 0;
}

std::string history_csv(const TrainResult& result) {
  std::string csv =
      "group,epoch,total,sil_term,hard_term,margin_term,ent_term,k,val_mean_sil,new_best\n";
  for (const EpochRecord& r : result.history) {
    csv += std::to_string(r.group_index);
    csv += ',';
    csv += std::to_string(r.epoch);
    csv += ',';
    csv += fmt_double(r.loss.total);
    csv += ',';
    csv += fmt_double(r.loss.sil_term);
    csv += ',';
    csv += fmt_double(r.loss.hard_term);
    csv += ',';
    csv += fmt_double(r.loss.margin_term);
    csv += ',';
    csv += fmt_double(r.loss.ent_term);
    csv += ',';
    csv += std::to_string(r.k);
    csv += ',';
    csv += fmt_double(r.val_mean_sil);
    csv += ',';
    csv += r.new_best ? '1' : '0';
    csv += '\n';
  }
  return csv;
}

int run_train(const std::string& groups_path, const std::string& output,
              const std::string& history_out, const TrainConfig& cfg) {
  Warnings warnings;
  const GroupSet groups = load_group_set(groups_path, &warnings);
  const PipelineResult result = train_pipeline(groups, cfg);
  save_rule(result.final_rule, output);
  if (!history_out.empty())
    write_text_file(history_out, result.tuned.has_value() ? history_csv(*result.tuned)
                                                          : std::string("group,epoch,total,sil_"
                                                                        "term,hard_term,margin_"
                                                                        "term,ent_term,k,val_mean_"
                                                                        "sil,new_best\n"));
  print_warnings(warnings);

  nlohmann::json j;
  j["format"] = "gca-train/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = train_config_digest(cfg);
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["best_candidate_sil"] = result.explore.ranked.front().mean_val_sil;
  j["promoted"] = result.explore.promoted;
  if (result.tuned.has_value()) {
    j["epochs_run"] = result.tuned->history.size();
    j["reached_target"] = result.tuned->reached_target;
    j["aborted_non_finite"] = result.tuned->aborted_non_finite;
  }
  j["final_val_sil"] = result.final_val_sil;
  j["rule_hash"] = rule_hash(result.final_rule);
  j["rule_file"] = output;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_consistency(const std::string& input, const std::string& rule_flag,
                    const std::string& mode_flag, const std::string& output,
                    const ConsistencyConfig& cfg) {
  Warnings warnings;
  const SpatialNetwork net = load_network(input, NetworkFormat::Auto, &warnings);
  const RuleSpec rule = resolve_rule(rule_flag, mode_flag);
  const ConsistencyReport report = internal_consistency(net, rule, cfg, &warnings);
  std::ostringstream s;
  s << "window=" << fmt_double(cfg.window_m) << ";tile=" << fmt_double(cfg.tile_m)
    << ";min_nodes=" << cfg.min_nodes << ";iters=" << cfg.dist.iterations
    << ";bins=" << cfg.dist.bins;
  const std::string text =
      consistency_to_json(report, rule_hash(rule), hex64(fnv1a64(s.str())));
  if (output.empty())
    std::cout << text;
  else {
    write_text_file(output, text);
    std::cout << "wrote " << output << " (tiles=" << report.tile_count
              << ", score=" << fmt_double(report.score) << ")\n";
  }
  print_warnings(warnings);
  return 0;
}

int run_correlate(const std::string& input, const std::string& rule_flag,
                  const std::string& mode_flag, const std::vector<std::string>& var_paths,
                  const std::string& output, const CorrelationConfig& cfg) {
  Warnings warnings;
  const SpatialNetwork net = load_network(input, NetworkFormat::Auto, &warnings);
  const RuleSpec rule = resolve_rule(rule_flag, mode_flag);
  std::vector<ExternalVariable> vars;
  for (const std::string& path : var_paths) vars.push_back(load_external_variable(path));
  const std::vector<CorrelationRow> rows = iterate_correlations(net, rule, vars, cfg, &warnings);
  const std::string csv = correlations_to_csv(rows);
  if (output.empty())
    std::cout << csv;
  else {
    write_text_file(output, csv);
    std::cout << "wrote " << output << " (" << rows.size() << " rows)\n";
  }
  print_warnings(warnings);
  return 0;
}

int run_synth(const std::string& family, std::size_t nodes, std::uint64_t seed,
              const std::string& output, std::size_t per_family, std::size_t min_nodes,
              std::size_t max_nodes, const std::string& outdir) {
  if (!outdir.empty()) {
    const SynthCorpus corpus = synth_family_corpus(per_family, min_nodes, max_nodes, seed);
    std::filesystem::create_directories(outdir);
    std::string labels = "name,family\n";
    for (std::size_t i = 0; i < corpus.nets.size(); ++i) {
      const std::string file = corpus.names[i] + ".json";
      save_network(corpus.nets[i], std::filesystem::path(outdir) / file);
      labels += corpus.names[i];
      labels += ',';
      labels += synth_family_name(static_cast<SynthFamily>(corpus.family_labels[i]));
      labels += '\n';
    }
    write_text_file(std::filesystem::path(outdir) / "labels.csv", labels);
    std::cout << "wrote " << corpus.nets.size() << " networks to " << outdir << "\n";
    return 0;
  }
  const SpatialNetwork net = synth_network(synth_family_from_name(family), nodes, seed);
  save_network(net, output);
  std::cout << "wrote " << output << " (" << net.node_count() << " nodes, " << net.edge_count()
            << " edges)\n";
  return 0;
}

int run_bench(std::size_t nodes, std::size_t iterations, std::size_t reps,
              const std::string& rule_flag, const std::string& mode_flag, std::uint64_t seed) {
  if (reps == 0) throw ConfigError("bench: reps must be positive");
  const SpatialNetwork net = synth_network(SynthFamily::Grid, nodes, seed);
  const RuleSpec rule = resolve_rule(rule_flag, mode_flag);
  std::vector<double> seconds;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const StateTrace trace = evolve(net, rule, iterations);
    const auto stop = std::chrono::steady_clock::now();
    if (trace.states.back().empty() && net.node_count() > 0)
      throw NumericError("bench: empty final state");
    seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(seconds.begin(), seconds.end());
  const double median = seconds[seconds.size() / 2];
  nlohmann::json j;
  j["nodes"] = net.node_count();
  j["edges"] = net.edge_count();
  j["iterations"] = iterations;
  j["reps"] = reps;
  nlohmann::json arr = nlohmann::json::array();
  for (double s : seconds) arr.push_back(s);
  j["seconds"] = std::move(arr);
  j["median_seconds"] = median;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolves node states on spatial networks under gate rules and compares the "
               "resulting distributions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

  std::function<int()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load, clean and save a network");
  {
    static std::string input, format = "auto", output;
    ingest->add_option("-i,--input", input, "network path")->required();
    ingest->add_option("--format", format, "auto, csvdir, graphml or json");
    ingest->add_option("-o,--output", output, "output .json path")->required();
    ingest->callback([&action] { action = [] { return run_ingest(input, format, output); }; });
  }

  // features
  auto* features = app.add_subcommand("features", "export edge features and state traces");
  {
    static std::string input, output, trace_out, quantiles_out, rule_flag = "laplacian", mode_flag;
    static std::size_t iterations = 5;
    static int levels = 21;
    features->add_option("-i,--input", input, "network path")->required();
    features->add_option("-o,--output", output, "edge feature csv");
    features->add_option("--trace", trace_out, "per-node state trace csv");
    features->add_option("--quantiles", quantiles_out, "per-iteration quantile csv");
    features->add_option("--rule", rule_flag, "'laplacian' or a rule file");
    features->add_option("--mode", mode_flag, "force soft or hard gate evaluation");
    features->add_option("--iterations", iterations, "trace length");
    features->add_option("--levels", levels, "quantile levels");
    features->callback([&action] {
      action = [] {
        return run_features(input, output, trace_out, quantiles_out, rule_flag, mode_flag,
                            iterations, levels);
      };
    });
  }

  // dist
  auto* dist = app.add_subcommand("dist", "pairwise distance matrix between networks");
  {
    static CommonDistFlags flags;
    static std::string output;
    add_dist_flags(dist, flags);
    dist->add_option("-o,--output", output, "output .json or .csv path")->required();
    dist->callback([&action] { action = [] { return run_dist(flags, output); }; });
  }

  // cluster
  auto* cluster = app.add_subcommand("cluster", "hierarchical clustering of a distance matrix");
  {
    static std::string matrix_path, output;
    static std::size_t k_min = 2, k_max = 12;
    static double temperature = kDefaultSoftTemperature;
    cluster->add_option("-m,--matrix", matrix_path, "distance matrix (.json or .csv)")->required();
    cluster->add_option("-o,--output", output, "output .json path")->required();
    cluster->add_option("--kmin", k_min, "smallest k");
    cluster->add_option("--kmax", k_max, "largest k");
    cluster->add_option("--temperature", temperature, "soft silhouette temperature");
    cluster->callback([&action] {
      action = [] { return run_cluster(matrix_path, output, k_min, k_max, temperature); };
    });
  }

  // train
  auto* train = app.add_subcommand("train", "search and fine-tune a gate rule");
  {
    static std::string groups_path, output, history_out;
    static TrainConfig cfg;
    train->add_option("-g,--groups", groups_path, "group definition json")->required();
    train->add_option("-o,--output", output, "output rule json")->required();
    train->add_option("--history", history_out, "epoch history csv");
    train->add_option("--seed", cfg.seed, "search seed")->required();
    train->add_option("--budget", cfg.budget, "exploration candidates");
    train->add_option("--alpha", cfg.alpha, "silhouette weight");
    train->add_option("--beta", cfg.beta, "gate entropy weight");
    train->add_option("--gamma", cfg.gamma, "margin weight");
    train->add_option("--delta", cfg.delta, "size entropy weight");
    train->add_option("--margin", cfg.margin, "separation margin");
    train->add_option("--lr", cfg.lr, "learning rate");
    train->add_option("--clip", cfg.grad_clip, "per-component gradient clip");
    train->add_option("--explore-threshold", cfg.explore_threshold,
                      "promotion threshold on validation silhouette");
    train->add_option("--target", cfg.target_silhouette, "early-stop validation silhouette");
    train->add_option("--epochs-per-group", cfg.epochs_per_group, "epochs per training group");
    train->add_option("--dominant-logit", cfg.dominant_logit, "promotion logit boost");
    train->add_option("--iterations", cfg.dist.iterations, "compared iterations");
    train->add_option("--bins", cfg.dist.bins, "histogram bins");
    train->add_option("--kmin", cfg.select.k_min, "smallest k");
    train->add_option("--kmax", cfg.select.k_max, "largest k");
    train->add_option("--temperature", cfg.select.temperature, "soft silhouette temperature");
    train->callback([&action] {
      action = [] { return run_train(groups_path, output, history_out, cfg); };
    });
  }

  // consistency
  auto* consistency = app.add_subcommand("consistency", "tile self-similarity of one network");
  {
    static std::string input, rule_flag = "laplacian", mode_flag, output;
    static ConsistencyConfig cfg;
    consistency->add_option("-i,--input", input, "network path")->required();
    consistency->add_option("--rule", rule_flag, "'laplacian' or a rule file");
    consistency->add_option("--mode", mode_flag, "force soft or hard gate evaluation");
    consistency->add_option("-o,--output", output, "output json (stdout when omitted)");
    consistency->add_option("--window", cfg.window_m, "window size in meters");
    consistency->add_option("--tile", cfg.tile_m, "tile size in meters");
    consistency->add_option("--min-nodes", cfg.min_nodes, "minimum nodes per tile");
    consistency->add_option("--iterations", cfg.dist.iterations, "compared iterations");
    consistency->add_option("--bins", cfg.dist.bins, "histogram bins");
    consistency->callback([&action] {
      action = [] { return run_consistency(input, rule_flag, mode_flag, output, cfg); };
    });
  }

  // correlate
  auto* correlate = app.add_subcommand("correlate", "rank-correlate states with node variables");
  {
    static std::string input, rule_flag = "laplacian", mode_flag, output;
    static std::vector<std::string> var_paths;
    static CorrelationConfig cfg;
    correlate->add_option("-i,--input", input, "network path")->required();
    correlate->add_option("--vars", var_paths, "node_id,value csv files")->required()->expected(-1);
    correlate->add_option("--rule", rule_flag, "'laplacian' or a rule file");
    correlate->add_option("--mode", mode_flag, "force soft or hard gate evaluation");
    correlate->add_option("-o,--output", output, "output csv (stdout when omitted)");
    correlate->add_option("--iterations", cfg.iterations, "iterations to correlate");
    correlate->add_option("--min-coverage", cfg.min_coverage, "required matched node fraction");
    correlate->callback([&action] {
      action = [] { return run_correlate(input, rule_flag, mode_flag, var_paths, output, cfg); };
    });
  }

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic benchmark networks");
  {
    static std::string family = "grid", output, outdir;
    static std::size_t nodes = 400, per_family = 8, min_nodes = 300, max_nodes = 800;
    static std::uint64_t seed = 0;
    synth->add_option("--family", family, "grid, rgg or tree");
    synth->add_option("--nodes", nodes, "target node count");
    synth->add_option("--seed", seed, "generator seed")->required();
    synth->add_option("-o,--output", output, "output network json");
    synth->add_option("--outdir", outdir, "emit a labeled corpus into this directory");
    synth->add_option("--per-family", per_family, "corpus networks per family");
    synth->add_option("--min-nodes", min_nodes, "corpus smallest target size");
    synth->add_option("--max-nodes", max_nodes, "corpus largest target size");
    synth->callback([&action] {
      action = [] {
        if (outdir.empty() && output.empty())
          throw ConfigError("synth: need --output or --outdir");
        return run_synth(family, nodes, seed, output, per_family, min_nodes, max_nodes, outdir);
      };
    });
  }

  // bench
  auto* bench = app.add_subcommand("bench", "time rule evolution on a synthetic grid");
  {
    static std::size_t nodes = 10000, iterations = 5, reps = 5;
    static std::string rule_flag = "laplacian", mode_flag;
    static std::uint64_t seed = 7;
    bench->add_option("--nodes", nodes, "target node count");
    bench->add_option("--iterations", iterations, "evolution steps");
    bench->add_option("--reps", reps, "timing repetitions");
    bench->add_option("--rule", rule_flag, "'laplacian' or a rule file");
    bench->add_option("--mode", mode_flag, "force soft or hard gate evaluation");
    bench->add_option("--seed", seed, "generator seed");
    bench->callback([&action] {
      action = [] { return run_bench(nodes, iterations, reps, rule_flag, mode_flag, seed); };
    });
  }

  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::stringstream out;
    const int code = app.exit(e, out, out);
    (void)code;
    fail_json("usage", out.str(), 2);
  }

  try {
    if (threads > 0) set_max_threads(static_cast<unsigned>(threads));
    return action();
  } catch (const ConfigError& e) {
    fail_json("config", e.what(), 2);
  } catch (const ParseError& e) {
    fail_json("parse", e.what(), 3);
  } catch (const ValidationError& e) {
    fail_json("validation", e.what(), 3);
  } catch (const NumericError& e) {
    fail_json("numeric", e.what(), 4);
  } catch (const std::exception& e) {
    fail_json("internal", e.what(), 1);
  }
  return 0;
}
