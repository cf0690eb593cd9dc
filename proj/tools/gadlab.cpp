// gadlab: detection, attack, defense and evaluation pipelines on edge-list graphs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gadlab/gadlab.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gadlab;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Collects the files of one run and writes them, plus the manifest, under --out.
class Run {
 public:
  Run(std::string command, const std::vector<std::string>& argv, const std::string& out, std::uint64_t seed)
      : out_(out) {
    if (out.empty()) throw UsageError("--out is required");
    manifest_["command"] = std::move(command);
    manifest_["argv"] = argv;
    manifest_["seed"] = seed;
    manifest_["version"] = kVersion;
    manifest_["params"] = json::object();
    manifest_["inputs"] = json::object();
    manifest_["outputs"] = json::object();
  }

  json& params() { return manifest_["params"]; }

  void input(const std::string& path) {
    if (path.empty() || path.rfind("auto:", 0) == 0) return;
    manifest_["inputs"][path] = fnv1a(read_file(path));
  }

  // Deterministic outputs are digested into the manifest; timed reports are not.
  void write(const std::string& name, const std::string& content, bool digest = true) {
    fs::create_directories(out_);
    write_file_atomic(fs::path(out_) / name, content);
    if (digest) manifest_["outputs"][name] = fnv1a(content);
  }

  void finish() { write("manifest.json", manifest_.dump(2) + "\n", false); }

 private:
  std::string out_;
  json manifest_;
};

struct AttackFlags {
  std::vector<double> lambdas{1e-4, 1e-3, 1e-2, 1e-1};
  double lr = 0.1;
  int iterations = 200;
  double tol = 1e-6;
};

struct LgcnFlags {
  std::string labels;
  std::string attributes;
  std::uint64_t split_seed = 1;
  double test_frac = 0.1;
  double xi = 0.1;
  double h = 0.5;
  std::string omega = "neg-over-pos";

  void add(CLI::App* c) {
    c->add_option("--labels", labels, "Label file 'u y' (lgcn)");
    c->add_option("--attributes", attributes, "Attribute CSV, one row per node (lgcn)");
    c->add_option("--split-seed", split_seed, "Seed of the stratified train/test split")->capture_default_str();
    c->add_option("--test-frac", test_frac, "Test share of the labelled nodes")->capture_default_str();
    c->add_option("--xi", xi, "Ridge regulariser")->capture_default_str();
    c->add_option("--h-weight", h, "Weight of the train term in the attack loss")->capture_default_str();
    c->add_option("--omega", omega, "Class weight convention")
        ->check(CLI::IsMember({"neg-over-pos", "pos-over-neg"}))
        ->capture_default_str();
  }

  void record(json& p) const {
    p["labels"] = labels;
    p["attributes"] = attributes;
    p["split_seed"] = split_seed;
    p["test_frac"] = test_frac;
    p["xi"] = xi;
    p["h"] = h;
    p["omega"] = omega;
  }

  AttributedDataset load(const Graph& g, Run& run) const {
    if (labels.empty() || attributes.empty()) throw UsageError("the lgcn model needs --labels and --attributes");
    run.input(labels);
    run.input(attributes);
    AttributedDataset ds;
    ds.graph = g;
    ds.y = load_labels(g, labels);
    ds.X = load_attributes(attributes, g.num_nodes());
    ds.validate();
    return ds;
  }

  OmegaConvention convention() const {
    return omega == "pos-over-neg" ? OmegaConvention::PositiveOverNegative : OmegaConvention::NegativeOverPositive;
  }
};

// "auto:pool,count" or a node-list file.
TargetSet resolve_targets(const Graph& g, const std::string& spec, std::uint64_t seed) {
  if (spec.rfind("auto:", 0) == 0) {
    int pool = 0, count = 0;
    char tail = 0;
    if (std::sscanf(spec.c_str() + 5, "%d,%d%c", &pool, &count, &tail) != 2)
      throw UsageError("--targets auto:POOL,COUNT expected, got '" + spec + "'");
    return pick_targets(oddball(g), pool, count, seed);
  }
  TargetSet t;
  t.nodes = load_node_list(g, spec);
  std::sort(t.nodes.begin(), t.nodes.end());
  if (std::adjacent_find(t.nodes.begin(), t.nodes.end()) != t.nodes.end()) throw DataError("duplicate node in target file");
  t.validate(g.num_nodes());
  return t;
}

RobustFitConfig robust_config(double k, double tol, int iters, std::uint64_t seed) {
  RobustFitConfig cfg;
  cfg.k = k;
  cfg.inlier_tol = tol;
  cfg.ransac_iters = iters;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

// ------------------------------------------------------------------ generate

struct GenerateCmd {
  std::vector<long long> ba;
  std::vector<long long> inject;
  std::string graph;
  bool lcc = false;
  int attributes = 0;
  double boost = 0.0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("generate", "Generate or derive a graph");
    c->add_option("--ba", ba, "Barabasi-Albert graph: n m seed")->expected(3);
    c->add_option("--graph", graph, "Input edge list (instead of --ba)");
    c->add_flag("--lcc", lcc, "Keep only the largest connected component");
    c->add_option("--inject", inject, "Inject cliques: count size seed")->expected(3);
    c->add_option("--attributes", attributes, "Write p Gaussian attributes per node (needs --inject)");
    c->add_option("--boost", boost, "Attribute shift on injected nodes")->capture_default_str();
  }

  void run(Run& r, std::uint64_t seed) const {
    if (ba.empty() == graph.empty()) throw UsageError("generate needs exactly one of --ba or --graph");
    Graph g;
    if (!ba.empty()) {
      if (ba[0] < 1 || ba[1] < 1 || ba[2] < 0) throw UsageError("--ba values must be positive");
      g = generate_ba(static_cast<int>(ba[0]), static_cast<int>(ba[1]), static_cast<std::uint64_t>(ba[2]));
    } else {
      r.input(graph);
      g = load_edge_list(graph);
    }
    if (lcc) g = largest_connected_component(g);
    r.params()["ba"] = ba;
    r.params()["graph"] = graph;
    r.params()["lcc"] = lcc;
    r.params()["inject"] = inject;
    r.params()["attributes"] = attributes;
    r.params()["boost"] = boost;
    if (attributes > 0 && inject.empty()) throw UsageError("--attributes needs --inject for labels");
    if (!inject.empty()) {
      if (inject[0] < 0 || inject[1] < 1 || inject[2] < 0) throw UsageError("--inject values must be non-negative");
      auto inj = inject_cliques(g, static_cast<int>(inject[0]), static_cast<int>(inject[1]),
                                static_cast<std::uint64_t>(inject[2]));
      g = std::move(inj.graph);
      r.write("labels.txt", format_labels(g, inj.labels));
      if (attributes > 0) r.write("attributes.csv", format_attributes(boosted_attributes(inj.labels, attributes, boost, seed)));
      std::cout << "anomalies " << std::count(inj.labels.begin(), inj.labels.end(), 1) << "\n";
    }
    r.write("graph.txt", format_edge_list(g));
    std::cout << "nodes " << g.num_nodes() << " edges " << g.num_edges() << "\n";
  }
};

// -------------------------------------------------------------------- detect

struct DetectCmd {
  std::string graph;
  int top = 0;
  std::string robust = "none";
  double k = 1.0;
  double inlier_tol = 1.0;
  int ransac_iters = 1000;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("detect", "Score nodes with OddBall");
    c->add_option("--graph", graph, "Edge list")->required();
    c->add_option("--top", top, "Rows to report (0 = all)")->capture_default_str();
    c->add_option("--robust", robust, "Power-law estimator")
        ->check(CLI::IsMember({"none", "huber", "ransac"}))
        ->capture_default_str();
    c->add_option("--k", k, "Huber threshold")->capture_default_str();
    c->add_option("--inlier-tol", inlier_tol, "RANSAC inlier tolerance")->capture_default_str();
    c->add_option("--ransac-iters", ransac_iters, "RANSAC iterations")->capture_default_str();
  }

  void run(Run& r, std::uint64_t seed) const {
    if (top < 0) throw UsageError("--top must be >= 0");
    r.input(graph);
    const Graph g = load_edge_list(graph);
    r.params() = {{"graph", graph}, {"top", top}, {"robust", robust}, {"k", k}, {"inlier_tol", inlier_tol},
                  {"ransac_iters", ransac_iters}};
    AnomalyReport report;
    try {
      report = robust_anomaly_scores(g, parse_robust_method(robust), robust_config(k, inlier_tol, ransac_iters, seed));
    } catch (const SingularDesignError& e) {
      // every node has the same degree: score against the intercept-only fit
      std::cerr << "warning: " << e.what() << "; using an intercept-only fit\n";
      const auto f = egonet_features(g);
      std::vector<double> lnN, lnE;
      log_features(f, lnN, lnE);
      PowerLawFit flat;
      for (double v : lnE) flat.beta0 += v / static_cast<double>(lnE.size());
      report = anomaly_scores(f, flat);
      r.params()["fit"] = "intercept_only";
    }
    const auto text = format_report(g, report, top);
    r.write("report.txt", text);
    std::cout << text;
  }
};

// -------------------------------------------------------------------- attack

struct AttackCmd {
  std::string graph;
  std::string model = "oddball";
  std::string method = "binarized";
  std::size_t budget = 0;
  std::vector<std::size_t> budgets;
  std::string targets = "auto:50,10";
  bool direct = false;
  AttackFlags af;
  LgcnFlags lf;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("attack", "Poison the graph structure");
    c->add_option("--graph", graph, "Edge list")->required();
    c->add_option("--model", model, "Detector under attack")
        ->check(CLI::IsMember({"oddball", "lgcn"}))
        ->capture_default_str();
    c->add_option("--method", method, "Attack method")
        ->check(CLI::IsMember({"binarized", "gradmax", "continuous"}))
        ->capture_default_str();
    c->add_option("--budget", budget, "Maximum number of edge flips")->required();
    c->add_option("--budgets", budgets, "Budgets to emit plans for (default: --budget)")->delimiter(',');
    c->add_option("--targets", targets, "Target file or auto:POOL,COUNT")->capture_default_str();
    c->add_flag("--direct", direct, "Only flip pairs touching a target");
    c->add_option("--lambdas", af.lambdas, "LASSO weights")->delimiter(',')->capture_default_str();
    c->add_option("--lr", af.lr, "Learning rate")->capture_default_str();
    c->add_option("--iterations", af.iterations, "Iterations per lambda")->capture_default_str();
    c->add_option("--tol", af.tol, "Continuous attack step tolerance")->capture_default_str();
    lf.add(c);
  }

  void run(Run& r, std::uint64_t seed) const {
    const auto t0 = std::chrono::steady_clock::now();
    r.input(graph);
    r.input(targets);
    const Graph g = load_edge_list(graph);
    std::vector<std::size_t> bs = budgets.empty() ? std::vector<std::size_t>{budget} : budgets;
    std::sort(bs.begin(), bs.end());
    bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
    if (bs.back() > budget) throw UsageError("--budgets entries must not exceed --budget");

    AttackConfig cfg;
    cfg.budget = budget;
    cfg.lambda_grid = af.lambdas;
    cfg.learning_rate = af.lr;
    cfg.iterations = af.iterations;
    cfg.tolerance = af.tol;
    cfg.seed = seed;
    cfg.validate();

    auto& p = r.params();
    p = {{"graph", graph}, {"model", model}, {"method", method}, {"budget", budget}, {"budgets", bs},
         {"targets", targets}, {"direct", direct}, {"lambdas", af.lambdas}, {"lr", af.lr},
         {"iterations", af.iterations}, {"tol", af.tol}};

    std::unique_ptr<AttackObjective> obj;
    TargetSet tset;
    AttributedDataset ds;
    Split split;
    LgcnProblem prob;
    std::vector<int> direct_nodes;
    if (model == "oddball") {
      tset = resolve_targets(g, targets, seed);
      r.write("targets.txt", format_node_list(g, tset.nodes));
      obj = std::make_unique<OddballSurrogateObjective>(tset);
      direct_nodes = tset.nodes;
    } else {
      lf.record(p);
      ds = lf.load(g, r);
      split = stratified_split(ds.y, lf.test_frac, lf.split_seed);
      prob = make_lgcn_problem(ds, split, lf.xi, lf.h, lf.convention());
      obj = std::make_unique<LgcnAttackObjective>(prob);
      if (direct) {
        tset = resolve_targets(g, targets, seed);
        direct_nodes = tset.nodes;
      }
    }
    const auto cand = direct ? build_candidates(g, CandidateMode::Direct, direct_nodes)
                             : build_candidates(g, CandidateMode::Full);

    std::vector<PerturbationPlan> plans;
    std::vector<bool> fallback(bs.size(), false);
    double clean = 0.0;
    if (method == "gradmax") {
      const auto res = gradmax_search(*obj, g, cand, cfg);
      clean = res.objective_clean;
      for (std::size_t b : bs) plans.push_back(res.plan.prefix(b));
    } else if (method == "continuous") {
      const auto res = continuous_attack(*obj, g, cand, cfg);
      clean = obj->value(g);
      for (std::size_t b : bs) plans.push_back(res.plan_for(g, b));
    } else {
      const auto res = binarized_attack(*obj, g, cand, cfg);
      clean = res.objective_clean;
      for (std::size_t k = 0; k < bs.size(); ++k) {
        auto sel = res.select(g, cand, bs[k]);
        fallback[k] = sel.fallback;
        plans.push_back(std::move(sel.plan));
      }
    }

    json report;
    report["method"] = method;
    report["objective"] = model == "oddball" ? "oddball_surrogate" : "lgcn_attack_loss";
    report["seed"] = seed;
    report["budgets"] = json::array();
    std::vector<MetricRow> rows;
    const double s0 = model == "oddball" ? target_score_sum(g, tset) : 0.0;
    const double auc0 = model == "lgcn" ? lgcn_auc(g, prob, split.test, ds.y) : std::nan("");
    for (std::size_t k = 0; k < bs.size(); ++k) {
      const auto poisoned = apply_perturbation(g, plans[k]);
      const std::string file = "plan_b" + std::to_string(bs[k]) + ".txt";
      r.write(file, format_plan(g, plans[k]));
      MetricRow row;
      row.method = method;
      row.budget = bs[k];
      json entry = {{"b", bs[k]}, {"ops", plans[k].size()}, {"objective_before", clean},
                    {"objective_after", obj->value(poisoned)}, {"plan_file", file}};
      if (fallback[k]) entry["fallback"] = true;
      if (model == "oddball") {
        row.tau_as = tau_as(s0, target_score_sum(poisoned, tset));
        entry["tau_as"] = row.tau_as;
      } else {
        row.auc = lgcn_auc(poisoned, prob, split.test, ds.y);
        entry["auc_clean"] = auc0;
        entry["auc"] = row.auc;
      }
      report["budgets"].push_back(entry);
      rows.push_back(row);
      std::cout << "b=" << bs[k] << " ops=" << plans[k].size() << " objective " << clean << " -> "
                << entry["objective_after"].get<double>();
      if (model == "oddball") std::cout << " tau_as " << row.tau_as;
      else std::cout << " auc " << auc0 << " -> " << row.auc;
      std::cout << "\n";
    }
    r.write("metrics.csv", format_metrics_csv(rows));
    report["wall_time"] = seconds_since(t0);
    r.write("attack_report.json", report.dump(2) + "\n", false);
  }
};

// ---------------------------------------------------------------------- eval

struct EvalCmd {
  std::string graph;
  std::string plan;
  std::string model = "oddball";
  std::string targets = "auto:50,10";
  std::string label = "eval";
  std::size_t permtest = 100000;
  long long budget = -1;
  LgcnFlags lf;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Recompute metrics for a perturbation plan");
    c->add_option("--graph", graph, "Clean edge list")->required();
    c->add_option("--plan", plan, "Plan file")->required();
    c->add_option("--model", model, "Detector")->check(CLI::IsMember({"oddball", "lgcn"}))->capture_default_str();
    c->add_option("--targets", targets, "Target file or auto:POOL,COUNT (oddball)")->capture_default_str();
    c->add_option("--label", label, "Method column of the metric row")->capture_default_str();
    c->add_option("--permtest", permtest, "Permutation test resamples (0 = skip)")->capture_default_str();
    c->add_option("--budget", budget, "Budget column (default: plan length)");
    lf.add(c);
  }

  void run(Run& r, std::uint64_t seed) const {
    r.input(graph);
    r.input(plan);
    r.input(targets);
    const Graph g = load_edge_list(graph);
    const auto pl = load_plan(g, plan);
    const Graph poisoned = apply_perturbation(g, pl);
    auto& p = r.params();
    p = {{"graph", graph}, {"plan", plan}, {"model", model}, {"targets", targets}, {"label", label},
         {"permtest", permtest}, {"budget", budget}};

    MetricRow row;
    row.method = label;
    row.budget = budget >= 0 ? static_cast<std::size_t>(budget) : pl.size();
    json out = {{"plan", plan}, {"ops", pl.size()}, {"seed", seed}};
    if (model == "oddball") {
      const auto t = resolve_targets(g, targets, seed);
      const double s0 = target_score_sum(g, t), sb = target_score_sum(poisoned, t);
      row.tau_as = tau_as(s0, sb);
      out["score_sum_clean"] = s0;
      out["score_sum_poisoned"] = sb;
      out["tau_as"] = row.tau_as;
    } else {
      lf.record(p);
      const auto ds = lf.load(g, r);
      const auto split = stratified_split(ds.y, lf.test_frac, lf.split_seed);
      const auto prob = make_lgcn_problem(ds, split, lf.xi, lf.h, lf.convention());
      out["auc_clean"] = lgcn_auc(g, prob, split.test, ds.y);
      row.auc = lgcn_auc(poisoned, prob, split.test, ds.y);
      out["auc"] = row.auc;
    }
    if (permtest > 0) {
      const auto fs = feature_shift_report(egonet_features(g), egonet_features(poisoned), permtest, seed);
      row.p_N = fs.N.p_value;
      row.p_E = fs.E.p_value;
      out["permtest"] = {{"M", permtest},
                         {"N", {{"t0", fs.N.t0}, {"p_value", fs.N.p_value}, {"seed", fs.N.seed}}},
                         {"E", {{"t0", fs.E.t0}, {"p_value", fs.E.p_value}, {"seed", fs.E.seed}}}};
    }
    r.write("metrics.csv", format_metrics_csv({row}));
    r.write("eval.json", out.dump(2) + "\n");
    std::cout << format_metrics_csv({row});
  }
};

// -------------------------------------------------------------------- defend

struct DefendCmd {
  std::string graph;
  std::vector<std::string> plans;
  std::string targets = "auto:50,10";
  std::string robust = "ransac";
  double k = 1.0;
  double inlier_tol = 1.0;
  int ransac_iters = 1000;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("defend", "Score poisoned graphs with a robust power-law fit");
    c->add_option("--graph", graph, "Clean edge list")->required();
    c->add_option("--plan", plans, "Plan file(s)")->required();
    c->add_option("--targets", targets, "Target file or auto:POOL,COUNT")->capture_default_str();
    c->add_option("--robust", robust, "Robust estimator")
        ->check(CLI::IsMember({"huber", "ransac"}))
        ->capture_default_str();
    c->add_option("--k", k, "Huber threshold")->capture_default_str();
    c->add_option("--inlier-tol", inlier_tol, "RANSAC inlier tolerance")->capture_default_str();
    c->add_option("--ransac-iters", ransac_iters, "RANSAC iterations")->capture_default_str();
  }

  void run(Run& r, std::uint64_t seed) const {
    const auto t0 = std::chrono::steady_clock::now();
    r.input(graph);
    r.input(targets);
    const Graph g = load_edge_list(graph);
    const auto t = resolve_targets(g, targets, seed);
    const auto cfg = robust_config(k, inlier_tol, ransac_iters, seed);
    const auto method = parse_robust_method(robust);
    r.params() = {{"graph", graph}, {"plans", plans}, {"targets", targets}, {"robust", robust}, {"k", k},
                  {"inlier_tol", inlier_tol}, {"ransac_iters", ransac_iters}};

    auto sum = [&](const AnomalyReport& rep) {
      double s = 0.0;
      for (std::size_t q = 0; q < t.size(); ++q) s += t.weight(q) * rep.scores[static_cast<std::size_t>(t.nodes[q])];
      return s;
    };
    const auto clean_ols = oddball(g);
    const auto clean_rob = robust_anomaly_scores(g, method, cfg);
    json report = {{"method", "defend"}, {"objective", "target_score_sum"}, {"defense_method", robust},
                   {"k", k}, {"inlier_tol", inlier_tol}, {"seed", seed}, {"budgets", json::array()}};
    std::vector<MetricRow> rows;
    for (const auto& file : plans) {
      r.input(file);
      const auto pl = load_plan(g, file);
      const auto poisoned = apply_perturbation(g, pl);
      const auto ols = oddball(poisoned);
      const auto rob = robust_anomaly_scores(poisoned, method, cfg);
      const double tau_rob = tau_as(sum(clean_rob), sum(rob));
      const double tau_ols = tau_as(sum(clean_ols), sum(ols));
      report["budgets"].push_back({{"b", pl.size()},
                                   {"plan_file", file},
                                   {"objective_before", sum(clean_rob)},
                                   {"objective_after", sum(rob)},
                                   {"tau_as", tau_rob},
                                   {"tau_as_ols", tau_ols},
                                   {"median_rank", median_target_rank(rob, t)},
                                   {"median_rank_ols", median_target_rank(ols, t)}});
      MetricRow row;
      row.method = robust;
      row.budget = pl.size();
      row.tau_as = tau_rob;
      rows.push_back(row);
      std::cout << file << " tau_as " << robust << " " << tau_rob << " ols " << tau_ols << " median rank "
                << median_target_rank(rob, t) << " ols " << median_target_rank(ols, t) << "\n";
    }
    r.write("metrics.csv", format_metrics_csv(rows));
    report["wall_time"] = seconds_since(t0);
    r.write("defense_report.json", report.dump(2) + "\n", false);
  }
};

// ----------------------------------------------------------------------- fit

struct FitCmd {
  std::string graph;
  int resplits = 5;
  LgcnFlags lf;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("fit", "Fit the LGCN detector over stratified resplits");
    c->add_option("--graph", graph, "Edge list")->required();
    c->add_option("--resplits", resplits, "Number of splits; seeds split-seed, split-seed+1, ...")->capture_default_str();
    lf.add(c);
  }

  void run(Run& r, std::uint64_t) const {
    if (resplits < 1) throw UsageError("--resplits must be >= 1");
    r.input(graph);
    const Graph g = load_edge_list(graph);
    r.params() = {{"graph", graph}, {"resplits", resplits}};
    lf.record(r.params());
    const auto ds = lf.load(g, r);
    json out = {{"splits", json::array()}};
    double mean = 0.0;
    for (int s = 0; s < resplits; ++s) {
      const std::uint64_t seed = lf.split_seed + static_cast<std::uint64_t>(s);
      const auto split = stratified_split(ds.y, lf.test_frac, seed);
      const auto prob = make_lgcn_problem(ds, split, lf.xi, lf.h, lf.convention());
      const double train_auc = lgcn_auc(g, prob, split.train, ds.y);
      const double test_auc = lgcn_auc(g, prob, split.test, ds.y);
      mean += test_auc / resplits;
      out["splits"].push_back(
          {{"omega", prob.omega}, {"xi", prob.xi}, {"train_auc", train_auc}, {"test_auc", test_auc}, {"split_seed", seed}});
      std::cout << "split " << seed << " train_auc " << train_auc << " test_auc " << test_auc << "\n";
    }
    out["mean_test_auc"] = mean;
    r.write("fit.json", out.dump(2) + "\n");
  }
};

int dispatch(std::vector<std::string> args);

// -------------------------------------------------------------------- replay

int replay(const std::string& manifest_path, const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("'" + manifest_path + "': " + e.what());
  }
  if (!m.contains("argv") || !m.contains("outputs")) throw DataError("'" + manifest_path + "' is not a run manifest");
  for (const auto& [path, digest] : m["inputs"].items())
    if (fnv1a(read_file(path)) != digest.get<std::string>()) throw DataError("input '" + path + "' changed since the run");
  auto args = m["argv"].get<std::vector<std::string>>();
  bool replaced = false;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--out" && k + 1 < args.size()) {
      args[k + 1] = out;
      replaced = true;
    } else if (args[k].rfind("--out=", 0) == 0) {
      args[k] = "--out=" + out;
      replaced = true;
    }
  }
  if (!replaced) throw DataError("manifest argv has no --out");
  args.insert(args.begin(), "gadlab");
  const int code = dispatch(args);
  if (code != 0) return code;
  int mismatches = 0;
  for (const auto& [name, digest] : m["outputs"].items()) {
    const bool same = fnv1a(read_file((fs::path(out) / name).string())) == digest.get<std::string>();
    if (!same) ++mismatches;
    std::cout << (same ? "same " : "DIFFERS ") << name << "\n";
  }
  if (mismatches) throw DataError(std::to_string(mismatches) + " output(s) differ from the manifest");
  return 0;
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"gadlab: graph anomaly detection attack lab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 0;
  std::string manifest;

  GenerateCmd gen;
  DetectCmd det;
  AttackCmd att;
  EvalCmd ev;
  DefendCmd def;
  FitCmd fit;
  gen.add(app);
  det.add(app);
  att.add(app);
  ev.add(app);
  def.add(app);
  fit.add(app);
  auto* rep = app.add_subcommand("replay", "Rerun a manifest and compare output digests");
  rep->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--out", out, "Output directory");
    if (sub != rep) sub->add_option("--seed", seed, "Master seed")->capture_default_str();
  }

  std::vector<const char*> cargv;
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "replay") return replay(manifest, out);
  Run run(name, std::vector<std::string>(args.begin() + 1, args.end()), out, seed);
  if (name == "generate") gen.run(run, seed);
  else if (name == "detect") det.run(run, seed);
  else if (name == "attack") att.run(run, seed);
  else if (name == "eval") ev.run(run, seed);
  else if (name == "defend") def.run(run, seed);
  else fit.run(run, seed);
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv, argv + argc));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Data);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
