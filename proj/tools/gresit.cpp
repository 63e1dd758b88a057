// gresit: command-line front end for generation, discovery, evaluation,
// standalone MURGS fits and benchmark sweeps.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gresit/gresit.hpp"

namespace fs = std::filesystem;
using gresit::Index;
using gresit::Matrix;
using gresit::Node;
using nlohmann::json;

namespace {

// Files written by one command. If the command fails they are removed so a
// nonzero exit never leaves a half-written result set behind.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& content) {
    if (!dir_.empty()) fs::create_directories(dir_);
    const fs::path target = path(name);
    gresit::write_text_file(target.string(), content);
    written_.push_back(target);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void commit() { committed_ = true; }

  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Training and pruning flags shared by discover and benchmark.
struct TrainingFlags {
  double alpha = 0.01;
  int epochs = 500;
  double lr = 0.01;
  Index batch_size = 500;
  int passes = 1;
  int patience = 20;
  std::vector<Index> hidden{32, 32};
  double test_fraction = 0.25;
  std::size_t grid_size = 20;
  std::string sink = "statistic";
  std::string smoother = "nw";

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "Significance level of the greedy independence pruner")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--n-epochs", epochs, "Maximum training epochs per regression")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--batch-size", batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--passes", passes, "Passes of the greedy pruner over each parent list")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--patience", patience, "Early-stopping patience in epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden layer widths")->capture_default_str();
    app->add_option("--test-fraction", test_fraction, "Held-out share for greedy pruning tests")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--grid-size", grid_size, "Number of lambda values on the MURGS grid")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    app->add_option("--sink", sink, "Sink selection rule")
        ->check(CLI::IsMember({"statistic", "pvalue"}))
        ->capture_default_str();
    app->add_option("--smoother", smoother, "MURGS smoother (nw: Gaussian kernel, ll: local linear)")
        ->check(CLI::IsMember({"nw", "ll"}))
        ->capture_default_str();
  }

  gresit::DiscoveryConfig config(std::uint64_t seed) const {
    gresit::DiscoveryConfig cfg;
    cfg.alpha = alpha;
    cfg.regressor.epochs = epochs;
    cfg.regressor.learning_rate = lr;
    cfg.regressor.batch_size = batch_size;
    cfg.regressor.patience = patience;
    cfg.regressor.hidden_layers = hidden;
    cfg.passes = passes;
    cfg.test_fraction = test_fraction;
    cfg.murgs.grid_size = grid_size;
    cfg.murgs.smoother = smoother == "ll" ? gresit::SmootherKind::local_linear : gresit::SmootherKind::nadaraya_watson;
    cfg.sink_criterion = sink == "pvalue" ? gresit::SinkCriterion::p_value : gresit::SinkCriterion::statistic;
    cfg.seed = seed;
    return cfg;
  }

  json to_json() const {
    return {{"alpha", alpha},         {"n_epochs", epochs},         {"lr", lr},
            {"batch_size", batch_size}, {"passes", passes},         {"patience", patience},
            {"hidden", hidden},       {"test_fraction", test_fraction}, {"grid_size", grid_size},
            {"sink", sink},           {"smoother", smoother}};
  }
};

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json names_json(const std::vector<Node>& nodes, const gresit::GroupSpec& spec) {
  json out = json::array();
  for (Node g : nodes) out.push_back(spec.group(g).name);
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::size_t p = 4;
  std::size_t group_dim = 2;
  std::vector<std::size_t> group_dims;
  Index n = 1000;
  std::string edge_prob = "proportional";
  double snr = 2.0;
  std::size_t gp_summands = 2;
  std::uint64_t seed = 0;
  std::string out = ".";
};

gresit::GanmSpec ganm_spec(const GenerateArgs& a) {
  gresit::GanmSpec spec;
  spec.group_dims = a.group_dims.empty() ? std::vector<std::size_t>(a.p, a.group_dim) : a.group_dims;
  if (a.edge_prob != "proportional") {
    try {
      std::size_t used = 0;
      spec.edge_probability = std::stod(a.edge_prob, &used);
      if (used != a.edge_prob.size()) throw std::invalid_argument(a.edge_prob);
    } catch (const std::exception&) {
      throw gresit::ArgumentError("--edge-prob must be a number in [0, 1] or 'proportional'");
    }
  }
  spec.n = a.n;
  spec.snr = a.snr;
  spec.seed = a.seed;
  spec.gp.summands = a.gp_summands;
  return spec;
}

int run_generate(const GenerateArgs& a) {
  const gresit::GanmSpec spec = ganm_spec(a);
  const auto [ds, truth] = gresit::generate(spec);
  Outputs out(a.out);
  out.write("data.csv", gresit::format_csv(ds.data(), ds.spec()));
  out.write_json("spec.json", gresit::spec_to_json(ds.spec()));
  out.write_json("truth.json", gresit::graph_to_json(truth.dag, ds.spec()));

  json mechanisms = json::array();
  for (Node g = 0; g < truth.mechanisms.size(); ++g) {
    const auto& m = truth.mechanisms[g];
    mechanisms.push_back({{"group", ds.spec().group(g).name},
                          {"parents", names_json(m.parents, ds.spec())},
                          {"noise_mean", std::vector<double>(m.noise.mean.data(), m.noise.mean.data() + m.noise.mean.size())},
                          {"noise_covariance_drawn", matrix_json(m.noise.raw_covariance)},
                          {"noise_covariance", matrix_json(m.noise.covariance)},
                          {"noise_covariance_repaired", m.noise.repaired},
                          {"signal_scale", m.signal_scale},
                          {"achieved_snr", m.achieved_snr}});
  }
  json prov = {{"seed", spec.seed},
               {"n", spec.n},
               {"group_dims", spec.group_dims},
               {"edge_probability", spec.edge_probability ? json(*spec.edge_probability) : json("proportional")},
               {"effective_edge_probability",
                spec.edge_probability.value_or(gresit::proportional_edge_probability(spec.group_dims.size()))},
               {"snr_target", spec.snr},
               {"gp", {{"summands", spec.gp.summands},
                       {"lengthscale", spec.gp.lengthscale},
                       {"weight_range", {spec.gp.weight_low, spec.gp.weight_high}}}},
               {"generation_order", names_json(truth.generation_order.sequence(), ds.spec())},
               {"mechanisms", mechanisms}};
  out.write_json("provenance.json", prov);
  out.commit();
  return 0;
}

// ---------------------------------------------------------------- discover

struct DiscoverArgs {
  std::string data, spec, pruning = "murgs", out = ".";
  std::uint64_t seed = 0;
  TrainingFlags flags;
};

gresit::Pruning parse_pruning(const std::string& s) {
  if (s == "murgs") return gresit::Pruning::murgs;
  if (s == "ind") return gresit::Pruning::greedy_ind;
  return gresit::Pruning::none;
}

int run_discover(const DiscoverArgs& a) {
  const gresit::GroupedDataset ds = gresit::load_dataset(a.data, a.spec);
  gresit::DiscoveryConfig cfg = a.flags.config(a.seed);
  cfg.pruning = parse_pruning(a.pruning);
  const auto start = std::chrono::steady_clock::now();
  const gresit::DiscoveryResult r = gresit::discover(ds, cfg);
  const double total = elapsed(start);
  if (!gresit::is_valid_order(r.graph, r.order)) throw gresit::Error("learned graph contradicts the learned order");

  const auto& spec = ds.spec();
  json scores = json::array();
  for (const auto& iteration : r.per_iteration_scores) {
    json it = json::array();
    for (const auto& s : iteration) {
      json e = {{"group", spec.group(s.group).name}, {"statistic", s.statistic}};
      if (!std::isnan(s.p_value)) e["p_value"] = s.p_value;
      it.push_back(e);
    }
    scores.push_back(it);
  }
  json pruning = json::array();
  for (const auto& np : r.pruning) {
    json e = {{"node", spec.group(np.node).name},
              {"candidates", names_json(np.candidates, spec)},
              {"parents", names_json(np.parents, spec)}};
    if (!std::isnan(np.lambda)) e["lambda"] = np.lambda;
    pruning.push_back(e);
  }
  json report = {{"order", names_json(r.order.sequence(), spec)},
                 {"pruning_method", a.pruning},
                 {"seed", a.seed},
                 {"settings", a.flags.to_json()},
                 {"regressions", r.regressions},
                 {"edge_count", r.graph.edge_count()},
                 {"per_iteration_scores", scores},
                 {"pruning", pruning}};

  Outputs out(a.out);
  out.write_json("graph.json", gresit::graph_to_json(r.graph, spec));
  out.write_json("report.json", report);
  out.write_json("timings.json",
                 {{"order_seconds", r.order_seconds}, {"prune_seconds", r.prune_seconds}, {"total_seconds", total}});
  out.commit();
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth, estimate, spec, report, out = ".", label = "estimate";
};

const char* kMetricsHeader = "label,p,precision,recall,f1,shd,sid,aaid,oaid";

std::string metrics_row(const std::string& label, const gresit::MetricsReport& m) {
  std::string row = label + "," + std::to_string(m.p) + "," + csv_number(m.precision) + "," + csv_number(m.recall) +
                    "," + csv_number(m.f1) + "," + std::to_string(m.shd) + "," + std::to_string(m.sid) + "," +
                    std::to_string(m.aaid) + ",";
  if (m.oaid) row += std::to_string(*m.oaid);
  return row;
}

int run_evaluate(const EvaluateArgs& a) {
  const gresit::GroupSpec spec = gresit::load_spec(a.spec);
  const gresit::GroupDag truth = gresit::graph_from_json(gresit::read_json_file(a.truth), spec);
  const gresit::GroupDag est = gresit::graph_from_json(gresit::read_json_file(a.estimate), spec);
  std::optional<gresit::CausalOrder> order;
  if (!a.report.empty()) {
    const json report = gresit::read_json_file(a.report);
    std::vector<Node> seq;
    for (const auto& name : report.at("order")) seq.push_back(spec.index_of(name.get<std::string>()));
    order = gresit::CausalOrder(seq);
  }
  const gresit::MetricsReport m = gresit::evaluate(est, truth, order);
  json j = {{"label", a.label}, {"p", m.p},     {"precision", m.precision}, {"recall", m.recall},
            {"f1", m.f1},       {"shd", m.shd}, {"sid", m.sid},             {"aaid", m.aaid}};
  j["oaid"] = m.oaid ? json(*m.oaid) : json(nullptr);

  Outputs out(a.out);
  out.write_json("metrics.json", j);
  out.write("metrics.csv", std::string(kMetricsHeader) + "\n" + metrics_row(a.label, m) + "\n");
  out.commit();
  return 0;
}

// ---------------------------------------------------------------- murgs

struct MurgsArgs {
  std::string data, spec, response, out = ".", smoother = "nw";
  std::vector<std::string> candidates;
  std::optional<double> lambda;
  bool gcv = false;
  std::size_t grid_size = 20;
};

int run_murgs(const MurgsArgs& a) {
  if (a.lambda.has_value() == a.gcv) throw gresit::ArgumentError("give exactly one of --lambda and --gcv");
  const gresit::GroupedDataset ds = gresit::detail::ensure_standardized(gresit::load_dataset(a.data, a.spec));
  const auto& spec = ds.spec();
  const Node response = spec.index_of(a.response);
  std::vector<Node> cands;
  if (a.candidates.empty()) {
    for (Node g = 0; g < spec.size(); ++g)
      if (g != response) cands.push_back(g);
  } else {
    for (const auto& name : a.candidates) {
      const Node g = spec.index_of(name);
      if (g == response) throw gresit::ArgumentError("the response group cannot be its own candidate");
      if (std::find(cands.begin(), cands.end(), g) != cands.end())
        throw gresit::ArgumentError("candidate '" + name + "' listed twice");
      cands.push_back(g);
    }
  }
  if (cands.empty()) throw gresit::ArgumentError("no candidate parent groups");

  const auto kind = a.smoother == "ll" ? gresit::SmootherKind::local_linear : gresit::SmootherKind::nadaraya_watson;
  std::vector<Matrix> parents;
  for (Node g : cands) parents.emplace_back(ds.group_view(g));
  const gresit::MurgsProblem problem(parents, Matrix(ds.group_view(response)), kind);

  gresit::MurgsFit fit;
  json selection;
  if (a.gcv) {
    gresit::LambdaSelection sel = gresit::select_lambda(problem, a.grid_size);
    selection = {{"grid", sel.grid}, {"gcv", sel.scores}, {"active_counts", sel.active_counts}};
    fit = std::move(sel.fit);
  } else {
    fit = gresit::backfit(problem, *a.lambda);
  }

  std::vector<Node> selected;
  for (std::size_t idx : fit.active) selected.push_back(cands[idx]);
  json norms = json::object();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(fit.group_norms.cols()));
    for (Index k = 0; k < fit.group_norms.cols(); ++k) row[static_cast<std::size_t>(k)] = fit.group_norms(static_cast<Index>(i), k);
    norms[spec.group(cands[i]).name] = row;
  }
  json report = {{"response", a.response},
                 {"candidates", names_json(cands, spec)},
                 {"selected", names_json(selected, spec)},
                 {"lambda", fit.lambda},
                 {"lambda_max", gresit::lambda_max(problem)},
                 {"gcv", gresit::gcv(fit, problem)},
                 {"df", gresit::murgs_df(fit, problem)},
                 {"objective", fit.objective_trace.back()},
                 {"sweeps", fit.sweeps},
                 {"converged", fit.converged},
                 {"group_norms", norms}};
  if (a.gcv) report["selection"] = selection;

  Outputs out(a.out);
  out.write_json("murgs.json", report);
  out.commit();
  return 0;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::vector<std::size_t> ps{4}, dims{2};
  std::vector<Index> ns{500};
  int repetitions = 2;
  std::vector<std::string> methods{"gresit-murgs", "gresit-ind", "grandreg"};
  std::string edge_prob = "proportional";
  std::uint64_t seed = 0;
  std::string out = ".";
  TrainingFlags flags;
};

struct Job {
  std::size_t cell = 0;
  std::size_t p = 0, d = 0;
  Index n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string method;
  gresit::MetricsReport metrics;
  double seconds = 0.0;
};

std::vector<RunRecord> run_job(const Job& job, const BenchmarkArgs& a) {
  GenerateArgs g;
  g.group_dims.assign(job.p, job.d);
  g.n = job.n;
  g.edge_prob = a.edge_prob;
  g.seed = gresit::derive_seed(job.seed, 0);
  const auto [ds, truth] = gresit::generate(ganm_spec(g));
  const gresit::DiscoveryConfig cfg = a.flags.config(gresit::derive_seed(job.seed, 1));

  std::vector<RunRecord> out;
  const bool need_order = std::count(a.methods.begin(), a.methods.end(), "gresit-murgs") +
                              std::count(a.methods.begin(), a.methods.end(), "gresit-ind") >
                          0;
  std::optional<gresit::OrderResult> order;
  double order_seconds = 0.0;
  if (need_order) {
    const auto start = std::chrono::steady_clock::now();
    order = gresit::learn_order(ds, cfg);
    order_seconds = elapsed(start);
  }
  for (const auto& method : a.methods) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.method = method;
    if (method == "gresit-murgs") {
      rec.metrics = gresit::evaluate(gresit::prune_murgs(ds, order->order, cfg.murgs), truth.dag, order->order);
    } else if (method == "gresit-ind") {
      rec.metrics = gresit::evaluate(gresit::prune_greedy_ind(ds, order->order, cfg), truth.dag, order->order);
    } else {
      const auto r = gresit::random_order_baseline(ds, gresit::derive_seed(job.seed, 2), cfg.murgs);
      rec.metrics = gresit::evaluate(r.graph, truth.dag, r.order);
    }
    rec.seconds = elapsed(start) + (method == "grandreg" ? 0.0 : order_seconds);
    out.push_back(rec);
  }
  return out;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("GRESIT_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw gresit::ArgumentError("GRESIT_WORKERS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_benchmark(const BenchmarkArgs& a) {
  for (const auto& m : a.methods)
    if (m != "gresit-murgs" && m != "gresit-ind" && m != "grandreg")
      throw gresit::ArgumentError("unknown method '" + m + "'");
  if (a.repetitions < 1) throw gresit::ArgumentError("--repetitions must be >= 1");

  std::vector<Job> jobs;
  std::size_t cell = 0;
  for (std::size_t p : a.ps)
    for (std::size_t d : a.dims)
      for (Index n : a.ns) {
        for (int rep = 0; rep < a.repetitions; ++rep)
          jobs.push_back({cell, p, d, n, rep, gresit::derive_seed(a.seed, cell, static_cast<std::uint64_t>(rep))});
        ++cell;
      }

  std::vector<std::vector<RunRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_job(jobs[i], a);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      std::lock_guard lock(log_mutex);
      std::fprintf(stderr, "[%zu/%zu] p=%zu d=%zu n=%td rep=%d %s\n", i + 1, jobs.size(), jobs[i].p, jobs[i].d,
                   static_cast<std::ptrdiff_t>(jobs[i].n), jobs[i].rep, errors[i].empty() ? "done" : "FAILED");
    }
  };
  const std::size_t workers = std::min(worker_count(), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!errors[i].empty())
      throw gresit::Error("benchmark job p=" + std::to_string(jobs[i].p) + " rep=" + std::to_string(jobs[i].rep) +
                          " failed: " + errors[i]);

  const std::vector<std::string> metric_names{"precision", "recall", "f1", "shd", "sid", "aaid", "oaid"};
  auto metric_values = [](const gresit::MetricsReport& m) {
    return std::vector<double>{m.precision,
                               m.recall,
                               m.f1,
                               static_cast<double>(m.shd),
                               static_cast<double>(m.sid),
                               static_cast<double>(m.aaid),
                               m.oaid ? static_cast<double>(*m.oaid) : std::nan("")};
  };

  std::string runs = "method,p,d,n,rep,seed," + [&] {
    std::string h;
    for (const auto& name : metric_names) h += name + ",";
    return h;
  }() + "seconds\n";
  // (cell, method) -> per-metric samples, filled in job order.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::vector<double>>> samples;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (std::size_t mi = 0; mi < results[i].size(); ++mi) {
      const auto& rec = results[i][mi];
      const auto values = metric_values(rec.metrics);
      runs += rec.method + "," + std::to_string(jobs[i].p) + "," + std::to_string(jobs[i].d) + "," +
              std::to_string(jobs[i].n) + "," + std::to_string(jobs[i].rep) + "," + std::to_string(jobs[i].seed);
      for (double v : values) runs += "," + csv_number(v);
      runs += "," + csv_number(rec.seconds) + "\n";
      auto& slot = samples[{jobs[i].cell, mi}];
      slot.resize(values.size());
      for (std::size_t k = 0; k < values.size(); ++k) slot[k].push_back(values[k]);
    }
  }

  auto mean_sd = [](const std::vector<double>& xs) {
    std::vector<double> v;
    for (double x : xs)
      if (!std::isnan(x)) v.push_back(x);
    if (v.empty()) return std::pair{std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };

  std::string summary = "method,p,d,n,runs";
  for (const auto& name : metric_names) summary += "," + name + "_mean," + name + "_sd";
  summary += "\n";
  std::string tidy = "method,metric,p,d,n,mean,sd\n";
  for (const auto& [key, per_metric] : samples) {
    const auto& job = *std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) { return j.cell == key.first; });
    const std::string& method = a.methods[key.second];
    const std::string coords = std::to_string(job.p) + "," + std::to_string(job.d) + "," + std::to_string(job.n);
    summary += method + "," + coords + "," + std::to_string(per_metric.front().size());
    for (std::size_t k = 0; k < metric_names.size(); ++k) {
      const auto [mean, sd] = mean_sd(per_metric[k]);
      summary += "," + csv_number(mean) + "," + csv_number(sd);
      tidy += method + "," + metric_names[k] + "," + coords + "," + csv_number(mean) + "," + csv_number(sd) + "\n";
    }
    summary += "\n";
  }

  json config = {{"p", a.ps},           {"group_dim", a.dims},     {"n", a.ns},
                 {"repetitions", a.repetitions}, {"methods", a.methods}, {"edge_prob", a.edge_prob},
                 {"seed", a.seed},       {"settings", a.flags.to_json()}};
  Outputs out(a.out);
  out.write("summary.csv", summary);
  out.write("tidy.csv", tidy);
  out.write("runs.csv", runs);
  out.write_json("benchmark.json", config);
  out.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal discovery over groups of variables"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a synthetic grouped additive noise model dataset");
  g->add_option("--p", gen.p, "Number of groups")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--group-dim", gen.group_dim, "Dimension of every group")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--group-dims", gen.group_dims, "Per-group dimensions (overrides --p/--group-dim)");
  g->add_option("--n", gen.n, "Sample size")->check(CLI::Range(Index{2}, Index{1} << 30))->capture_default_str();
  g->add_option("--edge-prob", gen.edge_prob, "Edge probability or 'proportional'")->capture_default_str();
  g->add_option("--snr", gen.snr, "Signal-to-noise ratio")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--gp-summands", gen.gp_summands, "Gaussian-process draws per output coordinate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->capture_default_str();

  DiscoverArgs disc;
  auto* d = app.add_subcommand("discover", "Learn a causal order and prune it to a group DAG");
  d->add_option("--data", disc.data, "Dataset CSV")->required();
  d->add_option("--spec", disc.spec, "Group spec JSON")->required();
  d->add_option("--pruning", disc.pruning, "Pruning method")
      ->check(CLI::IsMember({"murgs", "ind", "none"}))
      ->capture_default_str();
  d->add_option("--seed", disc.seed, "Random seed")->capture_default_str();
  d->add_option("--out", disc.out, "Output directory")->capture_default_str();
  disc.flags.add(d);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compare an estimated graph with the truth");
  e->add_option("--truth", ev.truth, "Ground-truth graph JSON")->required();
  e->add_option("--estimate", ev.estimate, "Estimated graph JSON")->required();
  e->add_option("--spec", ev.spec, "Group spec JSON")->required();
  e->add_option("--report", ev.report, "Discovery report JSON (enables OAID)");
  e->add_option("--label", ev.label, "Label for the CSV row")->capture_default_str();
  e->add_option("--out", ev.out, "Output directory")->capture_default_str();

  MurgsArgs mu;
  auto* m = app.add_subcommand("murgs", "Fit MURGS for one response group");
  m->add_option("--data", mu.data, "Dataset CSV")->required();
  m->add_option("--spec", mu.spec, "Group spec JSON")->required();
  m->add_option("--response", mu.response, "Response group name")->required();
  m->add_option("--candidates", mu.candidates, "Candidate parent group names (default: all others)")->delimiter(',');
  auto* lam = m->add_option("--lambda", mu.lambda, "Fixed regularization parameter")->check(CLI::NonNegativeNumber);
  auto* gcv = m->add_flag("--gcv", mu.gcv, "Select lambda by GCV");
  lam->excludes(gcv);
  m->add_option("--grid-size", mu.grid_size, "Lambda grid size for --gcv")->check(CLI::Range(2, 1000))->capture_default_str();
  m->add_option("--smoother", mu.smoother, "Smoother")->check(CLI::IsMember({"nw", "ll"}))->capture_default_str();
  m->add_option("--out", mu.out, "Output directory")->capture_default_str();

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run a simulation sweep (workers: GRESIT_WORKERS)");
  b->add_option("--p", bench.ps, "Group counts")->delimiter(',')->capture_default_str();
  b->add_option("--group-dim", bench.dims, "Group dimensions")->delimiter(',')->capture_default_str();
  b->add_option("--n", bench.ns, "Sample sizes")->delimiter(',')->capture_default_str();
  b->add_option("--repetitions", bench.repetitions, "Runs per cell")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--methods", bench.methods, "Methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"gresit-murgs", "gresit-ind", "grandreg"}))
      ->capture_default_str();
  b->add_option("--edge-prob", bench.edge_prob, "Edge probability or 'proportional'")->capture_default_str();
  b->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
  b->add_option("--out", bench.out, "Output directory")->capture_default_str();
  bench.flags.add(b);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_generate(gen);
    if (*d) return run_discover(disc);
    if (*e) return run_evaluate(ev);
    if (*m) return run_murgs(mu);
    if (*b) return run_benchmark(bench);
  } catch (const gresit::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
