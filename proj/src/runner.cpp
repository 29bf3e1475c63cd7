#include "clever/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "clever/dataset_io.hpp"
#include "clever/model_io.hpp"
#include "clever/rng.hpp"

#include <json.hpp>

namespace clever {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

bool oracle_supports(const Network& net) {
  return net.layers.size() == 2 && net.layers[0].activation.kind == ActivationKind::ReLU &&
         net.layers[0].out_dim() <= 20;
}

void append_warning(std::string& warnings, const std::string& token) {
  if (!warnings.empty()) warnings += ';';
  warnings += token;
}

}  // namespace

void RunManifest::validate() const {
  if (model_path.empty() || dataset_path.empty())
    throw InputError("manifest needs model_path and dataset_path");
  if (instances < 1 && instance_ids.empty())
    throw InputError("manifest selects no instances");
  if (targets.empty()) throw InputError("manifest needs at least one target kind");
  if (p_list.empty()) throw InputError("manifest needs at least one norm order");
  if (!(ball_radius > 0.0)) throw InputError("ball radius must be positive");
  if (workers < 1) throw InputError("workers must be >= 1");
  sampling.validate();
  attack.validate();
}

RunManifest manifest_from_json_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
  try {
    RunManifest m;
    m.model_path = doc.value("model_path", m.model_path);
    m.dataset_path = doc.value("dataset_path", m.dataset_path);
    m.output_dir = doc.value("output_dir", m.output_dir);
    m.instances = doc.value("instances", m.instances);
    if (doc.contains("instance_ids"))
      m.instance_ids = doc.at("instance_ids").get<std::vector<int>>();
    if (doc.contains("targets")) {
      m.targets.clear();
      for (const json& t : doc.at("targets"))
        m.targets.push_back(target_kind_from_string(t.get<std::string>()));
    }
    if (doc.contains("p_list")) {
      m.p_list.clear();
      for (const json& p : doc.at("p_list")) m.p_list.push_back(norm_from_string(p.get<std::string>()));
    }
    if (doc.contains("sampling")) {
      const json& s = doc.at("sampling");
      m.sampling.n_batches = s.value("n_batches", m.sampling.n_batches);
      m.sampling.n_per_batch = s.value("n_per_batch", m.sampling.n_per_batch);
      m.sampling.seed = s.value("seed", m.sampling.seed);
    }
    m.ball_radius = doc.value("ball_radius", m.ball_radius);
    if (doc.contains("attack")) {
      const json& a = doc.at("attack");
      m.attack.iterations = a.value("iterations", m.attack.iterations);
      if (a.contains("eps_list")) m.attack.eps_list = a.at("eps_list").get<std::vector<double>>();
      m.attack.step_fraction = a.value("step_fraction", m.attack.step_fraction);
      m.attack.l2_steps = a.value("l2_steps", m.attack.l2_steps);
      m.attack.l2_lr = a.value("l2_lr", m.attack.l2_lr);
      m.attack.lambda_search_steps = a.value("lambda_search_steps", m.attack.lambda_search_steps);
      if (a.contains("input_box"))
        m.attack.input_box = std::array<double, 2>{a.at("input_box")[0].get<double>(),
                                                   a.at("input_box")[1].get<double>()};
    }
    m.workers = doc.value("workers", m.workers);
    m.seed = doc.value("seed", m.seed);
    m.run_slope = doc.value("run_slope", m.run_slope);
    m.run_oracle = doc.value("run_oracle", m.run_oracle);
    m.run_attacks = doc.value("run_attacks", m.run_attacks);
    return m;
  } catch (const json::exception& e) {
    throw InputError(origin + ": " + e.what());
  }
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return manifest_from_json_text(text.str(), path.string());
}

std::string manifest_to_json_text(const RunManifest& m) {
  json targets = json::array();
  for (TargetSpec::Kind kind : m.targets) targets.push_back(to_string(kind));
  json p_list = json::array();
  for (NormOrder p : m.p_list) p_list.push_back(to_string(p));
  json doc{{"model_path", m.model_path},
           {"dataset_path", m.dataset_path},
           {"output_dir", m.output_dir},
           {"instances", m.instances},
           {"instance_ids", m.instance_ids},
           {"targets", targets},
           {"p_list", p_list},
           {"sampling",
            {{"n_batches", m.sampling.n_batches},
             {"n_per_batch", m.sampling.n_per_batch},
             {"seed", m.sampling.seed}}},
           {"ball_radius", m.ball_radius},
           {"attack",
            {{"iterations", m.attack.iterations},
             {"eps_list", m.attack.eps_list},
             {"step_fraction", m.attack.step_fraction},
             {"l2_steps", m.attack.l2_steps},
             {"l2_lr", m.attack.l2_lr},
             {"lambda_search_steps", m.attack.lambda_search_steps}}},
           {"workers", m.workers},
           {"seed", m.seed},
           {"run_slope", m.run_slope},
           {"run_oracle", m.run_oracle},
           {"run_attacks", m.run_attacks}};
  if (m.attack.input_box)
    doc["attack"]["input_box"] = {(*m.attack.input_box)[0], (*m.attack.input_box)[1]};
  return doc.dump(2);
}

std::string manifest_hash(const RunManifest& m) {
  // workers do not affect results, so they do not enter the hash
  RunManifest canon = m;
  canon.workers = 1;
  std::ostringstream hex;
  hex << std::hex << fnv1a(manifest_to_json_text(canon));
  return hex.str();
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct TargetCell {
  int instance_id = 0;
  TargetSpec::Kind kind = TargetSpec::Kind::Top2;
  int target_j = -1;
  int predicted_c = 0;
};

std::vector<int> select_instances(const RunManifest& m, const Network& net, const Dataset& data,
                                  std::vector<SkipRecord>& skipped) {
  std::vector<int> chosen;
  auto consider = [&](int row) {
    if (row < 0 || row >= static_cast<int>(data.features.rows())) {
      std::ostringstream msg;
      msg << "instance id " << row << " outside dataset of " << data.features.rows() << " rows";
      throw InputError(msg.str());
    }
    const Eigen::VectorXd x = data.features.row(row).transpose();
    const int pred = predict(net, x);
    if (pred != data.labels[row]) {
      skipped.push_back({row, data.labels[row], pred, "misclassified"});
      return;
    }
    chosen.push_back(row);
  };
  if (!m.instance_ids.empty()) {
    for (int id : m.instance_ids) consider(id);
  } else {
    for (int row = 0; row < static_cast<int>(data.features.rows()) &&
                      static_cast<int>(chosen.size()) < m.instances;
         ++row)
      consider(row);
  }
  return chosen;
}

}  // namespace

ScoreRun run_score(const RunManifest& manifest) {
  manifest.validate();
  const Network net = load_network_json(manifest.model_path);
  const Dataset data = load_dataset_csv(manifest.dataset_path);
  if (net.input_dim != data.d) {
    std::ostringstream msg;
    msg << "model expects input dim " << net.input_dim << " but dataset has " << data.d;
    throw InputError(msg.str());
  }

  ScoreRun out;
  out.hash = manifest_hash(manifest);
  const std::vector<int> instances = select_instances(manifest, net, data, out.skipped);

  const bool oracle_ok = oracle_supports(net);

  // resolve targets once per (instance, kind); the random draw is seeded by
  // (manifest seed, instance id) so adding instances never reshuffles it
  std::vector<TargetCell> target_cells;
  for (int id : instances) {
    const Eigen::VectorXd x0 = data.features.row(id).transpose();
    const int c = predict(net, x0);
    for (TargetSpec::Kind kind : manifest.targets) {
      TargetCell cell;
      cell.instance_id = id;
      cell.kind = kind;
      cell.predicted_c = c;
      auto rng = make_rng(derive_seed(manifest.seed, static_cast<std::uint64_t>(id), 0x7A46));
      cell.target_j = select_target(net, x0, TargetSpec{kind, -1}, rng);
      target_cells.push_back(cell);
    }
  }

  // attack phase: one I-FGSM sweep and one l2 descent per (instance, target)
  std::vector<std::optional<AttackOutcome>> ifgsm_by_target(target_cells.size());
  std::vector<std::optional<AttackOutcome>> l2_by_target(target_cells.size());
  if (manifest.run_attacks) {
    parallel_for(static_cast<int>(target_cells.size()), manifest.workers, [&](int k) {
      const TargetCell& tc = target_cells[k];
      const Eigen::VectorXd x0 = data.features.row(tc.instance_id).transpose();
      ifgsm_by_target[k] =
          ifgsm_best_eps(net, x0, tc.predicted_c, tc.target_j, manifest.attack);
      l2_by_target[k] = margin_descent_l2(net, x0, tc.predicted_c, tc.target_j, manifest.attack);
    });
  }

  const int n_p = static_cast<int>(manifest.p_list.size());
  out.cells.resize(target_cells.size() * n_p);

  parallel_for(static_cast<int>(out.cells.size()), manifest.workers, [&](int flat) {
    const int tcell = flat / n_p;
    const NormOrder p = manifest.p_list[flat % n_p];
    const TargetCell& tc = target_cells[tcell];
    const Eigen::VectorXd x0 = data.features.row(tc.instance_id).transpose();

    CellResult cell;
    ResultRow& row = cell.row;
    row.instance_id = tc.instance_id;
    row.true_label = data.labels[tc.instance_id];
    row.predicted_c = tc.predicted_c;
    row.target_kind = to_string(tc.kind);
    row.target_j = tc.target_j;
    row.p = p;

    const Ball ball{x0, manifest.ball_radius, p};
    SampleConfig cfg = manifest.sampling;
    cfg.seed = derive_seed(manifest.seed, static_cast<std::uint64_t>(tc.instance_id),
                           static_cast<std::uint64_t>(tc.kind), static_cast<std::uint64_t>(p));
    cfg.workers = 1;

    try {
      CleverScore score = clever_t(net, x0, tc.target_j, ball, cfg);
      cell.margin = score.margin;
      row.clever_value = score.value;
      row.capped = score.capped;
      if (score.tie) {
        append_warning(row.warnings, "tie");
      } else {
        row.a_hat = score.location_estimate;
        row.ks_D = score.fit.ks_statistic;
        row.ks_pvalue = score.fit.ks_pvalue;
        if (score.fit.degenerate) append_warning(row.warnings, "degenerate_fit");
        if (!score.fit.regular && !score.fit.degenerate)
          append_warning(row.warnings, "nonregular_fit");
        if (score.fit_warning) append_warning(row.warnings, "fit_warning");
      }
      cell.score = std::move(score);
    } catch (const NumericError& e) {
      append_warning(row.warnings, std::string("numeric_error:") + e.what());
    }

    if (manifest.run_slope) {
      try {
        const SlopeEstimate slope = slope_estimate(net, x0, tc.predicted_c, tc.target_j, ball, cfg);
        row.slope_value = slope.estimate.value;
        row.slope_score =
            theoretical_lower_bound(std::max(cell.margin, 0.0), slope.estimate.value,
                                    manifest.ball_radius);
      } catch (const NumericError& e) {
        append_warning(row.warnings, std::string("slope_error:") + e.what());
      }
    }

    if (manifest.run_oracle) {
      if (oracle_ok) {
        const LipschitzEstimate exact =
            exact_local_cross_lipschitz(net, x0, tc.predicted_c, tc.target_j, ball);
        row.oracle_value = exact.value;
        if (!exact.certified) append_warning(row.warnings, "oracle_uncertified");
      } else {
        append_warning(row.warnings, "oracle_skipped:unsupported_architecture");
      }
    }

    if (manifest.run_attacks) {
      const AttackOutcome& fg = *ifgsm_by_target[tcell];
      const AttackOutcome& l2 = *l2_by_target[tcell];
      cell.ifgsm_outcome = fg;
      cell.l2_outcome = l2;
      row.ifgsm_distortion = p == NormOrder::Linf ? fg.distortion_linf : fg.distortion_l2;
      row.l2_attack_distortion = p == NormOrder::Linf ? l2.distortion_linf : l2.distortion_l2;
      if (!fg.success) append_warning(row.warnings, "ifgsm_failed");
      if (!l2.success) append_warning(row.warnings, "l2_attack_failed");
    }

    out.cells[flat] = std::move(cell);
  });

  return out;
}

static const char* kCsvHeader =
    "instance_id,true_label,predicted_c,target_kind,target_j,p,clever_value,a_hat,ks_D,"
    "ks_pvalue,slope_value,oracle_value,ifgsm_distortion,l2_attack_distortion,capped,warnings";

void write_results_csv(const ScoreRun& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write results csv: " + path.string());
  out << kCsvHeader << '\n';
  for (const CellResult& cell : run.cells) {
    const ResultRow& r = cell.row;
    out << r.instance_id << ',' << r.true_label << ',' << r.predicted_c << ',' << r.target_kind
        << ',' << r.target_j << ',' << to_string(r.p) << ',' << fmt(r.clever_value) << ','
        << fmt(r.a_hat) << ',' << fmt(r.ks_D) << ',' << fmt(r.ks_pvalue) << ','
        << fmt(r.slope_value) << ',' << fmt(r.oracle_value) << ',' << fmt(r.ifgsm_distortion)
        << ',' << fmt(r.l2_attack_distortion) << ',' << (r.capped ? 1 : 0) << ',' << r.warnings
        << '\n';
  }
}

namespace {

json row_to_json(const ResultRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"instance_id", r.instance_id},
              {"true_label", r.true_label},
              {"predicted_c", r.predicted_c},
              {"target_kind", r.target_kind},
              {"target_j", r.target_j},
              {"p", to_string(r.p)},
              {"clever_value", opt(r.clever_value)},
              {"a_hat", opt(r.a_hat)},
              {"ks_D", opt(r.ks_D)},
              {"ks_pvalue", opt(r.ks_pvalue)},
              {"slope_value", opt(r.slope_value)},
              {"oracle_value", opt(r.oracle_value)},
              {"ifgsm_distortion", opt(r.ifgsm_distortion)},
              {"l2_attack_distortion", opt(r.l2_attack_distortion)},
              {"capped", r.capped},
              {"warnings", r.warnings}};
}

}  // namespace

void write_results_json(const ScoreRun& run, const RunManifest& manifest,
                        const std::filesystem::path& path) {
  json rows = json::array();
  for (const CellResult& cell : run.cells) rows.push_back(row_to_json(cell.row));
  json skipped = json::array();
  for (const SkipRecord& s : run.skipped)
    skipped.push_back({{"instance_id", s.instance_id},
                       {"true_label", s.true_label},
                       {"predicted_c", s.predicted_c},
                       {"reason", s.reason}});
  json doc{{"manifest_hash", run.hash},
           {"manifest", json::parse(manifest_to_json_text(manifest))},
           {"skipped", skipped},
           {"rows", rows}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write results json: " + path.string());
  out << doc.dump(2) << '\n';
}

CompareReport run_compare(const RunManifest& manifest) {
  RunManifest m = manifest;
  m.run_slope = true;
  m.run_attacks = true;

  CompareReport report;
  report.run = run_score(m);

  // per (target kind, p) means
  struct Acc {
    double clever = 0.0;
    long clever_n = 0;
    double slope = 0.0;
    long slope_n = 0;
    double attack = 0.0;
    long attack_n = 0;
    long cells = 0;
  };
  std::map<std::pair<std::string, int>, Acc> acc;
  for (const CellResult& cell : report.run.cells) {
    const ResultRow& r = cell.row;
    Acc& a = acc[{r.target_kind, static_cast<int>(r.p)}];
    a.cells += 1;
    if (r.clever_value) {
      a.clever += *r.clever_value;
      a.clever_n += 1;
    }
    if (r.slope_score) {
      a.slope += *r.slope_score;
      a.slope_n += 1;
    }
    const std::optional<AttackOutcome>& attack =
        r.p == NormOrder::Linf ? cell.ifgsm_outcome : cell.l2_outcome;
    if (attack && attack->success) {
      a.attack += r.p == NormOrder::Linf ? attack->distortion_linf : attack->distortion_l2;
      a.attack_n += 1;
    }
  }
  for (const auto& [key, a] : acc) {
    CompareReport::MeanRow row;
    row.target_kind = key.first;
    row.p = static_cast<NormOrder>(key.second);
    row.cells = a.cells;
    row.mean_clever = a.clever_n ? a.clever / a.clever_n : 0.0;
    if (a.slope_n) row.mean_slope_score = a.slope / a.slope_n;
    if (a.attack_n) row.mean_attack_distortion = a.attack / a.attack_n;
    row.attacks_succeeded = a.attack_n;
    report.means.push_back(row);
  }

  // Table-4 style validity: linf scores against I-FGSM, l2 against the
  // margin-descent attack
  for (NormOrder p : m.p_list) {
    if (p == NormOrder::L1) continue;  // no l1 attack in this toolkit
    std::vector<ScoreEntry> scores;
    std::vector<OutcomeEntry> outcomes;
    std::set<std::tuple<int, int, int>> seen;  // target kinds can resolve to the same class
    long slope_over = 0, slope_base = 0;
    for (const CellResult& cell : report.run.cells) {
      const ResultRow& r = cell.row;
      if (r.p != p || !r.clever_value) continue;
      const std::optional<AttackOutcome>& attack =
          p == NormOrder::Linf ? cell.ifgsm_outcome : cell.l2_outcome;
      if (!attack) continue;
      if (!seen.insert({r.instance_id, r.target_j, static_cast<int>(p)}).second) continue;
      const double distortion =
          p == NormOrder::Linf ? attack->distortion_linf : attack->distortion_l2;
      scores.push_back({r.instance_id, r.target_j, p, *r.clever_value});
      outcomes.push_back({r.instance_id, r.target_j, p, attack->success, distortion});
      if (attack->success && r.slope_score) {
        slope_base += 1;
        if (*r.slope_score > distortion) slope_over += 1;
      }
    }
    if (scores.empty()) continue;
    CompareReport::Validity v;
    v.p = p;
    v.attack = p == NormOrder::Linf ? "ifgsm" : "margin_descent_l2";
    v.report = verify_bounds(scores, outcomes);
    if (slope_base > 0)
      v.slope_exceeds_fraction = static_cast<double>(slope_over) / slope_base;
    report.validity.push_back(std::move(v));
  }
  return report;
}

void write_compare_report(const CompareReport& report, const RunManifest& manifest,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_results_csv(report.run, dir / "results.csv");
  write_results_json(report.run, manifest, dir / "results.json");

  {
    std::ofstream out(dir / "comparison.csv", std::ios::binary);
    if (!out) throw InputError("cannot write comparison.csv");
    out << "target_kind,p,cells,mean_clever,mean_slope_score,mean_attack_distortion,"
           "attacks_succeeded\n";
    for (const CompareReport::MeanRow& row : report.means)
      out << row.target_kind << ',' << to_string(row.p) << ',' << row.cells << ','
          << fmt(row.mean_clever) << ',' << fmt(row.mean_slope_score) << ','
          << fmt(row.mean_attack_distortion) << ',' << row.attacks_succeeded << '\n';
  }
  {
    json validity = json::array();
    for (const CompareReport::Validity& v : report.validity) {
      json entry{{"p", to_string(v.p)},
                 {"attack", v.attack},
                 {"total_pairs", v.report.total},
                 {"successful_attacks", v.report.successful},
                 {"violations", v.report.violations},
                 {"no_successful_attacks", v.report.no_successful_attacks}};
      entry["fraction_valid"] =
          v.report.no_successful_attacks ? json(nullptr) : json(v.report.fraction_valid);
      entry["slope_exceeds_fraction"] =
          v.slope_exceeds_fraction ? json(*v.slope_exceeds_fraction) : json(nullptr);
      validity.push_back(entry);
    }
    std::ofstream out(dir / "validity.json", std::ios::binary);
    if (!out) throw InputError("cannot write validity.json");
    out << json{{"manifest_hash", report.run.hash}, {"validity", validity}}.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "compare_plot.tsv", std::ios::binary);
    if (!out) throw InputError("cannot write compare_plot.tsv");
    out << "x\tseries\ty\n";
    for (const CellResult& cell : report.run.cells) {
      const ResultRow& r = cell.row;
      const std::string suffix = "_" + r.target_kind + "_p" + to_string(r.p);
      if (r.clever_value)
        out << r.instance_id << "\tclever" << suffix << '\t' << fmt(*r.clever_value) << '\n';
      const std::optional<AttackOutcome>& attack =
          r.p == NormOrder::Linf ? cell.ifgsm_outcome : cell.l2_outcome;
      if (attack && attack->success) {
        const double distortion =
            r.p == NormOrder::Linf ? attack->distortion_linf : attack->distortion_l2;
        out << r.instance_id << "\tattack" << suffix << '\t' << fmt(distortion) << '\n';
      }
    }
  }
}

SweepReport run_sweep(const RunManifest& manifest, const std::vector<int>& nb_list) {
  if (nb_list.empty()) throw InputError("nb_list must not be empty");
  SweepReport report;
  report.nb_list = nb_list;

  RunManifest base = manifest;
  base.run_slope = false;
  base.run_oracle = false;
  base.run_attacks = false;

  bool first = true;
  for (std::size_t k = 0; k < nb_list.size(); ++k) {
    RunManifest m = base;
    m.sampling.n_batches = nb_list[k];
    const auto start = std::chrono::steady_clock::now();
    const ScoreRun run = run_score(m);
    const auto stop = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(stop - start).count();
    report.seconds.push_back(seconds);
    const double samples = static_cast<double>(run.cells.size()) *
                           static_cast<double>(nb_list[k]) * m.sampling.n_per_batch;
    report.seconds_per_sample.push_back(samples > 0 ? seconds / samples : 0.0);

    if (first) {
      for (const CellResult& cell : run.cells) {
        SweepReport::Row row;
        row.instance_id = cell.row.instance_id;
        row.target_kind = cell.row.target_kind;
        row.target_j = cell.row.target_j;
        row.p = cell.row.p;
        row.scores.resize(nb_list.size());
        report.rows.push_back(std::move(row));
      }
      first = false;
    }
    if (run.cells.size() != report.rows.size())
      throw NumericError("sweep produced inconsistent cell counts across N_b");
    for (std::size_t i = 0; i < run.cells.size(); ++i)
      report.rows[i].scores[k] = run.cells[i].row.clever_value;
  }
  return report;
}

void write_sweep_report(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "sweep.csv", std::ios::binary);
    if (!out) throw InputError("cannot write sweep.csv");
    out << "instance_id,target_kind,target_j,p";
    for (int nb : report.nb_list) out << ",clever_nb" << nb;
    out << '\n';
    for (const SweepReport::Row& row : report.rows) {
      out << row.instance_id << ',' << row.target_kind << ',' << row.target_j << ','
          << to_string(row.p);
      for (const auto& v : row.scores) out << ',' << fmt(v);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "sweep_timing.csv", std::ios::binary);
    if (!out) throw InputError("cannot write sweep_timing.csv");
    out << "n_batches,seconds,seconds_per_sample\n";
    for (std::size_t k = 0; k < report.nb_list.size(); ++k)
      out << report.nb_list[k] << ',' << fmt(report.seconds[k]) << ','
          << fmt(report.seconds_per_sample[k]) << '\n';
  }
}

FitDiagnostics run_fit_diagnostics(const RunManifest& manifest) {
  RunManifest m = manifest;
  m.run_slope = false;
  m.run_oracle = false;
  m.run_attacks = false;

  FitDiagnostics diag;
  diag.run = run_score(m);
  for (const CellResult& cell : diag.run.cells) {
    if (!cell.score) continue;
    if (cell.score->tie || cell.score->fit.degenerate) {
      diag.degenerate += 1;
      continue;
    }
    diag.cells += 1;
    if (cell.score->fit.ks_pvalue > 0.05) diag.pass += 1;
  }
  diag.pass_percentage = diag.cells ? 100.0 * static_cast<double>(diag.pass) / diag.cells : 0.0;
  return diag;
}

void write_fit_diagnostics(const FitDiagnostics& diag, const RunManifest& manifest,
                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    json doc{{"manifest_hash", diag.run.hash},
             {"cells", diag.cells},
             {"pass", diag.pass},
             {"degenerate", diag.degenerate},
             {"pass_percentage", diag.pass_percentage}};
    std::ofstream out(dir / "fit_diagnostics.json", std::ios::binary);
    if (!out) throw InputError("cannot write fit_diagnostics.json");
    out << doc.dump(2) << '\n';
  }
  {
    // histogram of each cell's batch maxima with the fitted CDF at bin edges
    std::ofstream out(dir / "fit_histograms.tsv", std::ios::binary);
    if (!out) throw InputError("cannot write fit_histograms.tsv");
    out << "instance_id\ttarget_kind\tp\tbin_lo\tbin_hi\tcount\tfitted_cdf_hi\n";
    constexpr int kBins = 24;
    for (const CellResult& cell : diag.run.cells) {
      if (!cell.score || cell.score->tie || cell.score->batch_maxima.empty()) continue;
      const std::vector<double>& vals = cell.score->batch_maxima;
      const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
      const double lo = *mn_it, hi = *mx_it;
      const double width = hi > lo ? (hi - lo) / kBins : 1.0;
      std::vector<long> counts(kBins, 0);
      for (double v : vals) {
        int bin = static_cast<int>((v - lo) / width);
        bin = std::min(std::max(bin, 0), kBins - 1);
        counts[bin] += 1;
      }
      for (int b = 0; b < kBins; ++b) {
        const double bin_lo = lo + b * width, bin_hi = lo + (b + 1) * width;
        out << cell.row.instance_id << '\t' << cell.row.target_kind << '\t'
            << to_string(cell.row.p) << '\t' << fmt(bin_lo) << '\t' << fmt(bin_hi) << '\t'
            << counts[b] << '\t' << fmt(reverse_weibull_cdf(cell.score->fit.params, bin_hi))
            << '\n';
      }
    }
  }
}

std::vector<FixtureRecipe> standard_fixture_recipes() {
  std::vector<FixtureRecipe> recipes;

  auto relu = [](int width) { return LayerSpec{width, {ActivationKind::ReLU, 1.0}}; };
  auto softplus = [](int width) { return LayerSpec{width, {ActivationKind::Softplus, 1.0}}; };
  auto brelu = [](int width, double cap) {
    return LayerSpec{width, {ActivationKind::BoundedReLU, cap}};
  };

  {
    FixtureRecipe r;
    r.name = "blobs2_linear";
    r.dataset = {"blobs", 2, 2, 100, 8.0, 0.15, 11};
    r.arch = {};
    r.hyper = {0.1, 150, 16, 101};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "blobs2_relu16";
    r.dataset = {"blobs", 2, 3, 100, 8.0, 0.15, 12};
    r.arch = {relu(16)};
    r.hyper = {0.1, 200, 16, 102};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "blobs3_relu8";
    r.dataset = {"blobs", 3, 3, 100, 8.0, 0.15, 13};
    r.arch = {relu(8)};
    r.hyper = {0.1, 200, 16, 103};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "blobs5_softplus16";
    r.dataset = {"blobs", 5, 4, 100, 10.0, 0.15, 14};
    r.arch = {softplus(16)};
    r.hyper = {0.1, 200, 16, 104};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "digits64_relu64";
    r.dataset = {"digits", 64, 10, 20, 8.0, 0.15, 15};
    r.arch = {relu(64)};
    r.hyper = {0.2, 300, 32, 105};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "digits64_deep3";
    r.dataset = {"digits", 64, 10, 20, 8.0, 0.15, 15};
    r.arch = {relu(64), relu(64), relu(64)};
    r.hyper = {0.1, 300, 32, 106};
    r.expected_train_acc_floor = 0.99;
    recipes.push_back(r);
  }
  {
    FixtureRecipe r;
    r.name = "digits64_brelu64";
    r.dataset = {"digits", 64, 10, 20, 8.0, 0.15, 16};
    r.arch = {brelu(64, 1.0)};
    r.hyper = {0.2, 300, 32, 107};
    r.expected_train_acc_floor = 0.97;
    recipes.push_back(r);
  }
  return recipes;
}

}  // namespace clever
