#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clever/dataset_io.hpp"
#include "clever/model_io.hpp"
#include "clever/rng.hpp"
#include "clever/runner.hpp"

namespace fs = std::filesystem;
using namespace clever;

namespace {

struct CommonFlags {
  std::string manifest_path;
  std::string model;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::vector<std::string> p_list;
  std::optional<double> radius;
  std::optional<int> nb;
  std::optional<int> ns;
  std::string targets;
  std::optional<int> instances;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--manifest", flags.manifest_path, "manifest JSON; flags override its fields");
  cmd->add_option("--model", flags.model, "model JSON file");
  cmd->add_option("--data", flags.data, "dataset CSV file");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--workers", flags.workers, "worker thread count");
  cmd->add_option("--p", flags.p_list, "norm orders, any of 1 2 inf")->delimiter(',');
  cmd->add_option("--radius", flags.radius, "sampling ball radius R");
  cmd->add_option("--nb", flags.nb, "number of batches N_b");
  cmd->add_option("--ns", flags.ns, "samples per batch N_s");
  cmd->add_option("--targets", flags.targets,
                  "comma list of top2,random,least or 'all' for all three");
  cmd->add_option("--instances", flags.instances, "first-n correctly classified instances");
}

RunManifest build_manifest(const CommonFlags& flags) {
  RunManifest m;
  if (!flags.manifest_path.empty()) m = load_manifest(flags.manifest_path);
  if (!flags.model.empty()) m.model_path = flags.model;
  if (!flags.data.empty()) m.dataset_path = flags.data;
  if (!flags.out.empty()) m.output_dir = flags.out;
  if (flags.seed) m.seed = *flags.seed;
  if (flags.workers) m.workers = *flags.workers;
  if (!flags.p_list.empty()) {
    m.p_list.clear();
    for (const std::string& p : flags.p_list) m.p_list.push_back(norm_from_string(p));
  }
  if (flags.radius) m.ball_radius = *flags.radius;
  if (flags.nb) m.sampling.n_batches = *flags.nb;
  if (flags.ns) m.sampling.n_per_batch = *flags.ns;
  if (flags.instances) m.instances = *flags.instances;
  if (!flags.targets.empty()) {
    m.targets.clear();
    if (flags.targets == "all") {
      m.targets = {TargetSpec::Kind::Top2, TargetSpec::Kind::Random,
                   TargetSpec::Kind::LeastLikely};
    } else {
      std::stringstream ss(flags.targets);
      std::string item;
      while (std::getline(ss, item, ',')) m.targets.push_back(target_kind_from_string(item));
    }
  }
  return m;
}

int cmd_score(const CommonFlags& flags) {
  const RunManifest manifest = build_manifest(flags);
  const ScoreRun run = run_score(manifest);
  fs::create_directories(manifest.output_dir);
  write_results_csv(run, fs::path(manifest.output_dir) / "results.csv");
  write_results_json(run, manifest, fs::path(manifest.output_dir) / "results.json");
  for (const SkipRecord& s : run.skipped)
    std::cerr << "skipped instance " << s.instance_id << ": " << s.reason << " (label "
              << s.true_label << ", predicted " << s.predicted_c << ")\n";
  std::cout << run.cells.size() << " rows -> " << manifest.output_dir << "/results.csv\n";
  return 0;
}

int cmd_compare(const CommonFlags& flags, bool no_oracle) {
  RunManifest manifest = build_manifest(flags);
  if (!no_oracle) {
    // the exact oracle only exists for one-hidden-layer ReLU networks
    const Network net = load_network_json(manifest.model_path);
    manifest.run_oracle = net.layers.size() == 2 &&
                          net.layers[0].activation.kind == ActivationKind::ReLU &&
                          net.layers[0].out_dim() <= 20;
  }
  const CompareReport report = run_compare(manifest);
  write_compare_report(report, manifest, manifest.output_dir);
  for (const CompareReport::Validity& v : report.validity) {
    std::cout << "p=" << to_string(v.p) << " vs " << v.attack << ": ";
    if (v.report.no_successful_attacks)
      std::cout << "no successful attacks\n";
    else
      std::cout << 100.0 * v.report.fraction_valid << "% of successful attacks above the score ("
                << v.report.violations << " violations / " << v.report.successful << ")\n";
  }
  std::cout << "reports -> " << manifest.output_dir << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<int>& nb_list) {
  const RunManifest manifest = build_manifest(flags);
  const SweepReport report = run_sweep(manifest, nb_list);
  write_sweep_report(report, manifest.output_dir);
  std::cout << report.rows.size() << " cells x " << nb_list.size() << " settings -> "
            << manifest.output_dir << "/sweep.csv\n";
  return 0;
}

int cmd_fit_diagnostics(const CommonFlags& flags) {
  const RunManifest manifest = build_manifest(flags);
  const FitDiagnostics diag = run_fit_diagnostics(manifest);
  write_fit_diagnostics(diag, manifest, manifest.output_dir);
  std::cout << diag.pass_percentage << "% of " << diag.cells
            << " fitted cells have K-S p-value > 0.05 (" << diag.degenerate
            << " degenerate cells excluded)\n";
  return 0;
}

int cmd_attack(const CommonFlags& flags) {
  RunManifest manifest = build_manifest(flags);
  manifest.run_attacks = true;
  manifest.sampling.n_batches = 2;  // attacks only; skip the sampling cost
  manifest.sampling.n_per_batch = 1;
  RunManifest scored = manifest;
  const ScoreRun run = run_score(scored);
  fs::create_directories(manifest.output_dir);
  std::ofstream out(fs::path(manifest.output_dir) / "attacks.csv", std::ios::binary);
  out << "instance_id,target_kind,target_j,method,success,eps_used,distortion_l2,"
         "distortion_linf\n";
  std::set<std::pair<int, std::string>> seen;
  for (const CellResult& cell : run.cells) {
    if (!seen.insert({cell.row.instance_id, cell.row.target_kind}).second) continue;
    auto emit = [&](const std::optional<AttackOutcome>& o, const char* name) {
      if (!o) return;
      out << cell.row.instance_id << ',' << cell.row.target_kind << ',' << cell.row.target_j
          << ',' << name << ',' << (o->success ? 1 : 0) << ',' << o->eps_used << ','
          << o->distortion_l2 << ',' << o->distortion_linf << '\n';
    };
    emit(cell.ifgsm_outcome, "ifgsm");
    emit(cell.l2_outcome, "margin_descent_l2");
  }
  std::cout << "attack outcomes -> " << manifest.output_dir << "/attacks.csv\n";
  return 0;
}

int cmd_oracle(const CommonFlags& flags, long n_dense) {
  RunManifest manifest = build_manifest(flags);
  const Network net = load_network_json(manifest.model_path);
  const Dataset data = load_dataset_csv(manifest.dataset_path);
  if (net.input_dim != data.d) throw InputError("model and dataset dimensions differ");
  if (!(net.layers.size() == 2 && net.layers[0].activation.kind == ActivationKind::ReLU &&
        net.layers[0].out_dim() <= 20))
    throw InputError("oracle command needs a one-hidden-layer ReLU model with width <= 20");

  fs::create_directories(manifest.output_dir);
  std::ofstream out(fs::path(manifest.output_dir) / "oracle.csv", std::ios::binary);
  out << "instance_id,target_j,p,exact_value,certified,dense_value,slope_value\n";

  int written = 0;
  for (int row = 0; row < static_cast<int>(data.features.rows()) && written < manifest.instances;
       ++row) {
    const Eigen::VectorXd x0 = data.features.row(row).transpose();
    const int c = predict(net, x0);
    if (c != data.labels[row]) continue;
    auto rng = make_rng(derive_seed(manifest.seed, static_cast<std::uint64_t>(row), 0x7A46));
    const int j = select_target(net, x0, TargetSpec{TargetSpec::Kind::Top2, -1}, rng);
    for (NormOrder p : manifest.p_list) {
      const Ball ball{x0, manifest.ball_radius, p};
      const LipschitzEstimate exact = exact_local_cross_lipschitz(net, x0, c, j, ball);
      const LipschitzEstimate dense = dense_sampling_lipschitz(
          net, x0, c, j, ball, n_dense, derive_seed(manifest.seed, row, 0xDE));
      SampleConfig cfg = manifest.sampling;
      cfg.seed = derive_seed(manifest.seed, row, static_cast<std::uint64_t>(p));
      const SlopeEstimate slope = slope_estimate(net, x0, c, j, ball, cfg);
      out << row << ',' << j << ',' << to_string(p) << ',' << exact.value << ','
          << (exact.certified ? 1 : 0) << ',' << dense.value << ',' << slope.estimate.value
          << '\n';
    }
    ++written;
  }
  std::cout << "oracle estimates -> " << manifest.output_dir << "/oracle.csv\n";
  return 0;
}

int cmd_build_fixtures(const std::string& out_dir) {
  const fs::path dir = out_dir.empty() ? fs::path("fixtures") : fs::path(out_dir);
  for (const FixtureRecipe& recipe : standard_fixture_recipes()) {
    const FixtureResult fixture = build_fixture(recipe);
    write_fixture(fixture, recipe, dir);
    std::cout << recipe.name << ": train accuracy " << fixture.train_accuracy << " (hash "
              << fixture.recipe_hash << ")\n";
  }
  std::cout << "fixtures -> " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLEVER robustness scores, Lipschitz oracles and attacks for dense classifiers"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool no_oracle = false;
  std::vector<int> nb_list = {50, 100, 250, 500};
  long n_dense = 100000;
  std::string fixtures_out;

  CLI::App* score = app.add_subcommand("score", "targeted CLEVER scores over a dataset");
  add_common(score, flags);

  CLI::App* compare =
      app.add_subcommand("compare", "scores vs SLOPE, attacks and (when possible) the oracle");
  add_common(compare, flags);
  compare->add_flag("--no-oracle", no_oracle, "skip the exact oracle even when supported");

  CLI::App* sweep = app.add_subcommand("sweep-samples", "score stability across batch counts");
  add_common(sweep, flags);
  sweep->add_option("--nb-list", nb_list, "batch counts to sweep")->delimiter(',');

  CLI::App* diag = app.add_subcommand("fit-diagnostics", "K-S goodness-of-fit summary");
  add_common(diag, flags);

  CLI::App* attack = app.add_subcommand("attack", "I-FGSM and l2 margin-descent outcomes only");
  add_common(attack, flags);

  CLI::App* oracle = app.add_subcommand("oracle", "exact / dense / slope Lipschitz estimates");
  add_common(oracle, flags);
  oracle->add_option("--n-dense", n_dense, "dense sampling count");

  CLI::App* build = app.add_subcommand("build-fixtures", "train and write the fixture suite");
  build->add_option("--out", fixtures_out, "output directory (default ./fixtures)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return cmd_score(flags);
    if (compare->parsed()) return cmd_compare(flags, no_oracle);
    if (sweep->parsed()) return cmd_sweep(flags, nb_list);
    if (diag->parsed()) return cmd_fit_diagnostics(flags);
    if (attack->parsed()) return cmd_attack(flags);
    if (oracle->parsed()) return cmd_oracle(flags, n_dense);
    if (build->parsed()) return cmd_build_fixtures(fixtures_out);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
