#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clever/attacks.hpp"
#include "clever/fixtures.hpp"
#include "clever/oracle.hpp"
#include "clever/score.hpp"

namespace clever {

// Everything one experiment run needs; encodes the scoring grid
// (instances x targets x norms) plus sampling and attack settings.
struct RunManifest {
  std::string model_path;
  std::string dataset_path;
  std::string output_dir = "out";
  int instances = 10;                  // first-n correctly classified rows
  std::vector<int> instance_ids;       // explicit row ids override `instances`
  std::vector<TargetSpec::Kind> targets = {TargetSpec::Kind::Top2, TargetSpec::Kind::Random,
                                           TargetSpec::Kind::LeastLikely};
  std::vector<NormOrder> p_list = {NormOrder::L2, NormOrder::Linf};
  SampleConfig sampling;               // N_b = 500, N_s = 1024 defaults
  double ball_radius = 5.0;
  AttackConfig attack;
  int workers = 1;
  std::uint64_t seed = 0;
  bool run_slope = false;
  bool run_oracle = false;
  bool run_attacks = false;

  void validate() const;
};

RunManifest manifest_from_json_text(const std::string& text, const std::string& origin);
RunManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json_text(const RunManifest& manifest);
std::string manifest_hash(const RunManifest& manifest);

struct ResultRow {
  int instance_id = 0;
  int true_label = 0;
  int predicted_c = 0;
  std::string target_kind;
  int target_j = -1;
  NormOrder p = NormOrder::L2;
  std::optional<double> clever_value;
  std::optional<double> a_hat;
  std::optional<double> ks_D;
  std::optional<double> ks_pvalue;
  std::optional<double> slope_value;        // fitted SLOPE Lipschitz estimate
  std::optional<double> slope_score;        // min(g / slope_value, R)
  std::optional<double> oracle_value;       // exact local Lipschitz constant
  std::optional<double> ifgsm_distortion;   // in this row's p-norm
  std::optional<double> l2_attack_distortion;
  bool capped = false;
  std::string warnings;                     // semicolon-joined tokens
};

struct CellResult {
  ResultRow row;
  std::optional<CleverScore> score;
  std::optional<AttackOutcome> ifgsm_outcome;
  std::optional<AttackOutcome> l2_outcome;
  double margin = 0.0;
};

struct SkipRecord {
  int instance_id = 0;
  int true_label = 0;
  int predicted_c = 0;
  std::string reason;
};

struct ScoreRun {
  std::vector<CellResult> cells;  // ordered by (instance, target, p)
  std::vector<SkipRecord> skipped;
  std::string hash;
};

// CSV column order, fixed:
//   instance_id,true_label,predicted_c,target_kind,target_j,p,clever_value,
//   a_hat,ks_D,ks_pvalue,slope_value,oracle_value,ifgsm_distortion,
//   l2_attack_distortion,capped,warnings
ScoreRun run_score(const RunManifest& manifest);
void write_results_csv(const ScoreRun& run, const std::filesystem::path& path);
void write_results_json(const ScoreRun& run, const RunManifest& manifest,
                        const std::filesystem::path& path);

struct CompareReport {
  ScoreRun run;
  // per (target kind, p): mean clever, mean slope score, mean successful
  // attack distortion, bound validity
  struct MeanRow {
    std::string target_kind;
    NormOrder p = NormOrder::L2;
    double mean_clever = 0.0;
    std::optional<double> mean_slope_score;
    std::optional<double> mean_attack_distortion;  // successful attacks only
    long attacks_succeeded = 0;
    long cells = 0;
  };
  std::vector<MeanRow> means;
  struct Validity {
    NormOrder p = NormOrder::L2;
    std::string attack;
    BoundReport report;
    // SLOPE failure marker: share of cells whose slope-derived score
    // exceeds the successful attack distortion
    std::optional<double> slope_exceeds_fraction;
  };
  std::vector<Validity> validity;
};

CompareReport run_compare(const RunManifest& manifest);
void write_compare_report(const CompareReport& report, const RunManifest& manifest,
                          const std::filesystem::path& dir);

struct SweepReport {
  std::vector<int> nb_list;
  struct Row {
    int instance_id = 0;
    std::string target_kind;
    int target_j = -1;
    NormOrder p = NormOrder::L2;
    std::vector<std::optional<double>> scores;  // aligned with nb_list
  };
  std::vector<Row> rows;
  std::vector<double> seconds;             // wall clock per nb
  std::vector<double> seconds_per_sample;  // seconds / (nb * ns)
};

SweepReport run_sweep(const RunManifest& manifest, const std::vector<int>& nb_list);
void write_sweep_report(const SweepReport& report, const std::filesystem::path& dir);

struct FitDiagnostics {
  long cells = 0;             // non-degenerate fitted cells
  long pass = 0;              // cells with ks_pvalue > 0.05
  long degenerate = 0;        // excluded point-mass fits
  double pass_percentage = 0.0;
  ScoreRun run;
};

FitDiagnostics run_fit_diagnostics(const RunManifest& manifest);
void write_fit_diagnostics(const FitDiagnostics& diag, const RunManifest& manifest,
                           const std::filesystem::path& dir);

// The bundled fixture suite: blob classifiers for the oracle-scale checks
// and 8x8 digit-style classifiers for the bound-ordering studies.
std::vector<FixtureRecipe> standard_fixture_recipes();

// Shared worker pool; fn(i) runs for i in [0, n). Rethrows the first error.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace clever
