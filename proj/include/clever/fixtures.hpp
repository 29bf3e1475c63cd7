#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clever/net.hpp"

namespace clever {

struct Dataset {
  Eigen::MatrixXd features;  // n x d, one sample per row
  std::vector<int> labels;   // values in [0, K)
  std::string name;
  int d = 0;
  int K = 0;

  void validate() const;
};

// K isotropic unit-variance Gaussian clusters with centers at mutual
// distance >= separation. Exactly n_per_class samples per class.
Dataset make_blobs(int d, int K, int n_per_class, double separation, std::uint64_t seed);

// Synthetic 8x8 "digit"-style set: one smoothed prototype image per class in
// [0,1]^64 plus clipped Gaussian pixel noise.
Dataset make_digits(int K, int n_per_class, double noise, std::uint64_t seed);

struct DatasetSpec {
  std::string kind = "blobs";  // blobs | digits
  int d = 2;
  int K = 2;
  int n_per_class = 100;
  double separation = 8.0;  // blobs
  double noise = 0.15;      // digits
  std::uint64_t seed = 1;
};

Dataset make_dataset(const DatasetSpec& spec);

struct FixtureRecipe {
  std::string name;
  DatasetSpec dataset;
  std::vector<LayerSpec> arch;  // hidden layers; output layer is implicit
  TrainConfig hyper;
  double expected_train_acc_floor = 0.95;
};

struct FixtureResult {
  Network net;
  Dataset data;
  double train_accuracy = 0.0;
  std::string recipe_hash;
};

// Trains the recipe's network and fails loudly when the accuracy floor is
// missed. Same recipe, same bytes.
FixtureResult build_fixture(const FixtureRecipe& recipe);

// Writes <name>.model.json, <name>.data.csv and <name>.provenance.json.
void write_fixture(const FixtureResult& fixture, const FixtureRecipe& recipe,
                   const std::filesystem::path& dir);

std::string recipe_hash(const FixtureRecipe& recipe);

double accuracy(const Network& net, const Dataset& data);

}  // namespace clever
