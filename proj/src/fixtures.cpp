#include "clever/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "clever/dataset_io.hpp"
#include "clever/model_io.hpp"
#include "clever/rng.hpp"

#include <json.hpp>

namespace clever {

void Dataset::validate() const {
  if (features.rows() == 0) throw InputError("dataset is empty");
  if (features.rows() != static_cast<Eigen::Index>(labels.size()))
    throw InputError("feature and label counts differ");
  if (features.cols() != d || K < 2) throw InputError("dataset shape metadata is inconsistent");
  if (!features.allFinite()) throw InputError("dataset has non-finite features");
  if (static_cast<Eigen::Index>(labels.size()) < K)
    throw InputError("dataset needs at least one sample per class");
  for (int y : labels)
    if (y < 0 || y >= K) throw InputError("dataset label out of range");
}

namespace {

// Centers placed by rejection from a Gaussian whose scale grows until all
// pairwise distances clear the separation. Deterministic given the seed.
std::vector<Eigen::VectorXd> place_centers(int d, int K, double separation,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  double scale = separation;
  for (int attempt_round = 0; attempt_round < 64; ++attempt_round) {
    std::vector<Eigen::VectorXd> centers;
    bool ok = true;
    for (int k = 0; k < K && ok; ++k) {
      bool placed = false;
      for (int tries = 0; tries < 200; ++tries) {
        Eigen::VectorXd candidate(d);
        for (int i = 0; i < d; ++i) candidate[i] = scale * gauss(rng);
        bool clear = true;
        for (const Eigen::VectorXd& other : centers)
          if ((candidate - other).norm() < separation) {
            clear = false;
            break;
          }
        if (clear) {
          centers.push_back(std::move(candidate));
          placed = true;
          break;
        }
      }
      if (!placed) ok = false;
    }
    if (ok) return centers;
    scale *= 1.5;
  }
  throw NumericError("failed to place blob centers");
}

}  // namespace

Dataset make_blobs(int d, int K, int n_per_class, double separation, std::uint64_t seed) {
  if (d < 1 || K < 2 || n_per_class < 1) throw InputError("bad blob dataset shape");
  auto rng = make_rng(derive_seed(seed, 0xB10B));
  const std::vector<Eigen::VectorXd> centers = place_centers(d, K, separation, rng);

  Dataset data;
  data.d = d;
  data.K = K;
  std::ostringstream name;
  name << "blobs_d" << d << "_k" << K;
  data.name = name.str();
  data.features.resize(static_cast<Eigen::Index>(K) * n_per_class, d);
  data.labels.resize(static_cast<std::size_t>(K) * n_per_class);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Index row = 0;
  for (int k = 0; k < K; ++k) {
    for (int s = 0; s < n_per_class; ++s, ++row) {
      for (int i = 0; i < d; ++i) data.features(row, i) = centers[k][i] + gauss(rng);
      data.labels[row] = k;
    }
  }
  data.validate();
  return data;
}

Dataset make_digits(int K, int n_per_class, double noise, std::uint64_t seed) {
  if (K < 2 || n_per_class < 1 || !(noise >= 0.0)) throw InputError("bad digits dataset shape");
  constexpr int kSide = 8;
  constexpr int kDim = kSide * kSide;
  auto rng = make_rng(derive_seed(seed, 0xD161));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // per-class prototypes: random pixels smoothed over the 8x8 grid so the
  // classes have image-like spatial structure
  std::vector<Eigen::VectorXd> prototypes;
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd raw(kDim);
    for (int i = 0; i < kDim; ++i) raw[i] = unit(rng);
    Eigen::VectorXd smooth(kDim);
    for (int r = 0; r < kSide; ++r) {
      for (int c = 0; c < kSide; ++c) {
        double sum = 0.0;
        int count = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= kSide || cc < 0 || cc >= kSide) continue;
            sum += raw[rr * kSide + cc];
            ++count;
          }
        }
        smooth[r * kSide + c] = sum / count;
      }
    }
    // stretch contrast so prototypes are well separated
    const double lo = smooth.minCoeff(), hi = smooth.maxCoeff();
    for (int i = 0; i < kDim; ++i)
      smooth[i] = hi > lo ? (smooth[i] - lo) / (hi - lo) : 0.5;
    prototypes.push_back(std::move(smooth));
  }

  Dataset data;
  data.d = kDim;
  data.K = K;
  std::ostringstream name;
  name << "digits_k" << K;
  data.name = name.str();
  data.features.resize(static_cast<Eigen::Index>(K) * n_per_class, kDim);
  data.labels.resize(static_cast<std::size_t>(K) * n_per_class);

  Eigen::Index row = 0;
  for (int k = 0; k < K; ++k) {
    for (int s = 0; s < n_per_class; ++s, ++row) {
      for (int i = 0; i < kDim; ++i) {
        const double v = prototypes[k][i] + noise * gauss(rng);
        data.features(row, i) = std::min(std::max(v, 0.0), 1.0);
      }
      data.labels[row] = k;
    }
  }
  data.validate();
  return data;
}

Dataset make_dataset(const DatasetSpec& spec) {
  if (spec.kind == "blobs")
    return make_blobs(spec.d, spec.K, spec.n_per_class, spec.separation, spec.seed);
  if (spec.kind == "digits") return make_digits(spec.K, spec.n_per_class, spec.noise, spec.seed);
  throw InputError("unknown dataset kind '" + spec.kind + "'");
}

namespace {

nlohmann::json recipe_to_json(const FixtureRecipe& recipe) {
  nlohmann::json arch = nlohmann::json::array();
  for (const LayerSpec& layer : recipe.arch) {
    nlohmann::json entry{{"width", layer.width},
                         {"activation", to_string(layer.activation.kind)}};
    if (layer.activation.kind == ActivationKind::BoundedReLU)
      entry["cap"] = layer.activation.cap;
    arch.push_back(entry);
  }
  return nlohmann::json{
      {"name", recipe.name},
      {"dataset",
       {{"kind", recipe.dataset.kind},
        {"d", recipe.dataset.d},
        {"K", recipe.dataset.K},
        {"n_per_class", recipe.dataset.n_per_class},
        {"separation", recipe.dataset.separation},
        {"noise", recipe.dataset.noise},
        {"seed", recipe.dataset.seed}}},
      {"arch", arch},
      {"hyper",
       {{"learning_rate", recipe.hyper.learning_rate},
        {"epochs", recipe.hyper.epochs},
        {"batch_size", recipe.hyper.batch_size},
        {"seed", recipe.hyper.seed}}},
      {"expected_train_acc_floor", recipe.expected_train_acc_floor}};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string recipe_hash(const FixtureRecipe& recipe) {
  std::ostringstream hex;
  hex << std::hex << fnv1a(recipe_to_json(recipe).dump());
  return hex.str();
}

FixtureResult build_fixture(const FixtureRecipe& recipe) {
  FixtureResult result;
  result.data = make_dataset(recipe.dataset);
  result.net = train_sgd(result.data.features, result.data.labels, result.data.K, recipe.arch,
                         recipe.hyper);
  result.train_accuracy = training_accuracy(result.net, result.data.features, result.data.labels);
  result.recipe_hash = recipe_hash(recipe);
  if (result.train_accuracy < recipe.expected_train_acc_floor) {
    std::ostringstream msg;
    msg << "fixture '" << recipe.name << "' missed its accuracy floor: "
        << result.train_accuracy << " < " << recipe.expected_train_acc_floor;
    throw NumericError(msg.str());
  }
  return result;
}

void write_fixture(const FixtureResult& fixture, const FixtureRecipe& recipe,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_network_json(fixture.net, dir / (recipe.name + ".model.json"));
  save_dataset_csv(fixture.data, dir / (recipe.name + ".data.csv"));

  nlohmann::json provenance{{"recipe", recipe_to_json(recipe)},
                            {"recipe_hash", fixture.recipe_hash},
                            {"train_accuracy", fixture.train_accuracy},
                            {"seed", recipe.hyper.seed}};
  std::ofstream out(dir / (recipe.name + ".provenance.json"));
  if (!out) throw InputError("cannot write provenance file");
  out << provenance.dump(2) << "\n";
}

double accuracy(const Network& net, const Dataset& data) {
  return training_accuracy(net, data.features, data.labels);
}

}  // namespace clever
