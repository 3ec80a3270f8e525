#pragma once

#include <cstdint>
#include <vector>

#include "perturbmax/model.hpp"

namespace perturbmax {

/// Binary image stored row-major as states {0, 1} (spins -1, +1).
using BinaryImage = std::vector<int>;

struct DenoisingExample {
  BinaryImage observed;
  BinaryImage clean;
};

struct DenoisingDataset {
  int height = 0;
  int width = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<DenoisingExample> train;
  std::vector<DenoisingExample> test;

  int pixels() const { return height * width; }
};

struct DatasetSpec {
  int height = 20;
  int width = 20;
  std::size_t train = 10;
  std::size_t test = 10;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

/// Random silhouettes (unions of ellipses and rectangles) with independent
/// pixel flips at rate `noise`.
DenoisingDataset make_silhouette_dataset(const DatasetSpec& spec);

/// Grid edges of an h x w image: for each pixel, right then down.
std::vector<std::pair<int, int>> image_edges(int height, int width);

/// Feature vector [unaries | pairs]: s(x_i) s(y_i) per pixel followed by
/// s(y_i) s(y_j) per grid edge, with s(v) = 2v - 1.
std::vector<double> features(const BinaryImage& x, const BinaryImage& y, int height, int width);

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  int halvings = 0;
  bool accepted = false;
};

struct LearnedParams {
  int height = 0;
  int width = 0;
  std::vector<double> theta;  // [unaries | pairs], same layout as features()
  double regularizer = 1.0;
  std::vector<TraceRow> trace;

  std::size_t unary_count() const { return static_cast<std::size_t>(height * width); }
};

/// Zero-initialized parameters for an h x w image.
LearnedParams initial_params(int height, int width, double unary = 0.0, double pair = 0.0);

/// Conditional model over labelings y of the observed image x, theta . phi(x, y).
PairwiseModel conditional_model(const LearnedParams& params, const BinaryImage& x);

/// Clips every pairwise weight to be nonnegative.
LearnedParams project_attractive(LearnedParams params);

struct ObjectiveGrad {
  double objective = 0.0;
  std::vector<double> gradient;
};

/// Perturbed surrogate
///   mean_S [ E_gamma max_y {theta.phi(x,y) + sum_i gamma_i(y_i)} - theta.phi(x,y*) ] + lambda |theta|^2
/// and its subgradient mean_S [ mean_k phi(x, y^gamma_k) - phi(x, y*) ] + 2 lambda theta,
/// estimated with M draws per example. Draw k of example e uses the stream
/// (seed, e, k). M = 0 drops the perturbation, which is the structured-SVM
/// hinge without label loss.
ObjectiveGrad perturbed_objective_grad(const LearnedParams& params, const std::vector<DenoisingExample>& data,
                                       std::size_t M, std::uint64_t seed, int jobs = 1);

/// mean_S [log Z(theta; x) - theta.phi(x,y*)] + lambda |theta|^2 with the
/// exact oracle; only for images small enough to enumerate or slice.
double crf_objective(const LearnedParams& params, const std::vector<DenoisingExample>& data);

struct TrainOptions {
  int iterations = 30;
  double step = 1.0;
  int max_halvings = 10;
  std::size_t M = 5;
  double regularizer = 1.0;
  double init_unary = 1.0;
  double init_pair = 0.0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Projected subgradient descent. Each iteration proposes theta - eta g and
/// halves eta until the objective, evaluated on the iteration's perturbation
/// draws for both points, improves. Training stops after `iterations` or
/// when `max_halvings` halvings fail to find an improvement.
LearnedParams train(const DenoisingDataset& dataset, const TrainOptions& options);

/// Unperturbed MAP labeling under the learned parameters.
BinaryImage predict(const LearnedParams& params, const BinaryImage& x);

/// Fraction of pixels where the two labelings differ.
double pixel_error(const BinaryImage& prediction, const BinaryImage& truth);

/// Mean pixel error of predict() over a set of examples.
double mean_pixel_error(const LearnedParams& params, const std::vector<DenoisingExample>& data);

}  // namespace perturbmax
