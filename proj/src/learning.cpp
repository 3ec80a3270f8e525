#include "perturbmax/learning.hpp"

#include <cmath>

#include "perturbmax/errors.hpp"
#include "perturbmax/gumbel.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/parallel.hpp"
#include "perturbmax/rng.hpp"
#include "perturbmax/solvers.hpp"

namespace perturbmax {

namespace {

double spin(int v) { return v != 0 ? 1.0 : -1.0; }

BinaryImage draw_silhouette(CounterRng& rng, int h, int w) {
  BinaryImage img(static_cast<std::size_t>(h * w), 0);
  const int shapes = 1 + static_cast<int>(rng.uniform() * 3.0);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.6;
    const double cy = rng.uniform(0.25, 0.75) * h;
    const double cx = rng.uniform(0.25, 0.75) * w;
    const double ry = rng.uniform(0.12, 0.32) * h;
    const double rx = rng.uniform(0.12, 0.32) * w;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dy = (r + 0.5 - cy) / ry;
        const double dx = (c + 0.5 - cx) / rx;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img[static_cast<std::size_t>(r * w + c)] = 1;
      }
  }
  return img;
}

DenoisingExample make_example(std::uint64_t seed, std::uint64_t index, int h, int w, double noise) {
  CounterRng rng(stream_key({tag(StreamTag::dataset), seed, index}));
  DenoisingExample ex;
  ex.clean = draw_silhouette(rng, h, w);
  ex.observed = ex.clean;
  for (int& v : ex.observed)
    if (rng.uniform() < noise) v = 1 - v;
  return ex;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_image(const LearnedParams& params, const BinaryImage& img) {
  require(img.size() == params.unary_count(), "image size does not match the parameters");
  for (int v : img) require(v == 0 || v == 1, "image pixels must be 0 or 1");
}

}  // namespace

DenoisingDataset make_silhouette_dataset(const DatasetSpec& spec) {
  require(spec.height >= 1 && spec.width >= 1, "image dimensions must be positive");
  require(spec.noise >= 0.0 && spec.noise <= 1.0, "noise rate must lie in [0, 1]");
  DenoisingDataset d;
  d.height = spec.height;
  d.width = spec.width;
  d.noise = spec.noise;
  d.seed = spec.seed;
  for (std::size_t k = 0; k < spec.train; ++k) d.train.push_back(make_example(spec.seed, k, spec.height, spec.width, spec.noise));
  for (std::size_t k = 0; k < spec.test; ++k)
    d.test.push_back(make_example(spec.seed, spec.train + k, spec.height, spec.width, spec.noise));
  return d;
}

std::vector<std::pair<int, int>> image_edges(int height, int width) {
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const int i = r * width + c;
      if (c + 1 < width) edges.emplace_back(i, i + 1);
      if (r + 1 < height) edges.emplace_back(i, i + width);
    }
  return edges;
}

std::vector<double> features(const BinaryImage& x, const BinaryImage& y, int height, int width) {
  const auto n = static_cast<std::size_t>(height * width);
  require(x.size() == n && y.size() == n, "image sizes do not match the grid");
  const auto edges = image_edges(height, width);
  std::vector<double> phi(n + edges.size());
  for (std::size_t i = 0; i < n; ++i) phi[i] = spin(x[i]) * spin(y[i]);
  for (std::size_t e = 0; e < edges.size(); ++e)
    phi[n + e] = spin(y[static_cast<std::size_t>(edges[e].first)]) * spin(y[static_cast<std::size_t>(edges[e].second)]);
  return phi;
}

LearnedParams initial_params(int height, int width, double unary, double pair) {
  LearnedParams p;
  p.height = height;
  p.width = width;
  const auto n = static_cast<std::size_t>(height * width);
  p.theta.assign(n + image_edges(height, width).size(), pair);
  std::fill(p.theta.begin(), p.theta.begin() + static_cast<std::ptrdiff_t>(n), unary);
  return p;
}

PairwiseModel conditional_model(const LearnedParams& params, const BinaryImage& x) {
  require_image(params, x);
  const auto n = params.unary_count();
  const auto edges = image_edges(params.height, params.width);
  require(params.theta.size() == n + edges.size(), "parameter vector has the wrong length");
  PairwiseModel model(std::vector<int>(n, 2));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = params.theta[i] * spin(x[i]);
    const double table[2] = {-u, u};
    model.set_unary(static_cast<int>(i), table);
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double t = params.theta[n + e];
    const double table[4] = {t, -t, -t, t};
    model.add_edge(edges[e].first, edges[e].second, table);
  }
  model.set_grid({params.height, params.width});
  return model;
}

LearnedParams project_attractive(LearnedParams params) {
  for (std::size_t k = params.unary_count(); k < params.theta.size(); ++k)
    if (params.theta[k] < 0.0) params.theta[k] = 0.0;
  return params;
}

ObjectiveGrad perturbed_objective_grad(const LearnedParams& params, const std::vector<DenoisingExample>& data,
                                       std::size_t M, std::uint64_t seed, int jobs) {
  require(!data.empty(), "training set is empty");
  const std::size_t dim = params.theta.size();
  const auto n = static_cast<int>(params.unary_count());
  const auto singles = singleton_subsets(n);

  auto per_example = parallel_map(data.size(), jobs, [&](std::size_t e) {
    const auto& ex = data[e];
    const auto model = conditional_model(params, ex.observed);
    ObjectiveGrad part;
    part.gradient.assign(dim, 0.0);
    const auto truth = features(ex.observed, ex.clean, params.height, params.width);
    double emax = 0.0;
    if (M == 0) {
      const auto r = solve(model);
      emax = r.value;
      part.gradient = features(ex.observed, r.argmax, params.height, params.width);
    } else {
      const std::uint64_t stream = stream_key({tag(StreamTag::learning), seed, e});
      for (std::size_t k = 0; k < M; ++k) {
        const auto pert = sample_perturbation(model, singles, stream, k);
        const auto r = solve(model, &pert);
        emax += r.value;
        const auto phi = features(ex.observed, r.argmax, params.height, params.width);
        for (std::size_t d = 0; d < dim; ++d) part.gradient[d] += phi[d];
      }
      emax /= static_cast<double>(M);
      for (double& g : part.gradient) g /= static_cast<double>(M);
    }
    for (std::size_t d = 0; d < dim; ++d) part.gradient[d] -= truth[d];
    part.objective = emax - dot(params.theta, truth);
    return part;
  });

  ObjectiveGrad out;
  out.gradient.assign(dim, 0.0);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (const auto& part : per_example) {
    out.objective += part.objective * scale;
    for (std::size_t d = 0; d < dim; ++d) out.gradient[d] += part.gradient[d] * scale;
  }
  out.objective += params.regularizer * dot(params.theta, params.theta);
  for (std::size_t d = 0; d < dim; ++d) out.gradient[d] += 2.0 * params.regularizer * params.theta[d];
  return out;
}

double crf_objective(const LearnedParams& params, const std::vector<DenoisingExample>& data) {
  require(!data.empty(), "data set is empty");
  double total = 0.0;
  for (const auto& ex : data) {
    const auto model = conditional_model(params, ex.observed);
    total += exact_summary(model).log_partition -
             dot(params.theta, features(ex.observed, ex.clean, params.height, params.width));
  }
  return total / static_cast<double>(data.size()) + params.regularizer * dot(params.theta, params.theta);
}

LearnedParams train(const DenoisingDataset& dataset, const TrainOptions& options) {
  require(options.iterations >= 0, "iteration count must be nonnegative");
  require(options.step > 0.0, "step size must be positive");
  require(options.max_halvings >= 0, "halving count must be nonnegative");
  LearnedParams params =
      project_attractive(initial_params(dataset.height, dataset.width, options.init_unary, options.init_pair));
  params.regularizer = options.regularizer;
  double step = options.step;
  for (int t = 0; t < options.iterations; ++t) {
    const std::uint64_t seed = stream_key({options.seed, static_cast<std::uint64_t>(t)});
    const auto current = perturbed_objective_grad(params, dataset.train, options.M, seed, options.jobs);
    TraceRow row;
    row.iteration = t;
    row.objective = current.objective;
    for (int h = 0; h <= options.max_halvings; ++h) {
      LearnedParams candidate = params;
      for (std::size_t d = 0; d < candidate.theta.size(); ++d) candidate.theta[d] -= step * current.gradient[d];
      candidate = project_attractive(std::move(candidate));
      const double value = perturbed_objective_grad(candidate, dataset.train, options.M, seed, options.jobs).objective;
      if (value < current.objective) {
        candidate.trace = std::move(params.trace);
        params = std::move(candidate);
        row.accepted = true;
        row.objective = value;
        break;
      }
      if (h < options.max_halvings) {
        step *= 0.5;
        ++row.halvings;
      }
    }
    row.step = step;
    params.trace.push_back(row);
    if (!row.accepted) break;
  }
  return params;
}

BinaryImage predict(const LearnedParams& params, const BinaryImage& x) {
  return solve(conditional_model(params, x)).argmax;
}

double pixel_error(const BinaryImage& prediction, const BinaryImage& truth) {
  require(prediction.size() == truth.size() && !truth.empty(), "images must be non-empty and the same size");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += prediction[i] != truth[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double mean_pixel_error(const LearnedParams& params, const std::vector<DenoisingExample>& data) {
  require(!data.empty(), "data set is empty");
  double total = 0.0;
  for (const auto& ex : data) total += pixel_error(predict(params, ex.observed), ex.clean);
  return total / static_cast<double>(data.size());
}

}  // namespace perturbmax
