#ifndef LSPK_EXPERIMENTS_HPP
#define LSPK_EXPERIMENTS_HPP

#include "lspk/metrics.hpp"
#include "lspk/regularizers.hpp"
#include "lspk/solvers.hpp"
#include "lspk/tensor.hpp"
#include "lspk/tlinalg.hpp"
#include "lspk/transforms.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lspk {

struct SyntheticProblem {
  DenseTensor a;
  DenseTensor x;
  DenseTensor b;
};

inline DenseTensor gaussian_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DenseTensor t(shape);
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

/// k distinct indices from [0, n), partial Fisher-Yates.
inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

inline void require_conformable(const Shape& a, const Shape& x) {
  if (a.cols() != x.rows() || a.rest() != x.rest())
    throw DimensionError("A " + a.str() + " and X " + x.str() + " are not conformable");
}

/// Gaussian A and X with exactly round(sparsity * numel) entries of X zeroed; B = A *_L X.
inline SyntheticProblem gen_synthetic_sparse(const Shape& shape_a, const Shape& shape_x, double sparsity,
                                             std::uint64_t seed, const TransformSpec& spec) {
  require_conformable(shape_a, shape_x);
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ParameterError("sparsity must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  DenseTensor a = gaussian_tensor(shape_a, rng);
  DenseTensor x = gaussian_tensor(shape_x, rng);
  const auto zeros = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(x.size())));
  for (auto k : random_subset(x.size(), zeros, rng)) x[k] = 0.0;
  DenseTensor b = t_product(a, x, spec);
  return {std::move(a), std::move(x), std::move(b)};
}

/// Gaussian A; X dense Gaussian, or P *_L Q with inner dimension tubal_rank; B = A *_L X.
inline SyntheticProblem gen_synthetic_lowrank(const Shape& shape_a, const Shape& shape_x,
                                              std::optional<std::size_t> tubal_rank, std::uint64_t seed,
                                              const TransformSpec& spec) {
  require_conformable(shape_a, shape_x);
  std::mt19937_64 rng(seed);
  DenseTensor a = gaussian_tensor(shape_a, rng);
  DenseTensor x;
  if (tubal_rank) {
    const std::size_t r = *tubal_rank;
    if (r < 1 || r > std::min(shape_x.rows(), shape_x.cols()))
      throw ParameterError("tubal rank " + std::to_string(r) + " outside [1, min(n1, n2)] for X " + shape_x.str());
    const DenseTensor p = gaussian_tensor(shape_x.with_matrix(shape_x.rows(), r), rng);
    const DenseTensor q = gaussian_tensor(shape_x.with_matrix(r, shape_x.cols()), rng);
    x = t_product(p, q, spec);
  } else {
    x = gaussian_tensor(shape_x, rng);
  }
  DenseTensor b = t_product(a, x, spec);
  return {std::move(a), std::move(x), std::move(b)};
}

/// n1 x n1 x rest operator whose transform-domain faces all equal
/// diag(1, ..., attenuation, ..., 1), attenuation on stripe_rows (1-based).
/// A *_L X scales the stripe rows of X by attenuation.
inline DenseTensor build_destripe_operator(std::size_t n1, const std::vector<std::size_t>& stripe_rows,
                                           double attenuation, const TransformSpec& spec) {
  if (!(attenuation > 0.0) || !std::isfinite(attenuation)) throw ParameterError("attenuation must be positive");
  if (n1 < 1) throw DimensionError("destripe operator needs n1 >= 1");
  std::vector<double> diag(n1, 1.0);
  for (auto i : stripe_rows) {
    if (i < 1 || i > n1)
      throw IndexError("stripe row " + std::to_string(i) + " outside [1, " + std::to_string(n1) + "]");
    diag[i - 1] = attenuation;
  }
  std::vector<std::size_t> dims{n1, n1};
  dims.insert(dims.end(), spec.rest().begin(), spec.rest().end());
  ComplexTensor faces{Shape(dims)};
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t f = 0; f < faces.faces(); ++f) faces.at(i, i, f) = diag[i];
  return inverse(faces, spec);
}

/// Every period-th row (period, 2 period, ...), 1-based.
inline std::vector<std::size_t> periodic_rows(std::size_t n1, std::size_t period) {
  if (period < 1) throw ParameterError("stripe period must be >= 1");
  std::vector<std::size_t> rows;
  for (std::size_t i = period; i <= n1; i += period) rows.push_back(i);
  return rows;
}

/// round((1 - sampling_rate) n1) distinct random rows, 1-based, ascending.
inline std::vector<std::size_t> sampled_stripe_rows(std::size_t n1, double sampling_rate, std::mt19937_64& rng) {
  if (!(sampling_rate >= 0.0 && sampling_rate <= 1.0)) throw ParameterError("sampling rate must lie in [0, 1]");
  const auto k = static_cast<std::size_t>(std::llround((1.0 - sampling_rate) * static_cast<double>(n1)));
  auto rows = random_subset(n1, k, rng);
  for (auto& r : rows) ++r;
  std::sort(rows.begin(), rows.end());
  return rows;
}

/// Smooth nonnegative image stack with values in [0, peak]: every frontal
/// face is a random mix of a constant background and three separable
/// Gaussian blobs (rank <= 4).
inline DenseTensor face_like_stack(const Shape& shape, std::uint64_t seed, double peak = 255.0) {
  if (!(peak > 0.0) || !std::isfinite(peak)) throw ParameterError("image peak intensity must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n1 = shape.rows(), n2 = shape.cols(), nf = shape.faces();
  constexpr std::size_t blobs = 3;
  Matrix row_profiles(n1, blobs + 1), col_profiles(n2, blobs + 1);
  row_profiles.col(0).setConstant(1.0);
  col_profiles.col(0).setConstant(1.0);
  for (std::size_t r = 1; r <= blobs; ++r) {
    const double ci = unit(rng) * static_cast<double>(n1), wi = (0.1 + 0.2 * unit(rng)) * static_cast<double>(n1);
    const double cj = unit(rng) * static_cast<double>(n2), wj = (0.1 + 0.2 * unit(rng)) * static_cast<double>(n2);
    for (std::size_t i = 0; i < n1; ++i) {
      const double d = (static_cast<double>(i) - ci) / wi;
      row_profiles(i, r) = std::exp(-0.5 * d * d);
    }
    for (std::size_t j = 0; j < n2; ++j) {
      const double d = (static_cast<double>(j) - cj) / wj;
      col_profiles(j, r) = std::exp(-0.5 * d * d);
    }
  }
  DenseTensor out(shape);
  for (std::size_t f = 0; f < nf; ++f) {
    Eigen::VectorXd weights(blobs + 1);
    weights(0) = 0.1 + 0.1 * unit(rng);
    for (std::size_t r = 1; r <= blobs; ++r) weights(r) = 0.3 + 0.7 * unit(rng);
    out.set_face(f, row_profiles * weights.asDiagonal() * col_profiles.transpose());
  }
  out *= peak / max_abs(out);
  return out;
}

// ---------------------------------------------------------------------------
// prox audit

struct ProxAuditRow {
  double lambda = 0.0;
  double epsilon = 0.0;
  std::size_t samples = 0;
  double max_deviation = 0.0;  // |lsp_prox_scalar - grid argmin|
  bool fallback_region = false;      // epsilon^2 < 4 lambda: some z fall back to 0
  std::size_t fallback_samples = 0;  // samples with (|z| + eps)^2 < 4 lambda
  std::size_t fallback_nonzero = 0;  // fallback samples with nonzero prox output
};

struct ProxAuditReport {
  std::vector<ProxAuditRow> rows;
  double nlsp_max_deviation = 0.0;  // nlsp_prox vs. matrix SVD oracle on single-face tensors
  double max_deviation = 0.0;
  bool pass = true;
};

/// Argmin over x >= 0 of 1/2 (x - |z|)^2 + lambda log(1 + x / eps) by nested
/// grids (steps 1e-3, 1e-5, 1e-7), signed like z. Exact for unimodal objectives
/// up to the final grid step.
inline double grid_prox(double z, double lambda, double epsilon) {
  const double az = std::abs(z);
  const LspParams p{lambda, epsilon};
  double lo = 0.0, hi = az;
  double best = 0.0;
  for (double step : {1e-3, 1e-5, 1e-7}) {
    double best_obj = std::numeric_limits<double>::infinity();
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    for (std::size_t k = 0; k <= n; ++k) {
      const double x = std::min(hi, lo + static_cast<double>(k) * step);
      const double obj = lsp_prox_objective(x, az, p);
      if (obj < best_obj) {
        best_obj = obj;
        best = x;
      }
    }
    lo = std::max(0.0, best - step);
    hi = std::min(az, best + step);
  }
  return std::copysign(best, z);
}

inline ProxAuditReport prox_audit(std::size_t samples, const std::vector<double>& lambdas,
                                  const std::vector<double>& epsilons, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ProxAuditReport rep;
  for (double lambda : lambdas)
    for (double epsilon : epsilons) {
      const LspParams p{lambda, epsilon};
      p.validate();
      ProxAuditRow row{lambda, epsilon, samples, 0.0, !p.criterion_holds_everywhere(), 0, 0};
      for (std::size_t s = 0; s < samples; ++s) {
        const double z = normal(rng);
        bool fallback = false;
        const double got = lsp_prox_scalar(z, p, &fallback);
        row.fallback_samples += fallback;
        if (fallback && got != 0.0) ++row.fallback_nonzero;
        row.max_deviation = std::max(row.max_deviation, std::abs(got - grid_prox(z, lambda, epsilon)));
      }
      rep.max_deviation = std::max(rep.max_deviation, row.max_deviation);
      rep.rows.push_back(row);
    }

  // Single-face tensors: the t-SVD is the matrix SVD, so the nuclear prox is
  // U diag(prox(sigma)) V^T.
  const TransformSpec spec = TransformSpec::make(TransformKind::identity(), std::vector<std::size_t>{1});
  for (double lambda : lambdas)
    for (double epsilon : epsilons) {
      const LspParams p{lambda, epsilon};
      if (!p.criterion_holds_everywhere()) continue;
      const DenseTensor z = gaussian_tensor(Shape{6, 4, 1}, rng);
      const Matrix m = z.face(0);
      Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd d = svd.singularValues();
      for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = lsp_prox_scalar(d(k), p);
      const Matrix expect = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
      const Matrix got = nlsp_prox(z, p, spec).face(0);
      rep.nlsp_max_deviation = std::max(rep.nlsp_max_deviation, (got - expect).cwiseAbs().maxCoeff());
    }

  rep.pass = rep.max_deviation <= 1e-6 && rep.nlsp_max_deviation <= 1e-10;
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.fallback_nonzero == 0;
  return rep;
}

// ---------------------------------------------------------------------------
// experiment configuration

enum class Task { SynthSparse, SynthLowrank, Destripe, ProxAudit };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::SynthSparse: return "synth-sparse";
    case Task::SynthLowrank: return "synth-lowrank";
    case Task::Destripe: return "destripe";
    case Task::ProxAudit: return "prox-audit";
  }
  return "";
}

inline Task parse_task(const std::string& name) {
  for (Task t : {Task::SynthSparse, Task::SynthLowrank, Task::Destripe, Task::ProxAudit})
    if (name == task_name(t)) return t;
  throw ConfigError("unknown task '" + name + "'");
}

struct ExperimentConfig {
  Task task = Task::SynthSparse;

  // synthetic problems
  std::vector<std::size_t> shape_a{10, 2, 10, 10};
  std::vector<std::size_t> shape_x{2, 10, 10, 10};
  double sparsity = 0.2;
  std::optional<std::size_t> tubal_rank;

  // destriping
  std::vector<std::size_t> image_shape{48, 42, 8, 4};
  std::size_t stripe_period = 5;
  std::optional<double> sampling_rate;
  double attenuation = 0.01;
  double intensity = 255.0;  // peak value of the synthetic image stack

  // solver
  double lambda = 1e-3;
  double epsilon = 0.1;
  double step = 1.0;
  std::size_t max_iters = 2000;
  double tol = 1e-10;
  ScheduleMode schedule = ScheduleMode::Cyclic;
  BlockStrategy blocks;
  bool record_bregman = false;
  bool strict_step = false;
  NlspMode nlsp_mode = NlspMode::SpatialTubes;

  // prox audit
  std::size_t samples = 10000;
  std::vector<double> lambdas{1e-3, 1e-2};
  std::vector<double> epsilons{0.1, 1.0};

  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string transform = "fft";
  std::string out = "out";
};

/// Defaults reproducing the corresponding study.
inline ExperimentConfig default_config(Task task) {
  ExperimentConfig c;
  c.task = task;
  if (task == Task::Destripe) {
    c.lambda = 0.1;
    c.epsilon = 1.0;
    c.step = 1.0;
    c.max_iters = 500;
    c.tol = 1e-13;
  }
  return c;
}

namespace detail {

inline const char* schedule_name(ScheduleMode m) { return m == ScheduleMode::Cyclic ? "cyclic" : "random"; }

inline const char* block_name(BlockMode m) {
  switch (m) {
    case BlockMode::Single: return "single";
    case BlockMode::Overlapping: return "ol";
    case BlockMode::NonOverlapping: return "nol";
  }
  return "";
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Overlays a JSON object on the defaults for its task. Unknown fields are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j, std::optional<Task> task = std::nullopt) {
  using detail::get_field;
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  Task t = task.value_or(Task::SynthSparse);
  if (j.contains("task")) {
    const Task named = parse_task(get_field<std::string>(j, "task"));
    if (task && named != *task)
      throw ConfigError(std::string("configuration is for task '") + task_name(named) + "', not '" +
                        task_name(*task) + "'");
    t = named;
  }
  ExperimentConfig c = default_config(t);
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "task") continue;
    else if (key == "shape_a") c.shape_a = get_field<std::vector<std::size_t>>(j, k);
    else if (key == "shape_x") c.shape_x = get_field<std::vector<std::size_t>>(j, k);
    else if (key == "sparsity") c.sparsity = get_field<double>(j, k);
    else if (key == "tubal_rank")
      c.tubal_rank = value.is_null() ? std::nullopt : std::optional(get_field<std::size_t>(j, k));
    else if (key == "image_shape") c.image_shape = get_field<std::vector<std::size_t>>(j, k);
    else if (key == "stripe_period") c.stripe_period = get_field<std::size_t>(j, k);
    else if (key == "sampling_rate")
      c.sampling_rate = value.is_null() ? std::nullopt : std::optional(get_field<double>(j, k));
    else if (key == "attenuation") c.attenuation = get_field<double>(j, k);
    else if (key == "intensity") c.intensity = get_field<double>(j, k);
    else if (key == "lambda") c.lambda = get_field<double>(j, k);
    else if (key == "epsilon") c.epsilon = get_field<double>(j, k);
    else if (key == "step") c.step = get_field<double>(j, k);
    else if (key == "max_iters") c.max_iters = get_field<std::size_t>(j, k);
    else if (key == "tol") c.tol = get_field<double>(j, k);
    else if (key == "schedule") {
      const auto s = get_field<std::string>(j, k);
      if (s == "cyclic") c.schedule = ScheduleMode::Cyclic;
      else if (s == "random") c.schedule = ScheduleMode::RandomWeighted;
      else throw ConfigError("schedule must be 'cyclic' or 'random', got '" + s + "'");
    } else if (key == "block_mode") {
      const auto s = get_field<std::string>(j, k);
      if (s == "single") c.blocks.mode = BlockMode::Single;
      else if (s == "ol") c.blocks.mode = BlockMode::Overlapping;
      else if (s == "nol") c.blocks.mode = BlockMode::NonOverlapping;
      else throw ConfigError("block_mode must be 'single', 'ol' or 'nol', got '" + s + "'");
    } else if (key == "beta") c.blocks.beta = get_field<std::size_t>(j, k);
    else if (key == "blocks") c.blocks.blocks = get_field<std::size_t>(j, k);
    else if (key == "weighted_blocks") c.blocks.weighted_blocks = get_field<bool>(j, k);
    else if (key == "record_bregman") c.record_bregman = get_field<bool>(j, k);
    else if (key == "strict_step") c.strict_step = get_field<bool>(j, k);
    else if (key == "nlsp_mode") {
      const auto s = get_field<std::string>(j, k);
      if (s == "spatial") c.nlsp_mode = NlspMode::SpatialTubes;
      else if (s == "transform") c.nlsp_mode = NlspMode::TransformSingularValues;
      else throw ConfigError("nlsp_mode must be 'spatial' or 'transform', got '" + s + "'");
    } else if (key == "samples") c.samples = get_field<std::size_t>(j, k);
    else if (key == "lambdas") c.lambdas = get_field<std::vector<double>>(j, k);
    else if (key == "epsilons") c.epsilons = get_field<std::vector<double>>(j, k);
    else if (key == "trials") c.trials = get_field<std::size_t>(j, k);
    else if (key == "seed") c.seed = get_field<std::uint64_t>(j, k);
    else if (key == "transform") c.transform = get_field<std::string>(j, k);
    else if (key == "out") c.out = get_field<std::string>(j, k);
    else throw ConfigError("unknown configuration field '" + key + "'");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Task> task = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed configuration " + path.string() + ": " + e.what());
  }
  return parse_config(j, task);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["task"] = task_name(c.task);
  if (c.task == Task::SynthSparse || c.task == Task::SynthLowrank) {
    j["shape_a"] = c.shape_a;
    j["shape_x"] = c.shape_x;
    if (c.task == Task::SynthSparse) j["sparsity"] = c.sparsity;
    j["tubal_rank"] = c.tubal_rank ? nlohmann::json(*c.tubal_rank) : nlohmann::json(nullptr);
  }
  if (c.task == Task::Destripe) {
    j["image_shape"] = c.image_shape;
    j["stripe_period"] = c.stripe_period;
    j["sampling_rate"] = c.sampling_rate ? nlohmann::json(*c.sampling_rate) : nlohmann::json(nullptr);
    j["attenuation"] = c.attenuation;
    j["intensity"] = c.intensity;
  }
  if (c.task == Task::ProxAudit) {
    j["samples"] = c.samples;
    j["lambdas"] = c.lambdas;
    j["epsilons"] = c.epsilons;
  } else {
    j["lambda"] = c.lambda;
    j["epsilon"] = c.epsilon;
    j["step"] = c.step;
    j["max_iters"] = c.max_iters;
    j["tol"] = c.tol;
    j["schedule"] = detail::schedule_name(c.schedule);
    j["block_mode"] = detail::block_name(c.blocks.mode);
    j["beta"] = c.blocks.beta;
    j["blocks"] = c.blocks.blocks;
    j["weighted_blocks"] = c.blocks.weighted_blocks;
    j["record_bregman"] = c.record_bregman;
    j["strict_step"] = c.strict_step;
    j["nlsp_mode"] = c.nlsp_mode == NlspMode::SpatialTubes ? "spatial" : "transform";
    j["transform"] = c.transform;
  }
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j;
}

/// Checks everything that can be checked before any solve runs.
inline void validate(const ExperimentConfig& c) {
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  if (c.task == Task::ProxAudit) {
    if (c.samples < 1) throw ConfigError("samples must be >= 1");
    if (c.lambdas.empty() || c.epsilons.empty()) throw ConfigError("lambdas and epsilons must be nonempty");
    return;
  }
  try {
    (void)parse_transform(c.transform);
  } catch (const Error& e) {
    throw ConfigError("transform '" + c.transform + "': " + e.what());
  }
  if (c.max_iters < 1) throw ConfigError("max_iters must be >= 1");
}

// ---------------------------------------------------------------------------
// experiment execution

struct TrialResult {
  std::uint64_t seed = 0;
  SolveReport report;
  MetricReport final_metrics;
};

struct CurveArtifact {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
  std::vector<double> re_mean;        // per iteration, over trials that reached it
  std::vector<double> residual_mean;
  std::optional<ProxAuditReport> audit;
  double wall_seconds = 0.0;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline std::vector<double> mean_curve(const std::vector<TrialResult>& trials,
                                      const std::vector<double> SolveReport::*series) {
  std::size_t len = 0;
  for (const auto& t : trials) len = std::max(len, (t.report.*series).size());
  std::vector<double> mean(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    std::size_t n = 0;
    for (const auto& t : trials)
      if (k < (t.report.*series).size()) {
        mean[k] += (t.report.*series)[k];
        ++n;
      }
    mean[k] /= static_cast<double>(n);
  }
  return mean;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_curve_csv(const std::filesystem::path& path, const std::string& label,
                            const std::vector<double>& mean, const std::vector<TrialResult>& trials,
                            const std::vector<double> SolveReport::*series) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "iter," << label << "_mean";
  for (std::size_t t = 0; t < trials.size(); ++t) os << ',' << label << "_trial_" << t + 1;
  os << '\n';
  for (std::size_t k = 0; k < mean.size(); ++k) {
    os << k + 1 << ',' << format_double(mean[k]);
    for (const auto& t : trials) {
      os << ',';
      if (k < (t.report.*series).size()) os << format_double((t.report.*series)[k]);
    }
    os << '\n';
  }
  if (!os) throw ConfigError("failed writing " + path.string());
}

inline nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

inline SolverConfig solver_config(const ExperimentConfig& c, const TransformSpec& spec, std::uint64_t trial_seed) {
  SolverConfig s;
  s.params = {c.lambda, c.epsilon};
  s.step = c.step;
  s.max_iters = c.max_iters;
  s.tol = c.tol;
  s.schedule = {c.schedule, trial_seed + 0x9E3779B97F4A7C15ULL};
  s.blocks = c.blocks;
  s.transform = spec;
  s.record_bregman = c.record_bregman;
  s.strict_step = c.strict_step;
  s.nlsp_mode = c.nlsp_mode;
  return s;
}

inline TrialResult run_trial(const ExperimentConfig& c, std::uint64_t trial_seed) {
  TrialResult r;
  r.seed = trial_seed;
  const TransformKind kind = parse_transform(c.transform);
  if (c.task == Task::Destripe) {
    const Shape shape(c.image_shape);
    const TransformSpec spec = TransformSpec::make(kind, shape);
    std::mt19937_64 rng(trial_seed);
    const DenseTensor truth = face_like_stack(shape, trial_seed, c.intensity);
    const auto rows = c.sampling_rate ? sampled_stripe_rows(shape.rows(), *c.sampling_rate, rng)
                                      : periodic_rows(shape.rows(), c.stripe_period);
    const DenseTensor a = build_destripe_operator(shape.rows(), rows, c.attenuation, spec);
    const DenseTensor b = t_product(a, truth, spec);
    r.report = solve_lowrank(a, b, solver_config(c, spec, trial_seed), &truth);
    r.final_metrics = evaluate(r.report.final_x, truth);
    return r;
  }
  const Shape shape_a(c.shape_a), shape_x(c.shape_x);
  const TransformSpec spec = TransformSpec::make(kind, shape_a);
  const SyntheticProblem p = c.task == Task::SynthSparse
                                 ? gen_synthetic_sparse(shape_a, shape_x, c.sparsity, trial_seed, spec)
                                 : gen_synthetic_lowrank(shape_a, shape_x, c.tubal_rank, trial_seed, spec);
  const SolverConfig sc = solver_config(c, spec, trial_seed);
  r.report = c.task == Task::SynthSparse ? solve_sparse(p.a, p.b, sc, &p.x) : solve_lowrank(p.a, p.b, sc, &p.x);
  r.final_metrics = evaluate(r.report.final_x, p.x);
  return r;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw ConfigError("failed writing " + path.string());
}

}  // namespace detail

/// Error from a failed trial, with the trial index prepended.
template <typename E>
[[noreturn]] void rethrow_with_trial(const E& e, std::size_t trial) {
  const std::string msg = "trial " + std::to_string(trial + 1) + ": " + e.what();
  if constexpr (std::is_same_v<E, DivergenceError>) throw DivergenceError(msg, e.iteration());
  else throw E(msg);
}

/// Runs all trials (seed + trial index, trial from 0), then writes into config.out:
///   curves.csv    iter,re_mean,re_trial_1,...
///   residual.csv  iter,residual_mean,residual_trial_1,...
///   summary.json  final metrics, iteration counts, timings, warnings, config echo
/// prox-audit writes prox_audit.csv and summary.json instead. Files written
/// before a failure are removed.
inline CurveArtifact run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  validate(config);
  CurveArtifact art;
  art.config = config;
  const auto start = std::chrono::steady_clock::now();

  if (config.task == Task::ProxAudit) {
    art.audit = prox_audit(config.samples, config.lambdas, config.epsilons, config.seed);
  } else {
    for (std::size_t t = 0; t < config.trials; ++t) {
      try {
        art.trials.push_back(detail::run_trial(config, config.seed + t));
      } catch (const DivergenceError& e) {
        rethrow_with_trial(e, t);
      } catch (const NumericalError& e) {
        rethrow_with_trial(e, t);
      } catch (const ParameterError& e) {
        rethrow_with_trial(e, t);
      } catch (const DimensionError& e) {
        rethrow_with_trial(e, t);
      }
    }
    art.re_mean = detail::mean_curve(art.trials, &SolveReport::re_history);
    art.residual_mean = detail::mean_curve(art.trials, &SolveReport::residual_history);
  }
  art.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out(config.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
  try {
    nlohmann::json summary;
    summary["config"] = to_json(config);
    summary["wall_seconds"] = art.wall_seconds;
    if (art.audit) {
      const fs::path csv = out / "prox_audit.csv";
      art.files.push_back(csv);
      std::ofstream os(csv);
      if (!os) throw ConfigError("cannot write " + csv.string());
      os << "lambda,epsilon,samples,fallback_region,fallback_samples,fallback_nonzero,max_deviation\n";
      for (const auto& r : art.audit->rows)
        os << detail::format_double(r.lambda) << ',' << detail::format_double(r.epsilon) << ',' << r.samples << ','
           << (r.fallback_region ? 1 : 0) << ',' << r.fallback_samples << ',' << r.fallback_nonzero << ','
           << detail::format_double(r.max_deviation) << '\n';
      if (!os) throw ConfigError("failed writing " + csv.string());
      summary["max_deviation"] = art.audit->max_deviation;
      summary["nlsp_max_deviation"] = art.audit->nlsp_max_deviation;
      summary["pass"] = art.audit->pass;
    } else {
      art.files.push_back(out / "curves.csv");
      detail::write_curve_csv(art.files.back(), "re", art.re_mean, art.trials, &SolveReport::re_history);
      art.files.push_back(out / "residual.csv");
      detail::write_curve_csv(art.files.back(), "residual", art.residual_mean, art.trials,
                              &SolveReport::residual_history);
      nlohmann::json trials = nlohmann::json::array();
      double time_sum = 0.0, psnr_sum = 0.0, ssim_sum = 0.0;
      std::size_t time_count = 0;
      for (const auto& t : art.trials) {
        const auto& rep = t.report;
        const double iter_time = std::accumulate(rep.wall_times.begin(), rep.wall_times.end(), 0.0) /
                                 static_cast<double>(rep.wall_times.size());
        time_sum += std::accumulate(rep.wall_times.begin(), rep.wall_times.end(), 0.0);
        time_count += rep.wall_times.size();
        psnr_sum += t.final_metrics.psnr;
        ssim_sum += t.final_metrics.ssim;
        trials.push_back({{"seed", t.seed},
                          {"iterations", rep.iterations_run},
                          {"termination", to_string(rep.termination)},
                          {"final_re", t.final_metrics.re},
                          {"final_residual", rep.residual_history.back()},
                          {"psnr", detail::finite_or_string(t.final_metrics.psnr)},
                          {"ssim", t.final_metrics.ssim},
                          {"seconds_per_iteration", iter_time},
                          {"criterion_violations", rep.criterion_violations},
                          {"warnings", rep.warnings}});
      }
      const double n = static_cast<double>(art.trials.size());
      summary["trials"] = trials;
      summary["iterations"] = art.re_mean.size();
      summary["final_re_mean"] = art.re_mean.back();
      summary["final_residual_mean"] = art.residual_mean.back();
      summary["psnr_mean"] = detail::finite_or_string(psnr_sum / n);
      summary["ssim_mean"] = ssim_sum / n;
      summary["seconds_per_iteration"] = time_sum / static_cast<double>(time_count);
    }
    art.files.push_back(out / "summary.json");
    detail::write_json(art.files.back(), summary);
  } catch (...) {
    for (const auto& f : art.files) fs::remove(f, ec);
    throw;
  }
  return art;
}

}  // namespace lspk

#endif  // LSPK_EXPERIMENTS_HPP
