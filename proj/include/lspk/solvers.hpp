#ifndef LSPK_SOLVERS_HPP
#define LSPK_SOLVERS_HPP

// Log-sum regularized Kaczmarz iterations for A *_L X = B:
//
//   Z^{k+1} = Z^k + t A(tau)^* *_L (B(tau) - A(tau) *_L X^k) / ||A(tau)||_F^2
//   X^{k+1} = prox(Z^{k+1})
//
// with prox = prox_{lambda LSP} (sparse recovery) or prox_{lambda NLSP}
// (low-rank recovery), and tau a single row or a block of rows of A chosen
// by a RowSchedule.

#include "lspk/regularizers.hpp"
#include "lspk/tensor.hpp"
#include "lspk/tlinalg.hpp"
#include "lspk/transforms.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace lspk {

enum class ScheduleMode { Cyclic, RandomWeighted };

struct IndexSchedule {
  ScheduleMode mode = ScheduleMode::Cyclic;
  std::uint64_t seed = 0;  // RandomWeighted only
};

enum class BlockMode { Single, Overlapping, NonOverlapping };

struct BlockStrategy {
  BlockMode mode = BlockMode::Single;
  std::size_t beta = 1;          // block size, Overlapping
  std::size_t blocks = 1;        // number of blocks d, NonOverlapping
  bool weighted_blocks = false;  // NonOverlapping + random: sample blocks by ||A(tau)||_F^2 instead of uniformly
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Index j with probability weights[j] / sum(weights).
inline std::size_t weighted_draw(std::mt19937_64& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    acc += weights[j];
    last_positive = j;
    if (u < acc) return j;
  }
  return last_positive;
}

/// d contiguous near-equal blocks of [n1] (1-based); the first n1 mod d blocks are one longer.
inline std::vector<std::vector<std::size_t>> contiguous_partition(std::size_t n1, std::size_t d) {
  if (d < 1 || d > n1)
    throw ParameterError("number of blocks " + std::to_string(d) + " outside [1, " + std::to_string(n1) + "]");
  std::vector<std::vector<std::size_t>> parts;
  std::size_t next = 1;
  for (std::size_t b = 0; b < d; ++b) {
    const std::size_t len = n1 / d + (b < n1 % d ? 1 : 0);
    std::vector<std::size_t> block(len);
    for (auto& i : block) i = next++;
    parts.push_back(std::move(block));
  }
  return parts;
}

/// Row index sets (1-based) visited by the Kaczmarz iteration.
class RowSchedule {
public:
  RowSchedule(const BlockStrategy& strategy, const IndexSchedule& selection, std::vector<double> row_weights)
      : strategy_(strategy), selection_(selection), weights_(std::move(row_weights)), rng_(selection.seed) {
    const std::size_t n1 = weights_.size();
    if (n1 == 0) throw ParameterError("schedule over an empty row set");
    switch (strategy_.mode) {
      case BlockMode::Single:
        break;
      case BlockMode::Overlapping:
        if (strategy_.beta < 1 || strategy_.beta > n1)
          throw ParameterError("block size beta = " + std::to_string(strategy_.beta) + " outside [1, " +
                               std::to_string(n1) + "]");
        break;
      case BlockMode::NonOverlapping:
        partition_ = contiguous_partition(n1, strategy_.blocks);
        for (const auto& block : partition_) {
          double w = 0.0;
          for (auto i : block) w += weights_[i - 1];
          block_weights_.push_back(w);
        }
        break;
    }
  }

  /// Fixed partition for NonOverlapping schedules, empty otherwise.
  const std::vector<std::vector<std::size_t>>& partition() const noexcept { return partition_; }

  std::vector<std::size_t> next() {
    const std::size_t n1 = weights_.size();
    const std::size_t k = counter_++;
    const bool random = selection_.mode == ScheduleMode::RandomWeighted;
    switch (strategy_.mode) {
      case BlockMode::Single:
        return {random ? weighted_draw(rng_, weights_) + 1 : k % n1 + 1};
      case BlockMode::NonOverlapping: {
        if (!random) return partition_[k % partition_.size()];
        if (strategy_.weighted_blocks) return partition_[weighted_draw(rng_, block_weights_)];
        return partition_[static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(partition_.size()))];
      }
      case BlockMode::Overlapping: {
        const std::size_t beta = strategy_.beta;
        std::vector<std::size_t> block;
        block.reserve(beta);
        if (!random) {
          const std::size_t start = (k * beta) % n1;
          for (std::size_t j = 0; j < beta; ++j) block.push_back((start + j) % n1 + 1);
          return block;
        }
        std::vector<double> w = weights_;
        for (std::size_t j = 0; j < beta; ++j) {
          const std::size_t pick = weighted_draw(rng_, w);
          block.push_back(pick + 1);
          w[pick] = 0.0;
        }
        return block;
      }
    }
    return {};
  }

private:
  BlockStrategy strategy_;
  IndexSchedule selection_;
  std::vector<double> weights_;
  std::vector<double> block_weights_;
  std::vector<std::vector<std::size_t>> partition_;
  std::mt19937_64 rng_;
  std::size_t counter_ = 0;
};

/// ||A(j)||_F^2 for every horizontal slice j.
inline std::vector<double> row_norms_squared(const DenseTensor& a) {
  std::vector<double> out(a.rows(), 0.0);
  const std::size_t len = a.cols() * a.faces();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < len; ++k) out[i] += a[i * len + k] * a[i * len + k];
  return out;
}

inline RowSchedule make_schedule(const BlockStrategy& strategy, const IndexSchedule& selection, const DenseTensor& a) {
  return RowSchedule(strategy, selection, row_norms_squared(a));
}

/// Largest step t with guaranteed Bregman decay: (2 - 2 lambda / eps^2) / rho.
inline double step_bound(const LspParams& p, double rho) {
  p.validate();
  if (p.lambda >= p.epsilon * p.epsilon)
    throw ParameterError("step bound needs lambda < epsilon^2 (strong convexity)");
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  return (2.0 - 2.0 * p.lambda / (p.epsilon * p.epsilon)) / rho;
}

/// D(x, y) = f(y) - f(x) - <z_sub, y - x> with f = lambda LSP + 1/2 ||.||_F^2
/// and z_sub a subgradient of f at x.
inline double bregman_distance(const DenseTensor& x, const DenseTensor& y, const DenseTensor& z_sub,
                               const LspParams& p) {
  x.require_same_shape(y);
  x.require_same_shape(z_sub);
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xv = x[k], yv = y[k];
    const double fy = p.lambda * std::log1p(std::abs(yv) / p.epsilon) + 0.5 * yv * yv;
    const double fx = p.lambda * std::log1p(std::abs(xv) / p.epsilon) + 0.5 * xv * xv;
    d += fy - fx - z_sub[k] * (yv - xv);
  }
  return d;
}

/// One Kaczmarz step on Z for the rows idxs (1-based), through row-sliced t-products:
/// z + t A(idxs)^* *_L (B(idxs) - A(idxs) *_L x) / ||A(idxs)||_F^2.
inline DenseTensor kaczmarz_z_update(const DenseTensor& z, const DenseTensor& x, const DenseTensor& a,
                                     const DenseTensor& b, std::span<const std::size_t> idxs, double t,
                                     const TransformSpec& spec) {
  if (idxs.empty()) throw IndexError("empty row block");
  const DenseTensor a_sub = horizontal_subtensor(a, idxs);
  const double norm2 = frobenius_norm(a_sub) * frobenius_norm(a_sub);
  if (norm2 == 0.0) throw DegenerateRowError("row block of A has zero Frobenius norm");
  const DenseTensor residual = horizontal_subtensor(b, idxs) - t_product_slices(a, idxs, x, spec);
  DenseTensor out = z;
  out.axpy(t / norm2, t_product(conj_transpose(a_sub, spec), residual, spec));
  return out;
}

struct SolverConfig {
  LspParams params{1e-3, 0.1};
  double step = 1.0;
  std::size_t max_iters = 2000;
  /// Relative-change stopping threshold; 0 runs all max_iters iterations.
  double tol = 1e-10;
  IndexSchedule schedule;
  BlockStrategy blocks;
  TransformSpec transform;
  bool record_bregman = false;
  /// Reject steps at or above step_bound instead of recording a warning.
  bool strict_step = false;
  NlspMode nlsp_mode = NlspMode::SpatialTubes;
};

enum class Termination { Tolerance, MaxIters };

inline const char* to_string(Termination t) { return t == Termination::Tolerance ? "tolerance" : "max_iters"; }

struct SolveReport {
  std::size_t iterations_run = 0;
  Termination termination = Termination::MaxIters;
  std::vector<double> re_history;        // with ground truth only
  std::vector<double> residual_history;  // ||B - A *_L X^k||_F
  std::vector<double> bregman_history;   // D_{f,Z^k}(X^k, ground truth); sparse solves with record_bregman
  std::vector<double> wall_times;        // seconds per iteration, update and prox only
  std::size_t criterion_violations = 0;  // entries of Z iterates with (|z| + eps)^2 < 4 lambda
  std::vector<std::string> warnings;
  DenseTensor final_x;
};

/// Checks the parameter invariants; returns warnings for non-fatal violations.
inline std::vector<std::string> validate_config(const SolverConfig& c, const DenseTensor& a, const DenseTensor& b) {
  c.params.validate();
  if (!c.params.criterion_holds_everywhere()) {
    std::ostringstream os;
    os << "lambda = " << c.params.lambda << ", epsilon = " << c.params.epsilon
       << " violate epsilon^2 >= 4 lambda";
    throw ParameterError(os.str());
  }
  if (!(c.step > 0.0) || !std::isfinite(c.step)) throw ParameterError("step size must be positive");
  if (c.max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (!(c.tol >= 0.0)) throw ParameterError("tol must be >= 0");
  if (a.rows() != b.rows() || a.shape().rest() != b.shape().rest())
    throw DimensionError("A " + a.shape().str() + " and B " + b.shape().str() + " are not conformable");
  c.transform.require_compatible(a.shape());
  std::vector<std::string> warnings;
  const double bound = step_bound(c.params, c.transform.rho());
  if (c.step >= bound) {
    std::ostringstream os;
    os << "step " << c.step << " is not below the convergence bound " << bound << " (rho = " << c.transform.rho()
       << ")";
    if (c.strict_step) throw ParameterError(os.str());
    warnings.push_back(os.str());
  }
  return warnings;
}

namespace detail {

// Transform-domain cache of A and B for repeated row-block updates.
class KaczmarzSystem {
public:
  KaczmarzSystem(const DenseTensor& a, const DenseTensor& b, const TransformSpec& spec)
      : spec_(spec), al_(forward(a, spec)), bl_(forward(b, spec)), row_norm2_(row_norms_squared(a)) {
    parseval_ = spec.kind().type != TransformKind::Type::Explicit;
  }

  const std::vector<double>& row_norm2() const { return row_norm2_; }

  // z += t A(idxs)^* *_L (B(idxs) - A(idxs) *_L x) / ||A(idxs)||^2, given xl = L(x).
  void update(DenseTensor& z, const ComplexTensor& xl, std::span<const std::size_t> idxs, double t,
              std::size_t iteration) const {
    double norm2 = 0.0;
    for (auto i : idxs) norm2 += row_norm2_.at(i - 1);
    if (norm2 == 0.0) throw DegenerateRowError("row block of A has zero Frobenius norm");
    const ComplexTensor a_rows = horizontal_subtensor(al_, idxs);
    ComplexTensor r = horizontal_subtensor(bl_, idxs);
    r -= facewise_product(a_rows, xl);
    const ComplexTensor wl = facewise_adjoint_product(a_rows, r);
    if (!wl.all_finite())
      throw DivergenceError("non-finite Kaczmarz update at iteration " + std::to_string(iteration), iteration);
    z.axpy(t / norm2, inverse(wl, spec_));
  }

  double residual_norm(const ComplexTensor& xl) const {
    ComplexTensor r = bl_;
    r -= facewise_product(al_, xl);
    if (parseval_) return frobenius_norm(r) / std::sqrt(spec_.rho());
    return frobenius_norm(inverse(r, spec_));
  }

private:
  const TransformSpec& spec_;
  ComplexTensor al_, bl_;
  std::vector<double> row_norm2_;
  bool parseval_ = true;
};

template <typename Prox>
SolveReport run_kaczmarz(const DenseTensor& a, const DenseTensor& b, const SolverConfig& cfg,
                         const DenseTensor* ground_truth, const DenseTensor* initial_z, bool sparse, Prox&& prox) {
  using clock = std::chrono::steady_clock;
  SolveReport rep;
  rep.warnings = validate_config(cfg, a, b);
  const Shape x_shape = a.shape().with_matrix(a.cols(), b.cols());
  if (ground_truth && !(ground_truth->shape() == x_shape))
    throw DimensionError("ground truth " + ground_truth->shape().str() + " does not match X " + x_shape.str());
  if (initial_z && !(initial_z->shape() == x_shape))
    throw DimensionError("initial Z " + initial_z->shape().str() + " does not match X " + x_shape.str());
  const bool track_bregman = sparse && cfg.record_bregman && ground_truth;

  const KaczmarzSystem sys(a, b, cfg.transform);
  RowSchedule schedule(cfg.blocks, cfg.schedule, sys.row_norm2());
  if (cfg.blocks.mode == BlockMode::NonOverlapping) {
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& block : schedule.partition()) {
      total += block.size();
      seen.insert(block.begin(), block.end());
    }
    if (seen.size() != a.rows() || total != a.rows() || *seen.begin() != 1 || *seen.rbegin() != a.rows())
      throw ParameterError("non-overlapping blocks do not partition the rows");
  }

  DenseTensor z = initial_z ? *initial_z : DenseTensor(x_shape);
  DenseTensor x = prox(z);
  ComplexTensor xl = forward(x, cfg.transform);

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    const auto t0 = clock::now();
    const auto idxs = schedule.next();
    sys.update(z, xl, idxs, cfg.step, k + 1);
    if (!z.all_finite()) throw DivergenceError("non-finite Z iterate at iteration " + std::to_string(k + 1), k + 1);
    DenseTensor x_next = prox(z);
    if (!x_next.all_finite())
      throw DivergenceError("non-finite X iterate at iteration " + std::to_string(k + 1), k + 1);
    const double change = frobenius_norm(x_next - x);
    const double base = frobenius_norm(x);
    xl = forward(x_next, cfg.transform);
    x = std::move(x_next);
    const auto t1 = clock::now();

    rep.wall_times.push_back(std::chrono::duration<double>(t1 - t0).count());
    rep.residual_history.push_back(sys.residual_norm(xl));
    if (!std::isfinite(rep.residual_history.back()))
      throw DivergenceError("non-finite residual at iteration " + std::to_string(k + 1), k + 1);
    if (ground_truth) rep.re_history.push_back(frobenius_norm(*ground_truth - x) / frobenius_norm(*ground_truth));
    if (track_bregman) rep.bregman_history.push_back(bregman_distance(x, *ground_truth, z, cfg.params));
    if (sparse) {
      const auto crit = check_criterion(z, cfg.params);
      if (!crit.pass) {
        for (double v : z.data()) {
          const double s = std::abs(v) + cfg.params.epsilon;
          rep.criterion_violations += s * s < 4.0 * cfg.params.lambda;
        }
      }
    }
    rep.iterations_run = k + 1;
    const bool stop = base > 0.0 ? change / base < cfg.tol : change < cfg.tol;
    if (stop) {
      rep.termination = Termination::Tolerance;
      break;
    }
  }
  rep.final_x = std::move(x);
  return rep;
}

}  // namespace detail

/// LSP-regularized Kaczmarz for sparse recovery. Z^0 = 0 unless initial_z is
/// given (it must lie in the row space of A for the convergence theory).
inline SolveReport solve_sparse(const DenseTensor& a, const DenseTensor& b, const SolverConfig& config,
                                const DenseTensor* ground_truth = nullptr, const DenseTensor* initial_z = nullptr) {
  return detail::run_kaczmarz(a, b, config, ground_truth, initial_z, true,
                              [&](const DenseTensor& z) { return lsp_prox(z, config.params); });
}

/// Nuclear-LSP-regularized Kaczmarz for low-tubal-rank recovery; X^0 = prox_NLSP(Z^0).
inline SolveReport solve_lowrank(const DenseTensor& a, const DenseTensor& b, const SolverConfig& config,
                                 const DenseTensor* ground_truth = nullptr, const DenseTensor* initial_z = nullptr) {
  return detail::run_kaczmarz(a, b, config, ground_truth, initial_z, false, [&](const DenseTensor& z) {
    return nlsp_prox(z, config.params, config.transform, config.nlsp_mode);
  });
}

}  // namespace lspk

#endif  // LSPK_SOLVERS_HPP
