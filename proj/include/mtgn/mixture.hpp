#pragma once

#include <cstdint>
#include <vector>

#include "mtgn/nn.hpp"
#include "mtgn/rng.hpp"
#include "mtgn/tensor.hpp"

namespace mtgn {

/// Record/replay of sampled outcomes so a loss that involves sampling can be
/// re-evaluated as a deterministic function of parameters (finite-difference
/// probes, bit-exact reruns). Samples are treated as constants by the
/// gradients either way.
struct SampleTrace {
  bool replaying = false;
  std::vector<double> values;
  std::size_t cursor = 0;

  double record_or_replay(double fresh);
  void rewind();
};

/// Batched log-normal mixture parameters inside the computation graph.
/// log_w rows are log-simplexes; log_sigma is clamped to [ln 1e-3, ln 1e3].
struct MixtureNode {
  TensorPtr log_w;
  TensorPtr mu;
  TensorPtr log_sigma;

  std::int64_t rows() const { return log_w->rows(); }
  std::int64_t components() const { return log_w->cols(); }
};

/// Plain values for one distribution: weights on the simplex, log-means,
/// positive log-std-devs.
struct MixtureParams {
  std::vector<double> w;
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Three single-hidden-layer MLP branches producing (omega, mu, sigma) from a
/// context vector: omega via softmax, mu raw, sigma via exp with clamping.
struct MixtureHead {
  Mlp w_branch, mu_branch, sigma_branch;

  MixtureHead() = default;
  MixtureHead(ParamStore& store, const std::string& prefix, std::int64_t in,
              std::int64_t hidden, std::int64_t k);
  /// ctx: [m, in]. Hard error on non-finite context.
  MixtureNode forward(const TensorPtr& ctx) const;
};

/// Values of row `i` of a batched mixture node.
MixtureParams mixture_row(const MixtureNode& node, std::int64_t row);

/// log p(tau) per row, log-sum-exp over components. tau entries must be > 0.
TensorPtr mixture_log_pdf(const MixtureNode& node, const std::vector<double>& tau);

/// Truncated to (0, upper) and renormalized by the window mass Z unless
/// `normalized` is false. Rows with delta >= upper get the -1e30 sentinel.
/// Throws if Z underflows (untrainable window).
TensorPtr mixture_truncated_log_pdf(const MixtureNode& node,
                                    const std::vector<double>& delta, double upper,
                                    bool normalized = true);

/// Sum of per-row categorical KLs: rows of log_q and log_p are log-simplexes.
TensorPtr categorical_kl_rows(const TensorPtr& log_q, const TensorPtr& log_p);

/// Monte Carlo KL(q_trunc || p) per row: samples drawn from the truncated
/// posterior (recorded in `trace` when given), densities evaluated in-graph.
TensorPtr mc_kl(const MixtureNode& q, double upper, const MixtureNode& p, int n,
                Rng& rng, SampleTrace* trace = nullptr, bool normalized = true);

// Value-level counterparts (samplers, evaluation, test oracles).
double log_pdf_value(const MixtureParams& p, double tau);
double truncated_log_pdf_value(const MixtureParams& p, double delta, double upper,
                               bool normalized = true);
/// Mixture CDF mass over (0, upper).
double window_mass(const MixtureParams& p, double upper);
/// Closed-form expectation sum_k w_k exp(mu_k + sigma_k^2/2); saturates with a
/// warning once the exponent passes 700.
double expectation_value(const MixtureParams& p);
double sample_mixture(const MixtureParams& p, Rng& rng);
/// Inverse-CDF sampling restricted to (0, upper); requires window mass >= 1e-12.
double sample_truncated(const MixtureParams& p, double upper, Rng& rng);
double categorical_kl_value(const std::vector<double>& q, const std::vector<double>& p);
double mc_kl_value(const MixtureParams& q, double upper, const MixtureParams& p, int n,
                   Rng& rng);

}  // namespace mtgn
