#include "mtgn/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "mtgn/ops.hpp"

namespace mtgn {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)
constexpr double kLogSigmaLo = -6.907755278982137;  // ln 1e-3
constexpr double kLogSigmaHi = 6.907755278982137;   // ln 1e3
constexpr double kSentinel = -1e30;
constexpr double kMinWindowMass = 1e-12;
}  // namespace

double SampleTrace::record_or_replay(double fresh) {
  if (replaying) {
    if (cursor >= values.size()) {
      throw std::runtime_error("SampleTrace: replay exhausted");
    }
    return values[cursor++];
  }
  values.push_back(fresh);
  return fresh;
}

void SampleTrace::rewind() {
  replaying = true;
  cursor = 0;
}

MixtureHead::MixtureHead(ParamStore& store, const std::string& prefix, std::int64_t in,
                         std::int64_t hidden, std::int64_t k)
    : w_branch(store, prefix + ".w", in, hidden, k),
      mu_branch(store, prefix + ".mu", in, hidden, k),
      sigma_branch(store, prefix + ".sigma", in, hidden, k) {}

MixtureNode MixtureHead::forward(const TensorPtr& ctx) const {
  ctx->check_finite("mixture head context");
  MixtureNode node;
  node.log_w = log_softmax_rows(w_branch.forward(ctx));
  node.mu = mu_branch.forward(ctx);
  node.log_sigma = clamp(sigma_branch.forward(ctx), kLogSigmaLo, kLogSigmaHi);
  return node;
}

MixtureParams mixture_row(const MixtureNode& node, std::int64_t row) {
  const auto k = node.components();
  MixtureParams p;
  p.w.resize(k);
  p.mu.resize(k);
  p.sigma.resize(k);
  for (std::int64_t j = 0; j < k; ++j) {
    p.w[j] = std::exp(node.log_w->at(row, j));
    p.mu[j] = node.mu->at(row, j);
    p.sigma[j] = std::exp(node.log_sigma->at(row, j));
  }
  return p;
}

TensorPtr mixture_log_pdf(const MixtureNode& node, const std::vector<double>& tau) {
  const auto m = node.rows(), k = node.components();
  if (static_cast<std::int64_t>(tau.size()) != m) {
    throw std::runtime_error("mixture_log_pdf: tau length " +
                             std::to_string(tau.size()) + " vs rows " +
                             std::to_string(m));
  }
  std::vector<double> const_term(static_cast<std::size_t>(m * k));
  std::vector<double> log_tau_tile(static_cast<std::size_t>(m * k));
  for (std::int64_t i = 0; i < m; ++i) {
    if (!(tau[i] > 0.0)) {
      throw std::runtime_error("mixture_log_pdf: non-positive interval " +
                               std::to_string(tau[i]));
    }
    const double lt = std::log(tau[i]);
    for (std::int64_t j = 0; j < k; ++j) {
      const_term[i * k + j] = -lt - kHalfLog2Pi;
      log_tau_tile[i * k + j] = lt;
    }
  }
  // log w_k - log tau - log sigma_k - 0.5 log 2pi - (log tau - mu_k)^2 / (2 sigma_k^2)
  auto diff = sub(Tensor::make({m, k}, std::move(log_tau_tile)), node.mu);
  auto quad = scale(mul(square(diff), exp(scale(node.log_sigma, -2.0))), 0.5);
  auto comp = sub(sub(add(node.log_w, Tensor::make({m, k}, std::move(const_term))),
                      node.log_sigma),
                  quad);
  return logsumexp_rows(comp);
}

namespace {

/// Per-row window mass Z = sum_k w_k Phi((log U - mu_k) / sigma_k), in-graph.
TensorPtr window_mass_rows(const MixtureNode& node, double upper) {
  const auto m = node.rows(), k = node.components();
  auto log_u = Tensor::full(m, k, std::log(upper));
  auto standardized = mul(sub(log_u, node.mu), exp(neg(node.log_sigma)));
  return lastdim_sum(mul(exp(node.log_w), normal_cdf(standardized)));
}

}  // namespace

TensorPtr mixture_truncated_log_pdf(const MixtureNode& node,
                                    const std::vector<double>& delta, double upper,
                                    bool normalized) {
  if (!(upper > 0.0)) {
    throw std::runtime_error("mixture_truncated_log_pdf: window upper must be > 0");
  }
  const auto m = node.rows();
  auto lp = mixture_log_pdf(node, delta);
  if (normalized) {
    auto z = window_mass_rows(node, upper);
    for (double zv : z->data) {
      if (!(zv >= kMinWindowMass)) {
        throw std::runtime_error(
            "mixture_truncated_log_pdf: window mass underflow (Z=" +
            std::to_string(zv) + "), window is untrainable");
      }
    }
    lp = sub(lp, log(z));
  }
  // Indicator: rows at or past the window edge collapse to the sentinel.
  std::vector<double> keep(static_cast<std::size_t>(m), 1.0);
  std::vector<double> sentinel(static_cast<std::size_t>(m), 0.0);
  bool any_out = false;
  for (std::int64_t i = 0; i < m; ++i) {
    if (delta[i] >= upper) {
      keep[i] = 0.0;
      sentinel[i] = kSentinel;
      any_out = true;
    }
  }
  if (any_out) {
    lp = add(apply_mask(lp, keep), Tensor::make({m, 1}, std::move(sentinel)));
  }
  return lp;
}

TensorPtr categorical_kl_rows(const TensorPtr& log_q, const TensorPtr& log_p) {
  if (log_q->shape != log_p->shape) {
    throw std::runtime_error("categorical_kl_rows: shape mismatch " +
                             log_q->shape_str() + " vs " + log_p->shape_str());
  }
  return lastdim_sum(mul(exp(log_q), sub(log_q, log_p)));
}

TensorPtr mc_kl(const MixtureNode& q, double upper, const MixtureNode& p, int n,
                Rng& rng, SampleTrace* trace, bool normalized) {
  if (n < 1) throw std::runtime_error("mc_kl: need n >= 1 samples");
  const auto m = q.rows();
  std::vector<MixtureParams> qv;
  qv.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) qv.push_back(mixture_row(q, i));

  TensorPtr total;
  for (int j = 0; j < n; ++j) {
    std::vector<double> deltas(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
      double d = 0.0;
      if (!trace || !trace->replaying) d = sample_truncated(qv[i], upper, rng);
      if (trace) d = trace->record_or_replay(d);
      deltas[i] = d;
    }
    auto term = sub(mixture_truncated_log_pdf(q, deltas, upper, normalized),
                    mixture_log_pdf(p, deltas));
    total = total ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(n));
}

double log_pdf_value(const MixtureParams& p, double tau) {
  if (!(tau > 0.0)) {
    throw std::runtime_error("log_pdf_value: non-positive interval " +
                             std::to_string(tau));
  }
  const double lt = std::log(tau);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> comp(p.w.size());
  for (std::size_t k = 0; k < p.w.size(); ++k) {
    const double z = (lt - p.mu[k]) / p.sigma[k];
    comp[k] = std::log(p.w[k]) - lt - std::log(p.sigma[k]) - kHalfLog2Pi - 0.5 * z * z;
    best = std::max(best, comp[k]);
  }
  if (!std::isfinite(best)) return kSentinel;
  double acc = 0.0;
  for (double c : comp) acc += std::exp(c - best);
  return best + std::log(acc);
}

double window_mass(const MixtureParams& p, double upper) {
  const double lu = std::log(upper);
  double z = 0.0;
  for (std::size_t k = 0; k < p.w.size(); ++k) {
    z += p.w[k] * phi_cdf((lu - p.mu[k]) / p.sigma[k]);
  }
  return z;
}

double truncated_log_pdf_value(const MixtureParams& p, double delta, double upper,
                               bool normalized) {
  if (delta >= upper) return kSentinel;
  double lp = log_pdf_value(p, delta);
  if (normalized) {
    const double z = window_mass(p, upper);
    if (!(z >= kMinWindowMass)) {
      throw std::runtime_error("truncated_log_pdf_value: window mass underflow");
    }
    lp -= std::log(z);
  }
  return lp;
}

double expectation_value(const MixtureParams& p) {
  double e = 0.0;
  for (std::size_t k = 0; k < p.w.size(); ++k) {
    double arg = p.mu[k] + 0.5 * p.sigma[k] * p.sigma[k];
    if (arg > 700.0) {
      std::cerr << "[mtgn] warning: mixture expectation overflow (mu + sigma^2/2 = "
                << arg << "), saturating\n";
      arg = 700.0;
    }
    e += p.w[k] * std::exp(arg);
  }
  return e;
}

double sample_mixture(const MixtureParams& p, Rng& rng) {
  const auto k = rng.categorical(p.w);
  return std::exp(p.mu[k] + p.sigma[k] * rng.normal());
}

double sample_truncated(const MixtureParams& p, double upper, Rng& rng) {
  const double lu = std::log(upper);
  std::vector<double> mass(p.w.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.w.size(); ++k) {
    mass[k] = phi_cdf((lu - p.mu[k]) / p.sigma[k]);
    z += p.w[k] * mass[k];
  }
  if (!(z >= kMinWindowMass)) {
    throw std::runtime_error("sample_truncated: window mass " + std::to_string(z) +
                             " below 1e-12");
  }
  std::vector<double> reweighted(p.w.size());
  for (std::size_t k = 0; k < p.w.size(); ++k) reweighted[k] = p.w[k] * mass[k];
  const auto k = rng.categorical(reweighted);
  // Inverse CDF restricted to the window for the chosen component.
  const double qq = rng.uniform_open0() * mass[k];
  double x = std::exp(p.mu[k] + p.sigma[k] * phi_inv(std::min(qq, 1.0 - 1e-16)));
  // Keep strictly inside (0, upper); float rounding can land on the edge.
  x = std::min(x, upper * (1.0 - 1e-12));
  return std::max(x, std::numeric_limits<double>::min());
}

double categorical_kl_value(const std::vector<double>& q, const std::vector<double>& p) {
  if (q.size() != p.size()) {
    throw std::runtime_error("categorical_kl_value: length mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;  // 0 log 0 = 0
    if (p[i] <= 0.0) {
      std::cerr << "[mtgn] warning: categorical KL with q>0 where p=0\n";
      return std::numeric_limits<double>::infinity();
    }
    kl += q[i] * std::log(q[i] / p[i]);
  }
  return kl;
}

double mc_kl_value(const MixtureParams& q, double upper, const MixtureParams& p, int n,
                   Rng& rng) {
  if (n < 1) throw std::runtime_error("mc_kl_value: need n >= 1 samples");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = sample_truncated(q, upper, rng);
    acc += truncated_log_pdf_value(q, d, upper) - log_pdf_value(p, d);
  }
  return acc / static_cast<double>(n);
}

}  // namespace mtgn
