#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtgn/ops.hpp"
#include "mtgn/rng.hpp"
#include "mtgn/tensor.hpp"

namespace mtgn {

/// A named learnable tensor plus its optimizer moment accumulators.
struct Parameter {
  std::string name;
  TensorPtr value;          // leaf, requires_grad
  std::vector<double> m1;   // first moment, sized on first optimizer step
  std::vector<double> m2;   // second moment
};

using ParameterPtr = std::shared_ptr<Parameter>;

enum class Init { kGaussianFanIn, kGaussianStd01, kZero };

/// Owns every learnable tensor of a model. Names are unique; registration
/// order is fixed by construction so a seeded build is reproducible.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t init_seed);

  TensorPtr create(const std::string& name, std::int64_t rows, std::int64_t cols,
                   Init init);
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const;

  const std::vector<ParameterPtr>& all() const { return params_; }
  std::vector<TensorPtr> tensors() const;
  void zero_grads();
  std::size_t total_scalars() const;

 private:
  Rng rng_;
  std::vector<ParameterPtr> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Linear {
  TensorPtr weight;  // [in, out]
  TensorPtr bias;    // [1, out]

  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::int64_t in,
         std::int64_t out);
  TensorPtr forward(const TensorPtr& x) const;
};

/// One hidden layer, tanh nonlinearity.
struct Mlp {
  Linear l1, l2;

  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, std::int64_t in,
      std::int64_t hidden, std::int64_t out);
  TensorPtr forward(const TensorPtr& x) const;
};

/// Standard GRU update (reset/update gates, candidate state). With all-zero
/// parameters and zero previous state the output is exactly zero.
struct GruCell {
  TensorPtr w_xr, w_xz, w_xn;  // [in, hidden]
  TensorPtr w_hr, w_hz, w_hn;  // [hidden, hidden]
  TensorPtr b_xr, b_xz, b_xn;
  TensorPtr b_hr, b_hz, b_hn;

  GruCell() = default;
  GruCell(ParamStore& store, const std::string& prefix, std::int64_t in,
          std::int64_t hidden);
  /// x: [m, in], h_prev: [m, hidden] -> [m, hidden].
  TensorPtr forward(const TensorPtr& x, const TensorPtr& h_prev) const;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with decoupled weight decay: the decay term multiplies the parameter
/// directly instead of being folded into the gradient.
class AdamW {
 public:
  AdamW(std::vector<ParameterPtr> params, AdamWConfig cfg);

  void step();
  void zero_grad();
  std::int64_t steps_taken() const { return t_; }
  AdamWConfig& config() { return cfg_; }

 private:
  std::vector<ParameterPtr> params_;
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace mtgn
