#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mtgn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Whether newly created ops record the computation graph. Thread-local.
bool grad_enabled();

/// RAII switch that disables graph recording (inference / FD probes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense row-major 64-bit float tensor that doubles as a node in a
/// reverse-mode computation graph. Values are immutable once created
/// except for the grad accumulator; graphs are rebuilt per training
/// window and freed when the window's loss root goes out of scope.
class Tensor {
 public:
  std::vector<std::int64_t> shape;  // row-major; {rows, cols} for matrices
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // allocated lazily, same length as data

  // Graph edges point from a result to its operands. backward_fn routes the
  // upstream flow (same length as data) into each operand's `flow` buffer.
  std::vector<TensorPtr> parents;
  std::function<void(const std::vector<double>&)> backward_fn;
  std::vector<double> flow;  // transient per-backward buffer

  Tensor() = default;
  Tensor(std::vector<std::int64_t> shp, std::vector<double> values);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t rows() const;
  std::int64_t cols() const;
  bool is_leaf() const { return parents.empty(); }

  double& at(std::int64_t r, std::int64_t c);
  double at(std::int64_t r, std::int64_t c) const;

  /// True iff every data entry is finite (no NaN/Inf fault state).
  bool finite() const;
  /// Throws std::runtime_error naming `what` if any entry is non-finite.
  void check_finite(const std::string& what) const;

  void ensure_grad();
  void zero_grad();
  void accumulate_grad(const std::vector<double>& g);

  static TensorPtr make(std::vector<std::int64_t> shp, std::vector<double> values,
                        bool requires_grad = false);
  static TensorPtr zeros(std::int64_t r, std::int64_t c, bool requires_grad = false);
  static TensorPtr full(std::int64_t r, std::int64_t c, double v);
  static TensorPtr scalar(double v);
  /// 1 x n row vector.
  static TensorPtr row(std::vector<double> values);

  std::string shape_str() const;
};

/// Reverse-mode sweep from a scalar loss. Accumulates dLoss/dTensor into
/// `grad` of every tensor reachable from `loss`; repeated calls without
/// zeroing add up. Throws if `loss` is not a scalar.
void backward(const TensorPtr& loss);

/// Value copy detached from the graph; receives no gradient.
TensorPtr detach(const TensorPtr& t);

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-8)
/// for d f / d inputs, central step `step`. `f` must be a pure function of the
/// current input values and return a scalar. Throws on non-finite f at a probe.
double grad_check(const std::function<TensorPtr()>& f,
                  const std::vector<TensorPtr>& inputs, double step = 1e-5);

}  // namespace mtgn
