#include "mtgn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace mtgn {

namespace {
thread_local bool g_grad_enabled = true;

std::int64_t product(const std::vector<std::int64_t>& shp) {
  std::int64_t n = 1;
  for (auto s : shp) n *= s;
  return n;
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor::Tensor(std::vector<std::int64_t> shp, std::vector<double> values)
    : shape(std::move(shp)), data(std::move(values)) {
  if (product(shape) != static_cast<std::int64_t>(data.size())) {
    throw std::runtime_error("Tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str());
  }
}

std::int64_t Tensor::rows() const { return shape.empty() ? 1 : shape[0]; }

std::int64_t Tensor::cols() const {
  if (shape.size() < 2) return shape.empty() ? 1 : shape[0];
  return shape[1];
}

double& Tensor::at(std::int64_t r, std::int64_t c) { return data[r * cols() + c]; }
double Tensor::at(std::int64_t r, std::int64_t c) const { return data[r * cols() + c]; }

bool Tensor::finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const std::string& what) const {
  if (!finite()) {
    throw std::runtime_error("non-finite values in " + what);
  }
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
  ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

TensorPtr Tensor::make(std::vector<std::int64_t> shp, std::vector<double> values,
                       bool rg) {
  auto t = std::make_shared<Tensor>(std::move(shp), std::move(values));
  t->requires_grad = rg;
  return t;
}

TensorPtr Tensor::zeros(std::int64_t r, std::int64_t c, bool rg) {
  return make({r, c}, std::vector<double>(static_cast<std::size_t>(r * c), 0.0), rg);
}

TensorPtr Tensor::full(std::int64_t r, std::int64_t c, double v) {
  return make({r, c}, std::vector<double>(static_cast<std::size_t>(r * c), v));
}

TensorPtr Tensor::scalar(double v) { return make({1, 1}, {v}); }

TensorPtr Tensor::row(std::vector<double> values) {
  auto n = static_cast<std::int64_t>(values.size());
  return make({1, n}, std::move(values));
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void backward(const TensorPtr& loss) {
  if (!loss) throw std::runtime_error("backward: null loss");
  if (loss->numel() != 1) {
    throw std::runtime_error("backward: loss must be scalar, got shape " +
                             loss->shape_str());
  }

  // Iterative post-order DFS; graph is a DAG, parents point toward leaves.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Tensor* p = node->parents[idx].get();
      ++idx;
      if (p->backward_fn || p->requires_grad) {
        if (visited.insert(p).second) stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Tensor* n : order) n->flow.assign(n->data.size(), 0.0);
  loss->flow[0] = 1.0;

  // order is post-order, so reverse iteration visits each node after all of
  // its consumers have contributed to its flow.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* n = *it;
    if (n->backward_fn) n->backward_fn(n->flow);
  }

  for (Tensor* n : order) {
    if (n->requires_grad || n->backward_fn) n->accumulate_grad(n->flow);
    n->flow.clear();
    n->flow.shrink_to_fit();
  }
}

TensorPtr detach(const TensorPtr& t) {
  return Tensor::make(t->shape, t->data, false);
}

double grad_check(const std::function<TensorPtr()>& f,
                  const std::vector<TensorPtr>& inputs, double step) {
  // Stash and clear existing grads so this check is side-effect free.
  std::vector<std::vector<double>> saved;
  saved.reserve(inputs.size());
  for (const auto& in : inputs) {
    saved.push_back(in->grad);
    in->grad.clear();
  }

  TensorPtr out = f();
  out->check_finite("grad_check function value");
  backward(out);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& in : inputs) {
    in->ensure_grad();
    analytic.push_back(in->grad);
  }

  double worst = 0.0;
  {
    NoGradGuard ng;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (std::size_t j = 0; j < inputs[i]->data.size(); ++j) {
        const double orig = inputs[i]->data[j];
        inputs[i]->data[j] = orig + step;
        const double fp = f()->data[0];
        inputs[i]->data[j] = orig - step;
        const double fm = f()->data[0];
        inputs[i]->data[j] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
          throw std::runtime_error("grad_check: non-finite f at probe point");
        }
        const double numeric = (fp - fm) / (2.0 * step);
        const double err =
            std::abs(analytic[i][j] - numeric) / (std::abs(analytic[i][j]) + 1e-8);
        worst = std::max(worst, err);
      }
    }
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i]->grad = std::move(saved[i]);
  return worst;
}

}  // namespace mtgn
