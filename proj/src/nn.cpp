#include "mtgn/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace mtgn {

ParamStore::ParamStore(std::uint64_t init_seed) : rng_(init_seed) {}

TensorPtr ParamStore::create(const std::string& name, std::int64_t rows,
                             std::int64_t cols, Init init) {
  if (index_.count(name)) {
    throw std::runtime_error("ParamStore: duplicate parameter name " + name);
  }
  std::vector<double> data(static_cast<std::size_t>(rows * cols), 0.0);
  switch (init) {
    case Init::kZero:
      break;
    case Init::kGaussianFanIn: {
      const double std = 1.0 / std::sqrt(static_cast<double>(rows));
      for (auto& v : data) v = rng_.normal() * std;
      break;
    }
    case Init::kGaussianStd01:
      for (auto& v : data) v = rng_.normal() * 0.1;
      break;
  }
  auto t = Tensor::make({rows, cols}, std::move(data), /*requires_grad=*/true);
  auto p = std::make_shared<Parameter>();
  p->name = name;
  p->value = t;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return t;
}

TensorPtr ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::runtime_error("ParamStore: unknown parameter " + name);
  }
  return params_[it->second]->value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

std::vector<TensorPtr> ParamStore::tensors() const {
  std::vector<TensorPtr> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParamStore::zero_grads() {
  for (const auto& p : params_) p->value->zero_grad();
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value->data.size();
  return n;
}

Linear::Linear(ParamStore& store, const std::string& prefix, std::int64_t in,
               std::int64_t out) {
  weight = store.create(prefix + ".weight", in, out, Init::kGaussianFanIn);
  bias = store.create(prefix + ".bias", 1, out, Init::kZero);
}

TensorPtr Linear::forward(const TensorPtr& x) const {
  return add_rowwise(matmul(x, weight), bias);
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, std::int64_t in,
         std::int64_t hidden, std::int64_t out)
    : l1(store, prefix + ".l1", in, hidden), l2(store, prefix + ".l2", hidden, out) {}

TensorPtr Mlp::forward(const TensorPtr& x) const {
  return l2.forward(tanh(l1.forward(x)));
}

GruCell::GruCell(ParamStore& store, const std::string& prefix, std::int64_t in,
                 std::int64_t hidden) {
  w_xr = store.create(prefix + ".w_xr", in, hidden, Init::kGaussianFanIn);
  w_xz = store.create(prefix + ".w_xz", in, hidden, Init::kGaussianFanIn);
  w_xn = store.create(prefix + ".w_xn", in, hidden, Init::kGaussianFanIn);
  w_hr = store.create(prefix + ".w_hr", hidden, hidden, Init::kGaussianFanIn);
  w_hz = store.create(prefix + ".w_hz", hidden, hidden, Init::kGaussianFanIn);
  w_hn = store.create(prefix + ".w_hn", hidden, hidden, Init::kGaussianFanIn);
  b_xr = store.create(prefix + ".b_xr", 1, hidden, Init::kZero);
  b_xz = store.create(prefix + ".b_xz", 1, hidden, Init::kZero);
  b_xn = store.create(prefix + ".b_xn", 1, hidden, Init::kZero);
  b_hr = store.create(prefix + ".b_hr", 1, hidden, Init::kZero);
  b_hz = store.create(prefix + ".b_hz", 1, hidden, Init::kZero);
  b_hn = store.create(prefix + ".b_hn", 1, hidden, Init::kZero);
}

TensorPtr GruCell::forward(const TensorPtr& x, const TensorPtr& h_prev) const {
  if (x->rows() != h_prev->rows() || h_prev->cols() != w_hr->rows() ||
      x->cols() != w_xr->rows()) {
    throw std::runtime_error("GruCell: width mismatch x=" + x->shape_str() +
                             " h=" + h_prev->shape_str());
  }
  auto r = sigmoid(add(add_rowwise(matmul(x, w_xr), b_xr),
                       add_rowwise(matmul(h_prev, w_hr), b_hr)));
  auto z = sigmoid(add(add_rowwise(matmul(x, w_xz), b_xz),
                       add_rowwise(matmul(h_prev, w_hz), b_hz)));
  auto n = tanh(add(add_rowwise(matmul(x, w_xn), b_xn),
                    mul(r, add_rowwise(matmul(h_prev, w_hn), b_hn))));
  // (1 - z) * n + z * h
  return add(sub(n, mul(z, n)), mul(z, h_prev));
}

AdamW::AdamW(std::vector<ParameterPtr> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& p : params_) {
    auto& v = *p->value;
    const std::size_t n = v.data.size();
    if (p->m1.size() != n) p->m1.assign(n, 0.0);
    if (p->m2.size() != n) p->m2.assign(n, 0.0);
    const bool has_grad = v.grad.size() == n;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = has_grad ? v.grad[i] : 0.0;
      p->m1[i] = cfg_.beta1 * p->m1[i] + (1.0 - cfg_.beta1) * g;
      p->m2[i] = cfg_.beta2 * p->m2[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = p->m1[i] / bc1;
      const double vhat = p->m2[i] / bc2;
      v.data[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                              cfg_.weight_decay * v.data[i]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p->value->zero_grad();
}

}  // namespace mtgn
