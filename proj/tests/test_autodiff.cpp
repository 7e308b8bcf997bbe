#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "mtgn/nn.hpp"
#include "mtgn/ops.hpp"
#include "mtgn/rng.hpp"
#include "mtgn/tensor.hpp"

using namespace mtgn;

namespace {

TensorPtr leaf(std::vector<std::int64_t> shape, std::vector<double> data) {
  return Tensor::make(std::move(shape), std::move(data), /*requires_grad=*/true);
}

TensorPtr random_leaf(std::int64_t r, std::int64_t c, Rng& rng, double scale = 1.0) {
  std::vector<double> d(static_cast<std::size_t>(r * c));
  for (auto& v : d) v = rng.normal() * scale;
  return Tensor::make({r, c}, std::move(d), true);
}

// Central finite differences against backward() for an arbitrary scalar-valued
// graph builder. rtol 1e-3, atol 1e-5.
void check_grads(const std::function<TensorPtr()>& f,
                 const std::vector<TensorPtr>& inputs, double rtol = 1e-3,
                 double atol = 1e-5) {
  for (const auto& in : inputs) in->grad.clear();
  backward(f());
  const double h = 1e-6;
  for (const auto& in : inputs) {
    in->ensure_grad();
    for (std::size_t i = 0; i < in->data.size(); ++i) {
      const double orig = in->data[i];
      double fp, fm;
      {
        NoGradGuard ng;
        in->data[i] = orig + h;
        fp = f()->data[0];
        in->data[i] = orig - h;
        fm = f()->data[0];
        in->data[i] = orig;
      }
      const double numeric = (fp - fm) / (2 * h);
      const double analytic = in->grad[i];
      CAPTURE(i);
      CHECK(std::abs(analytic - numeric) <= atol + rtol * std::abs(numeric));
    }
  }
  for (const auto& in : inputs) in->grad.clear();
}

// Mixes an op output into a scalar with fixed non-uniform weights so every
// output coordinate influences the loss. Deterministic across re-evaluations,
// which the finite-difference probes rely on.
TensorPtr weighted_sum(const TensorPtr& y) {
  std::vector<double> w(y->data.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + std::sin(1.7 * (i + 1.0));
  return sum_all(apply_mask(y, w));
}

}  // namespace

TEST_CASE("matmul hand example") {
  auto a = Tensor::make({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::make({2, 1}, {1, 1});
  auto y = matmul(a, b);
  CHECK(y->data == std::vector<double>{3, 7});
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  auto a = Tensor::make({2, 3}, std::vector<double>(6, 0.0));
  auto b = Tensor::make({2, 2}, std::vector<double>(4, 0.0));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), std::runtime_error);
}

TEST_CASE("softmax symmetry and row sums") {
  auto y = softmax_rows(Tensor::make({1, 2}, {0, 0}));
  CHECK(y->data[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y->data[1] == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto x = random_leaf(3, 11, rng, 5.0);
    auto s = softmax_rows(x);
    for (std::int64_t i = 0; i < 3; ++i) {
      double total = 0;
      for (std::int64_t j = 0; j < 11; ++j) total += s->at(i, j);
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("max reduce over a set of vectors") {
  auto stacked = concat_rows({Tensor::row({1, 5}), Tensor::row({3, 2})});
  auto y = colwise_max(stacked);
  CHECK(y->data == std::vector<double>{3, 5});

  // Idempotent and permutation invariant.
  Rng rng(3);
  auto a = random_leaf(1, 6, rng);
  auto b = random_leaf(1, 6, rng);
  auto c = random_leaf(1, 6, rng);
  auto m1 = colwise_max(concat_rows({a, b, c}));
  auto m2 = colwise_max(concat_rows({c, a, b}));
  CHECK(m1->data == m2->data);
  auto m3 = colwise_max(concat_rows({a, a, b, c, b}));
  CHECK(m1->data == m3->data);
  auto m4 = colwise_max(concat_rows({m1, m1}));
  CHECK(m4->data == m1->data);
}

TEST_CASE("log rejects non-positive input") {
  CHECK_THROWS_AS(log(Tensor::row({1.0, 0.0})), std::runtime_error);
  CHECK_THROWS_AS(log(Tensor::row({-2.0})), std::runtime_error);
}

TEST_CASE("backward quadratic") {
  auto w = leaf({1, 2}, {1, 2});
  auto loss = sum_all(mul(w, w));
  backward(loss);
  CHECK(w->grad == std::vector<double>{2, 4});
}

TEST_CASE("backward log softmax equals softmax minus onehot") {
  auto z = leaf({1, 4}, {0.3, -1.2, 0.7, 0.1});
  const std::int64_t target = 2;
  auto lp = log_softmax_rows(z);
  backward(gather_cols(lp, {target}));
  auto s = softmax_rows(z);
  for (std::int64_t j = 0; j < 4; ++j) {
    // d log p_i / dz = onehot(i) - softmax(z); loss = +log p_i.
    const double expect = (j == target ? 1.0 : 0.0) - s->data[j];
    CHECK(z->grad[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("detached tensor receives no grad") {
  auto w = leaf({1, 2}, {1.0, 2.0});
  auto d = detach(w);
  auto loss = sum_all(mul(d, w));
  backward(loss);
  CHECK(w->grad == std::vector<double>{1, 2});
  CHECK(d->grad.empty());
}

TEST_CASE("backward requires scalar loss") {
  auto w = leaf({1, 2}, {1.0, 2.0});
  CHECK_THROWS_AS(backward(mul(w, w)), std::runtime_error);
}

TEST_CASE("repeated backward accumulates") {
  auto w = leaf({1, 2}, {1, 2});
  auto loss = sum_all(mul(w, w));
  backward(loss);
  backward(loss);
  CHECK(w->grad == std::vector<double>{4, 8});
}

TEST_CASE("finite difference property over the primitive set") {
  Rng rng(2024);
  int cases = 0;
  for (int seed = 0; seed < 4; ++seed) {
    const std::int64_t m = 2 + rng.uniform_int(3);
    const std::int64_t n = 2 + rng.uniform_int(4);
    const std::int64_t k = 2 + rng.uniform_int(3);

    auto a = random_leaf(m, n, rng);
    auto b = random_leaf(m, n, rng);
    auto w1 = random_leaf(m, k, rng);
    auto w2 = random_leaf(k, n, rng);
    auto bias = random_leaf(1, n, rng);
    auto rowvec = random_leaf(1, n, rng);

    std::vector<double> rw(static_cast<std::size_t>(m));
    for (auto& v : rw) v = rng.normal();
    std::vector<std::int64_t> gidx = {0, m - 1, 0};
    std::vector<std::int64_t> pick(static_cast<std::size_t>(m));
    for (auto& p : pick) p = rng.uniform_int(n);
    std::vector<std::int64_t> seg(static_cast<std::size_t>(m));
    for (auto& s : seg) s = rng.uniform_int(2);
    seg[0] = 0;

    using Builder = std::function<TensorPtr()>;
    std::vector<std::pair<Builder, std::vector<TensorPtr>>> ops = {
        {[&] { return weighted_sum(matmul(w1, w2)); }, {w1, w2}},
        {[&] { return weighted_sum(add(a, b)); }, {a, b}},
        {[&] { return weighted_sum(add_rowwise(a, bias)); }, {a, bias}},
        {[&] { return weighted_sum(sub(a, b)); }, {a, b}},
        {[&] { return weighted_sum(mul(a, b)); }, {a, b}},
        {[&] { return weighted_sum(scale(a, -1.7)); }, {a}},
        {[&] { return weighted_sum(scale_rows(a, rw)); }, {a}},
        {[&] { return weighted_sum(concat_cols({a, b})); }, {a, b}},
        {[&] { return weighted_sum(concat_rows({a, b})); }, {a, b}},
        {[&] { return weighted_sum(repeat_rows(rowvec, 3)); }, {rowvec}},
        {[&] { return weighted_sum(take_row(a, m - 1)); }, {a}},
        {[&] { return weighted_sum(gather_rows(a, gidx)); }, {a}},
        {[&] { return weighted_sum(gather_cols(rowvec, {n - 1, 0})); }, {rowvec}},
        {[&] { return weighted_sum(select_per_row(a, pick)); }, {a}},
        {[&] { return weighted_sum(segment_mean_rows(a, seg, 2)); }, {a}},
        {[&] { return weighted_sum(exp(scale(a, 0.3))); }, {a}},
        {[&] { return weighted_sum(log(add(square(a), Tensor::full(m, n, 0.5)))); },
         {a}},
        {[&] { return weighted_sum(sigmoid(a)); }, {a}},
        {[&] { return weighted_sum(tanh(a)); }, {a}},
        {[&] { return weighted_sum(square(a)); }, {a}},
        {[&] { return weighted_sum(clamp(a, -0.4, 0.4)); }, {a}},
        {[&] { return weighted_sum(normal_cdf(a)); }, {a}},
        {[&] { return weighted_sum(softmax_rows(a)); }, {a}},
        {[&] { return weighted_sum(log_softmax_rows(a)); }, {a}},
        {[&] { return weighted_sum(logsumexp_rows(a)); }, {a}},
        {[&] { return weighted_sum(colwise_max(a)); }, {a}},
        {[&] { return weighted_sum(lastdim_sum(a)); }, {a}},
        {[&] { return sum_all(mul(a, b)); }, {a, b}},
        {[&] { return mean_all(square(a)); }, {a}},
    };
    for (auto& [builder, inputs] : ops) {
      check_grads(builder, inputs);
      ++cases;
    }
  }
  CHECK(cases >= 100);
}

TEST_CASE("gru zero params zero state gives zero") {
  ParamStore store(1);
  GruCell gru(store, "gru", 4, 4);
  for (auto& p : store.all()) std::fill(p->value->data.begin(), p->value->data.end(), 0.0);
  auto y = gru.forward(Tensor::zeros(1, 4), Tensor::zeros(1, 4));
  for (double v : y->data) CHECK(v == 0.0);
}

TEST_CASE("gru output bounded by one") {
  ParamStore store(11);
  GruCell gru(store, "gru", 6, 6);
  Rng rng(99);
  for (int rep = 0; rep < 1000; ++rep) {
    NoGradGuard ng;
    auto x = random_leaf(1, 6, rng, 3.0);
    std::vector<double> h(6);
    for (auto& v : h) v = rng.uniform() * 2.0 - 1.0;  // valid hidden state range
    auto y = gru.forward(x, Tensor::row(h));
    for (double v : y->data) CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("gru gradient wrt input matches finite differences") {
  ParamStore store(5);
  GruCell gru(store, "gru", 5, 5);
  Rng rng(17);
  auto x = random_leaf(1, 5, rng);
  auto h = random_leaf(1, 5, rng, 0.5);
  check_grads([&] { return sum_all(square(gru.forward(x, h))); }, {x, h});
}

TEST_CASE("gru width mismatch") {
  ParamStore store(2);
  GruCell gru(store, "gru", 4, 4);
  CHECK_THROWS_AS(gru.forward(Tensor::zeros(1, 3), Tensor::zeros(1, 4)),
                  std::runtime_error);
}

TEST_CASE("adamw first step direction opposes gradient") {
  ParamStore store(3);
  auto w = store.create("w", 1, 3, Init::kGaussianFanIn);
  const std::vector<double> before = w->data;
  w->grad = {0.5, -2.0, 1e-3};
  AdamW opt(store.all(), {.lr = 0.01, .weight_decay = 0.0});
  opt.step();
  for (int i = 0; i < 3; ++i) {
    const double delta = w->data[i] - before[i];
    CHECK(delta * w->grad[i] < 0.0);
  }
}

TEST_CASE("adamw lr zero is identity") {
  ParamStore store(4);
  auto w = store.create("w", 2, 2, Init::kGaussianFanIn);
  const std::vector<double> before = w->data;
  w->grad = {1, 2, 3, 4};
  AdamW opt(store.all(), {.lr = 0.0, .weight_decay = 0.123});
  opt.step();
  CHECK(w->data == before);
}

TEST_CASE("adamw decay is decoupled") {
  // With zero gradient the parameter still shrinks by exactly lr*wd*theta.
  ParamStore store(6);
  auto w = store.create("w", 1, 2, Init::kGaussianFanIn);
  const std::vector<double> before = w->data;
  w->grad = {0.0, 0.0};
  AdamW opt(store.all(), {.lr = 0.1, .weight_decay = 0.5});
  opt.step();
  for (int i = 0; i < 2; ++i) {
    CHECK(w->data[i] == doctest::Approx(before[i] * (1.0 - 0.1 * 0.5)).epsilon(1e-15));
  }
}

TEST_CASE("adamw runs are bit identical under the same seed") {
  auto run = [](std::uint64_t seed) {
    ParamStore store(seed);
    auto w = store.create("w", 4, 4, Init::kGaussianFanIn);
    AdamW opt(store.all(), {.lr = 1e-2, .weight_decay = 5e-5});
    for (int it = 0; it < 25; ++it) {
      opt.zero_grad();
      backward(sum_all(square(sub(w, Tensor::full(4, 4, 0.3)))));
      opt.step();
    }
    return w->data;
  };
  CHECK(run(123) == run(123));
}

TEST_CASE("grad_check quadratic and constant") {
  auto x = leaf({1, 1}, {3.0});
  CHECK(grad_check([&] { return mul(x, x); }, {x}) < 1e-6);
  auto c = Tensor::scalar(7.0);
  CHECK(grad_check([&] { return add(mul(x, Tensor::scalar(0.0)), c); }, {x}) == 0.0);
}
