#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lcfuse/gradcheck.hpp"
#include "lcfuse/tensor.hpp"

using namespace lcfuse;

namespace {

Grid<double> grid_of(std::initializer_list<double> vals, int h, int w, int c) {
  Grid<double> g = Grid<double>::zeros(h, w, c);
  long k = 0;
  for (double v : vals) g.data.data()[k++] = v;
  REQUIRE(k == g.data.size());
  return g;
}

}  // namespace

TEST_CASE("conv1x1 forward") {
  Param<double> w("w", 2, 2), b("b", 1, 2);
  w.value << 1, 0, 0, 1;  // identity

  Grid<double> in = grid_of({3, 4, -1, 2, 0, 5}, 1, 3, 2);
  Value<double> out = conv1x1(make_input(in), &w, &b);
  CHECK((out.val().data - in.data).norm() == doctest::Approx(0.0));

  // 1x1x2 input (3,4), weight [[1],[1]], bias [0] -> 7
  Param<double> w2("w2", 2, 1), b2("b2", 1, 1);
  w2.value << 1, 1;
  Value<double> out2 = conv1x1(make_input(grid_of({3, 4}, 1, 1, 2)), &w2, &b2);
  CHECK(out2.scalar_value() == doctest::Approx(7.0));
}

TEST_CASE("conv1x1 weight gradient equals per-channel input sums") {
  std::mt19937_64 rng(3);
  Grid<double> in = random_grid<double>(3, 4, 2, rng);
  Param<double> w("w", 2, 3), b("b", 1, 3);
  w.value.setRandom();
  Value<double> loss = sum(conv1x1(make_input(in), &w, &b));
  backward(loss);
  // d(sum out)/dw[i][o] = sum over cells of in[.,i]
  for (int i = 0; i < 2; ++i) {
    for (int o = 0; o < 3; ++o) {
      CHECK(w.grad(i, o) == doctest::Approx(in.data.col(i).sum()));
    }
  }
  for (int o = 0; o < 3; ++o) CHECK(b.grad(0, o) == doctest::Approx(12.0));
}

TEST_CASE("elementwise basics") {
  Grid<double> x = grid_of({0.0}, 1, 1, 1);
  CHECK(sigmoid(make_input(x)).scalar_value() == doctest::Approx(0.5));

  Grid<double> a = grid_of({3.0, 1.0}, 1, 2, 1);
  Grid<double> bg = grid_of({1.0, 1.0}, 1, 2, 1);
  CHECK(mse(make_input(a), make_input(bg)).scalar_value() == doctest::Approx(2.0));
  CHECK(mse(make_input(a), make_input(a)).scalar_value() == doctest::Approx(0.0));
  CHECK(l1(make_input(a), make_input(bg)).scalar_value() == doctest::Approx(1.0));

  CHECK_THROWS_AS(add(make_input(a), make_input(Grid<double>::zeros(2, 2, 1))), ShapeMismatch);
}

TEST_CASE("backward on sum gives ones; accumulation doubles") {
  Param<double> p("p", 6, 2);
  p.value.setRandom();
  const GridShape shape{2, 3, 2};
  {
    Value<double> loss = sum(from_param(&p, shape));
    backward(loss);
    CHECK((p.grad.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
  }
  {
    Value<double> loss = sum(from_param(&p, shape));
    backward(loss);  // second backward without zero_grads
    CHECK((p.grad.array() - 2.0).abs().maxCoeff() == doctest::Approx(0.0));
  }
  zero_grads<double>({&p});
  CHECK(p.grad.norm() == doctest::Approx(0.0));
}

TEST_CASE("concat then slice recovers inputs") {
  std::mt19937_64 rng(5);
  Grid<double> a = random_grid<double>(2, 3, 2, rng);
  Grid<double> b = random_grid<double>(2, 3, 4, rng);
  Value<double> cat = concat_channels(make_input(a), make_input(b));
  CHECK(cat.shape().c == 6);
  CHECK((slice_channels(cat, 0, 2).val().data - a.data).norm() == doctest::Approx(0.0));
  CHECK((slice_channels(cat, 2, 4).val().data - b.data).norm() == doctest::Approx(0.0));
}

TEST_CASE("sgd momentum recurrence") {
  Param<float> p("p", 1, 1);
  p.value(0, 0) = 1.0f;

  SUBCASE("lr 1, momentum 0 subtracts the gradient") {
    p.grad(0, 0) = 0.25f;
    SgdOptimizer<float> opt(1.0f, 0.0f);
    opt.step({&p});
    CHECK(p.value(0, 0) == doctest::Approx(0.75));
  }
  SUBCASE("zero grad leaves params unchanged") {
    SgdOptimizer<float> opt(0.5f, 0.9f);
    opt.step({&p});
    CHECK(p.value(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("two steps with momentum match the hand recurrence") {
    SgdOptimizer<float> opt(0.1f, 0.9f);
    p.grad(0, 0) = 1.0f;
    opt.step({&p});  // v=1, p = 1 - 0.1 = 0.9
    CHECK(p.value(0, 0) == doctest::Approx(0.9));
    p.grad(0, 0) = 2.0f;
    opt.step({&p});  // v = 0.9 + 2 = 2.9, p = 0.9 - 0.29 = 0.61
    CHECK(p.value(0, 0) == doctest::Approx(0.61));
  }
}

TEST_CASE("determinism: same inputs give bitwise identical outputs") {
  std::mt19937_64 rng(9);
  Grid<float> in = random_grid<float>(4, 4, 3, rng);
  Param<float> w("w", 3, 5), b("b", 1, 5);
  w.value.setRandom();
  b.value.setRandom();
  const auto run = [&] {
    Value<float> v = relu(conv1x1(make_input(in), &w, &b));
    return Grid<float>(v.val());
  };
  const Grid<float> a = run();
  const Grid<float> c = run();
  CHECK(std::memcmp(a.data.data(), c.data.data(), sizeof(float) * static_cast<std::size_t>(a.data.size())) == 0);
}

namespace {

// Shift random values away from relu kinks so central differences stay valid.
void nudge_from_zero(Mat<double>& m, double eps = 0.05) {
  for (long k = 0; k < m.size(); ++k) {
    double& v = m.data()[k];
    if (std::abs(v) < eps) v = v < 0 ? v - eps : v + eps;
  }
}

}  // namespace

TEST_CASE("finite differences: every op") {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    std::uniform_int_distribution<int> dim(1, 5);
    const int h = dim(rng), w = dim(rng), c = dim(rng);
    Param<double> x("x", h * w, c), y("y", h * w, c);
    x.value = random_grid<double>(h, w, c, rng).data;
    y.value = random_grid<double>(h, w, c, rng).data;
    nudge_from_zero(x.value);
    nudge_from_zero(y.value);
    const GridShape shape{h, w, c};

    Param<double> cw("cw", c, dim(rng)), cb("cb", 1, static_cast<int>(cw.value.cols()));
    cw.value.setRandom();
    cb.value.setRandom();

    Grid<double> target = random_grid<double>(h, w, c, rng);
    Grid<double> target01 = Grid<double>::zeros(h, w, 1);
    Grid<double> mask = Grid<double>::zeros(h, w, 1);
    for (int cell = 0; cell < h * w; ++cell) {
      target01.data(cell, 0) = (cell % 3 == 0) ? 1.0 : 0.0;
      mask.data(cell, 0) = (cell % 2 == 0) ? 1.0 : 0.0;
    }

    const std::vector<std::function<Value<double>()>> builders = {
        [&] { return sum(conv1x1(from_param(&x, shape), &cw, &cb)); },
        [&] { return sum(relu(from_param(&x, shape))); },
        [&] { return sum(sigmoid(from_param(&x, shape))); },
        [&] { return sum(add(from_param(&x, shape), from_param(&y, shape))); },
        [&] { return sum(mul(from_param(&x, shape), from_param(&y, shape))); },
        [&] { return sum(scale(from_param(&x, shape), 1.7)); },
        [&] { return sum(concat_channels(from_param(&x, shape), from_param(&y, shape))); },
        [&] { return sum(slice_channels(from_param(&x, shape), 0, std::max(1, c - 1))); },
        [&] { return mse(from_param(&x, shape), from_param(&y, shape), Reduction::Mean); },
        [&] { return mse(from_param(&x, shape), from_param(&y, shape), Reduction::Sum); },
        [&] { return l1(from_param(&x, shape), from_param(&y, shape), Reduction::Mean); },
        [&] {
          return bce_logits(slice_channels(from_param(&x, shape), 0, 1), target01, 3.0);
        },
        [&] { return masked_l1(from_param(&x, shape), target, mask); },
    };
    for (const auto& build : builders) {
      const auto report = check_gradients(build, {&x, &y, &cw, &cb});
      CHECK_MESSAGE(report.ok(), report.worst_param, " rel err ", report.max_rel_err);
      worst = std::max(worst, report.max_rel_err);
    }
  }
  MESSAGE("worst relative error over all ops: ", worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("finite differences: composed conv-relu-mse graph") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const int h = 3, w = 2, cin = 3, mid = 4;
    Param<double> x("x", h * w, cin);
    x.value = random_grid<double>(h, w, cin, rng).data;
    nudge_from_zero(x.value);
    Param<double> w1("w1", cin, mid), b1("b1", 1, mid), w2("w2", mid, cin), b2("b2", 1, cin);
    w1.value.setRandom();
    b1.value.setRandom();
    w2.value.setRandom();
    b2.value.setRandom();
    Grid<double> target = random_grid<double>(h, w, cin, rng);
    const GridShape shape{h, w, cin};
    const auto build = [&] {
      Value<double> hmid = relu(conv1x1(from_param(&x, shape), &w1, &b1));
      Value<double> out = conv1x1(hmid, &w2, &b2);
      return mse(out, make_input(target), Reduction::Mean);
    };
    const auto report = check_gradients(build, {&x, &w1, &b1, &w2, &b2});
    CHECK_MESSAGE(report.max_rel_err < 1e-4, report.worst_param, " rel err ", report.max_rel_err);
  }
}

TEST_CASE("graph with shared subexpression accumulates correctly") {
  Param<double> p("p", 1, 1);
  p.value(0, 0) = 3.0;
  Value<double> leaf = from_param(&p, {1, 1, 1});
  Value<double> loss = sum(mul(leaf, leaf));  // d(p^2)/dp = 2p
  backward(loss);
  CHECK(p.grad(0, 0) == doctest::Approx(6.0));
}
