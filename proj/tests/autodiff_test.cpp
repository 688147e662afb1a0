#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "prn/autodiff.hpp"
#include "prn/errors.hpp"
#include "prn/model.hpp"
#include "prn/rng.hpp"

using namespace prn;
using ad::Tape;
using ad::VarId;

namespace {

using ScalarFn = std::function<VarId(Tape&, VarId)>;  // param node -> loss node

double eval_at(const std::vector<double>& p, const ScalarFn& f) {
  Tape tape;
  VarId x = tape.param(p, nullptr);
  return tape.scalar_value(f(tape, x));
}

// Central finite differences against one reverse pass.
void check_gradient(std::vector<double> p, const ScalarFn& f, double tol = 1e-6) {
  std::vector<double> grad(p.size(), 0.0);
  {
    Tape tape;
    VarId x = tape.param(p, grad.data());
    tape.backward(f(tape, x));
    tape.flush_grads();
  }
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<double> lo = p, hi = p;
    lo[i] -= h;
    hi[i] += h;
    double fd = (eval_at(hi, f) - eval_at(lo, f)) / (2 * h);
    CHECK(std::abs(grad[i] - fd) <=
          tol * std::max({1.0, std::abs(grad[i]), std::abs(fd)}));
  }
}

std::vector<double> ramp(int n, double lo, double hi) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / std::max(1, n - 1);
  return v;
}

}  // namespace

TEST_CASE("affine matches the plain forward pass bit for bit") {
  Ffnn f;
  f.w1 = Mat::zeros(3, 4);
  f.b1 = {0.1, -0.2, 0.3};
  f.w2 = Mat::zeros(3, 3);
  f.b2 = {-0.05, 0.0, 0.15};
  Rng rng(5);
  for (double& v : f.w1.a) v = rng.uniform(-1.0, 1.0);
  for (double& v : f.w2.a) v = rng.uniform(-1.0, 1.0);
  std::vector<double> x = {0.3, -0.7, 1.2, 0.05};

  std::vector<double> plain = ffnn_hidden(f, x);

  Tape tape;
  VarId xin = tape.constant(x);
  VarId h1 = tape.relu(tape.affine(tape.param(f.w1.a, nullptr), 3, 4, xin,
                                   tape.param(f.b1, nullptr)));
  VarId h2 = tape.relu(tape.affine(tape.param(f.w2.a, nullptr), 3, 3, h1,
                                   tape.param(f.b2, nullptr)));
  REQUIRE(tape.value(h2).size() == plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(tape.value(h2)[i] == plain[i]);  // exact
  }
}

TEST_CASE("elementwise and reduction ops differentiate correctly") {
  check_gradient(ramp(6, -1.1, 1.3), [](Tape& t, VarId x) {
    VarId w = t.constant({0.3, -0.4, 0.9, 1.1, -0.2, 0.6});
    return t.dot(t.hadamard(x, w), t.constant({1, 2, 3, 4, 5, 6}));
  });
  check_gradient(ramp(4, -0.8, 0.9), [](Tape& t, VarId x) {
    return t.dot(t.sigmoid(x), t.constant({1, -2, 0.5, 1.5}));
  });
  // relu probed away from the kink
  check_gradient({-0.9, -0.4, 0.3, 1.2}, [](Tape& t, VarId x) {
    return t.dot(t.relu(x), t.constant({1, 1, 2, -1}));
  });
  check_gradient(ramp(5, -1.0, 1.0), [](Tape& t, VarId x) {
    return t.scale(t.dot(x, x), 0.37);
  });
  check_gradient(ramp(4, 0.2, 1.4), [](Tape& t, VarId x) {
    VarId y = t.constant({0.4, 0.4, 0.4, 0.4});
    return t.dot(t.sub(x, y), t.add(x, y));
  });
}

TEST_CASE("affine differentiates in weights, input, and bias") {
  // p packs W (2x3) at [0,6), x at [6,9), b at [9,11)
  std::vector<double> p = {0.3, -0.2, 0.7, 0.1, 0.9, -0.5, 0.2, -0.4, 0.6, 1.0, -1.2};
  check_gradient(p, [](Tape& t, VarId all) {
    VarId w = t.concat({t.row(all, 0, 3), t.row(all, 1, 3)});
    VarId x = t.row(all, 2, 3);
    VarId b = t.concat({t.row(all, 9, 1), t.row(all, 10, 1)});
    return t.dot(t.affine(w, 2, 3, x, b), t.constant({1.0, -2.0}));
  });
}

TEST_CASE("softmax and logsumexp differentiate and normalize") {
  check_gradient(ramp(5, -2.0, 2.0), [](Tape& t, VarId x) {
    return t.dot(t.softmax(x), t.constant({0.5, -1.0, 2.0, 0.0, 1.0}));
  });
  check_gradient(ramp(5, -2.0, 2.0),
                 [](Tape& t, VarId x) { return t.logsumexp(x); });
  check_gradient(ramp(6, -1.5, 2.5), [](Tape& t, VarId x) {
    return t.logsumexp_subset(x, {0, 2, 5});
  });

  Tape tape;
  VarId p = tape.softmax(tape.constant({3.0, 1.0, 0.2, -5.0}));
  double sum = 0.0;
  for (double v : tape.value(p)) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bce_with_logit matches softplus arithmetic and its derivative") {
  for (double label : {0.0, 1.0}) {
    for (double s : {-30.0, -2.0, 0.0, 1.5, 40.0}) {
      Tape tape;
      std::vector<double> sv = {s};
      std::vector<double> grad = {0.0};
      VarId sp = tape.param(sv, grad.data());
      VarId loss = tape.bce_with_logit(sp, label);
      double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
      CHECK(tape.scalar_value(loss) == doctest::Approx(softplus - label * s));
      tape.backward(loss);
      tape.flush_grads();
      double sig = 1.0 / (1.0 + std::exp(-s));
      CHECK(grad[0] == doctest::Approx(sig - label).epsilon(1e-12));
    }
  }
  // sigmoid(0) = 0.5 -> loss ln 2 for either label
  Tape tape;
  VarId z = tape.scalar(0.0);
  CHECK(tape.scalar_value(tape.bce_with_logit(z, 1.0)) ==
        doctest::Approx(std::log(2.0)));
  CHECK(tape.scalar_value(tape.bce_with_logit(z, 0.0)) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("weighted rows and weighted sums route gradients to the weights") {
  const double rows[6] = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // 3 x 2
  check_gradient({0.2, 0.5, 0.3}, [&](Tape& t, VarId w) {
    return t.dot(t.weighted_rows(rows, 3, 2, w), t.constant({1.0, -1.0}));
  });

  check_gradient(ramp(8, -1.0, 1.0), [](Tape& t, VarId x) {
    VarId a = t.row(x, 0, 4);
    VarId b = t.row(x, 1, 4);
    VarId w = t.softmax(t.stack({t.dot(a, b), t.scalar(0.3)}));
    return t.dot(t.weighted_sum(w, {a, b}), t.constant({1, 2, -1, 0.5}));
  });
}

TEST_CASE("stack, sum, and concat keep shapes and gradients aligned") {
  Tape tape;
  VarId a = tape.scalar(1.5);
  VarId b = tape.scalar(-0.5);
  VarId stacked = tape.stack({a, b, a});
  CHECK(tape.value(stacked) == ad::Vec{1.5, -0.5, 1.5});
  CHECK(tape.scalar_value(tape.sum({a, b})) == 1.0);
  CHECK(tape.scalar_value(tape.sum({})) == 0.0);

  VarId c = tape.concat({stacked, tape.constant({7.0})});
  CHECK(tape.value(c).size() == 4);
  CHECK(tape.value(tape.row(c, 0, 2)) == ad::Vec{1.5, -0.5});

  check_gradient({0.4, -0.7, 1.1}, [](Tape& t, VarId x) {
    VarId s0 = t.dot(x, t.constant({1, 0, 0}));
    VarId s1 = t.dot(x, t.constant({0, 1, 1}));
    return t.logsumexp(t.stack({s0, s1, t.scalar(0.0)}));
  });
}

TEST_CASE("dropout is a passthrough at rate zero and masks otherwise") {
  Tape tape;
  VarId x = tape.constant({1.0, 2.0, 3.0, 4.0});
  Rng rng(3);
  CHECK(tape.dropout(x, 0.0, rng) == x);  // same node

  std::vector<double> grad(4, 0.0);
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  Tape t2;
  VarId xp = t2.param(xs, grad.data());
  Rng rng2(11);
  VarId d = t2.dropout(xp, 0.5, rng2);
  std::vector<double> out = t2.value(d);  // copy: later pushes may reallocate
  int kept = 0;
  for (int i = 0; i < 4; ++i) {
    bool is_kept = out[i] != 0.0;
    kept += is_kept;
    CHECK(out[i] == (is_kept ? xs[i] / 0.5 : 0.0));
  }
  t2.backward(t2.dot(d, t2.constant({1, 1, 1, 1})));
  t2.flush_grads();
  for (int i = 0; i < 4; ++i) {
    CHECK(grad[i] == (out[i] != 0.0 ? 2.0 : 0.0));
  }
  CHECK(kept >= 1);  // seed 11 keeps something at rate 0.5

  CHECK_THROWS_AS(t2.dropout(xp, 1.0, rng2), InvalidParam);
}

TEST_CASE("gradient sinks accumulate across tapes") {
  std::vector<double> p = {2.0, -1.0};
  std::vector<double> grad = {0.0, 0.0};
  for (int rep = 0; rep < 3; ++rep) {
    Tape tape;
    VarId x = tape.param(p, grad.data());
    tape.backward(tape.dot(x, x));
    tape.flush_grads();
  }
  CHECK(grad[0] == doctest::Approx(3 * 2 * 2.0));
  CHECK(grad[1] == doctest::Approx(3 * 2 * -1.0));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape tape;
  VarId v = tape.constant({1.0, 2.0});
  CHECK_THROWS_AS(tape.backward(v), ShapeMismatch);
}
