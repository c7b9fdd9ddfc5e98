#include "doctest.h"

#include <functional>

#include "inbet/autodiff.hpp"
#include "test_util.hpp"

using namespace inbet;
using ad::Tape;
using ad::Var;

namespace {

// Builds loss = sum(op(inputs) .* weights) and compares the tape gradient of
// every input with central differences.
void check_op(const std::vector<Mat>& inputs,
              const std::function<Var(Tape&, const std::vector<Var>&)>& op, double tol = 1e-7) {
  Rng rng(11);
  Mat weights;
  auto loss = [&](const std::vector<Mat>& xs, std::vector<Mat>* grads) {
    Tape t;
    std::vector<Var> vs;
    for (const Mat& x : xs) vs.push_back(t.parameter(x));
    Var y = op(t, vs);
    if (weights.empty()) weights = testutil::random_mat(rng, t.value(y).rows(), t.value(y).cols());
    Var l = t.sum(t.mul(y, t.constant(weights)));
    if (grads) {
      t.backward(l);
      for (Var v : vs) grads->push_back(t.grad(v));
    }
    return t.scalar(l);
  };
  std::vector<Mat> grads;
  loss(inputs, &grads);
  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Mat> up = inputs, down = inputs;
      up[k][i] += h;
      down[k][i] -= h;
      const double numeric = (loss(up, nullptr) - loss(down, nullptr)) / (2 * h);
      CHECK(grads[k][i] == doctest::Approx(numeric).epsilon(tol).scale(1.0));
    }
}

}  // namespace

TEST_CASE("elementwise and matrix ops have correct gradients") {
  Rng rng(12);
  const Mat a = testutil::random_mat(rng, 3, 4), b = testutil::random_mat(rng, 3, 4);
  const Mat c = testutil::random_mat(rng, 4, 2), row = testutil::random_mat(rng, 1, 4);
  const Mat pos = testutil::random_mat(rng, 3, 4, 0.2, 2.0);
  check_op({a, b}, [](Tape& t, auto& v) { return t.add(v[0], v[1]); });
  check_op({a, b}, [](Tape& t, auto& v) { return t.sub(v[0], v[1]); });
  check_op({a, b}, [](Tape& t, auto& v) { return t.mul(v[0], v[1]); });
  check_op({a, row}, [](Tape& t, auto& v) { return t.add_row(v[0], v[1]); });
  check_op({a}, [](Tape& t, auto& v) { return t.scale(v[0], -2.5); });
  check_op({a}, [](Tape& t, auto& v) { return t.affine(v[0], 0.5, 3.0); });
  check_op({a, c}, [](Tape& t, auto& v) { return t.matmul(v[0], v[1]); });
  check_op({a, b}, [](Tape& t, auto& v) { return t.matmul_nt(v[0], v[1]); });
  check_op({a}, [](Tape& t, auto& v) { return t.transpose(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.relu(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.sigmoid(v[0]); });
  check_op({pos}, [](Tape& t, auto& v) { return t.log(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.exp(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.abs(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.clamp(v[0], -0.5, 0.5); });
  check_op({a}, [](Tape& t, auto& v) { return t.row_softmax(v[0]); });
  check_op({a}, [](Tape& t, auto& v) { return t.mean(v[0]); });
  check_op({a}, [](Tape& t, auto& v) {
    return t.gather_blocks(v[0], {2, -1, 0, 0, 1, 2}, 2);
  });
  check_op({a}, [](Tape& t, auto& v) { return t.scale_rows(v[0], {1.0, 0.0, -2.0}); });
  check_op({a}, [](Tape& t, auto& v) { return t.gather_elements(v[0], {{0, 1}, {2, 3}, {0, 1}}); });
}

TEST_CASE("log_sinkhorn gradient matches finite differences for scores and dustbin") {
  Rng rng(13);
  for (auto [m, n] : {std::pair{3, 4}, {5, 2}, {1, 1}}) {
    const Mat s = testutil::random_mat(rng, m, n, -2, 2);
    const Mat alpha(1, 1, 0.7);
    check_op({s, alpha}, [](Tape& t, auto& v) { return t.log_sinkhorn(v[0], v[1], 15); }, 1e-6);
  }
}

TEST_CASE("gather_blocks lays out blocks side by side with zero fill") {
  Tape t;
  Var a = t.constant(Mat::from_rows({{1, 2}, {3, 4}}));
  const Mat& g = t.value(t.gather_blocks(a, {1, -1, 0, 1}, 2));
  CHECK(g == Mat::from_rows({{3, 4, 0, 0}, {1, 2, 3, 4}}));
}

TEST_CASE("parameters not reaching the output get zero gradient") {
  Tape t;
  Var used = t.parameter(Mat(2, 2, 1.0));
  Var unused = t.parameter(Mat(3, 1, 1.0));
  Var l = t.sum(t.mul(used, used));
  t.backward(l);
  CHECK(t.grad(unused) == Mat(3, 1, 0.0));
  CHECK(t.grad(used) == Mat(2, 2, 2.0));
}

TEST_CASE("constants record no backward work") {
  Tape t;
  Var a = t.constant(Mat(2, 2, 1.0));
  Var b = t.relu(t.matmul(a, a));
  CHECK_FALSE(t.requires_grad(b));
}
