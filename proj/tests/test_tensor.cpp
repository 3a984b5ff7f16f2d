// Copyright 2026 The NDLP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "ndlp/error.hpp"
#include "ndlp/gradcheck.hpp"
#include "ndlp/ops.hpp"
#include "ndlp/tensor.hpp"

using namespace ndlp;
using D = Tensor<double>;
using F = Tensor<float>;

TEST_CASE("tensor construction checks shape and count") {
  CHECK_THROWS_AS(F({2, 0}, F::Array::Zero(0)), ShapeError);
  CHECK_THROWS_AS(F({2, 3}, F::Array::Zero(5)), ShapeError);
  F t = F::from({2, 2}, {1, 2, 3, 4});
  CHECK(t.size() == 4);
  CHECK(t.dim(-1) == 2);
  CHECK(t.rank() == 2);
  CHECK(numel({3, 4, 5}) == 60);
  CHECK(to_string({3, 4}) == "[3x4]");
}

TEST_CASE("backward of sum gives ones") {
  D x = D::from({2, 3}, {1, 2, 3, 4, 5, 6});
  x.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(sum(x));
  CHECK((x.grad() == 1.0).all());
}

TEST_CASE("backward of sum of squares gives 2x") {
  D x = D::from({4}, {-1.5, 0, 2, 3});
  x.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(sum(mul(x, x)));
  CHECK(((x.grad() - 2.0 * x.values()).abs() < 1e-15).all());
}

TEST_CASE("second backward without reset is an error") {
  D x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape<double> tape;
  D loss = sum(x);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), TapeError);
  tape.reset();
  x.zero_grad();
  tape.backward(sum(scale(x, 3.0)));
  CHECK((x.grad() == 3.0).all());
}

TEST_CASE("backward rejects non-scalar loss and empty tape") {
  D x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  {
    Tape<double> tape;
    CHECK_THROWS_AS(tape.backward(scale(x, 2.0)), TapeError);
  }
  {
    Tape<double> tape;
    CHECK_THROWS_AS(tape.backward(D::scalar(1.0)), TapeError);
  }
}

TEST_CASE("gradient accumulates across branches") {
  std::mt19937_64 rng(3);
  D x = testing::random_tensor<double>({2, 3, 3}, rng, -1, 1, true);
  D w = testing::random_tensor<double>({2, 2, 3, 3}, rng);

  auto branch_a = [&] { return sum(conv2d(x, w, {}, 1, Padding::zero(1))); };
  auto branch_b = [&] { return sum(gelu(x)); };

  D::Array ga, gb;
  {
    Tape<double> tape;
    tape.backward(branch_a());
    ga = x.grad();
  }
  x.zero_grad();
  {
    Tape<double> tape;
    tape.backward(branch_b());
    gb = x.grad();
  }
  x.zero_grad();
  {
    Tape<double> tape;
    tape.backward(add(branch_a(), branch_b()));
  }
  CHECK(((x.grad() - (ga + gb)).abs() < 1e-12).all());
}

TEST_CASE("non-finite values are reported") {
  F x = F::from({2}, {1.0f, std::numeric_limits<float>::infinity()});
  CHECK_THROWS_AS(relu(x), NonFiniteError);
  F big = F::from({1}, {3e38f});
  CHECK_THROWS_AS(scale(big, 10.0f), NonFiniteError);
}

TEST_CASE("no-grad scope records nothing") {
  D x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape<double> tape;
  {
    NoGradScope<double> off;
    D y = scale(x, 2.0);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(tape.size() == 0);
  D y = scale(x, 2.0);
  CHECK(y.requires_grad());
  CHECK(tape.size() == 1);
}

TEST_CASE("only leaves can be edited") {
  D x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape<double> tape;
  D y = scale(x, 2.0);
  CHECK_THROWS(y.mutable_values());
  CHECK_THROWS(y.set_requires_grad(false));
  D z = y.detach();
  CHECK(z.is_leaf());
  CHECK_FALSE(z.requires_grad());
}

TEST_CASE("grad_check accepts a linear op at machine precision") {
  std::mt19937_64 rng(1);
  D x = testing::random_tensor<double>({3, 4}, rng, -1, 1, true);
  auto r = grad_check([](const std::vector<D>& in) { return scale(in[0], 2.5); }, {x}, {"x"});
  CHECK(r.passed);
  CHECK(r.worst < 1e-8);
}

TEST_CASE("grad_check passes conv2d on a 2x4x4 input") {
  std::mt19937_64 rng(2);
  D x = testing::random_tensor<double>({2, 4, 4}, rng, -1, 1, true);
  D w = testing::random_tensor<double>({3, 2, 3, 3}, rng, -1, 1, true);
  auto r = grad_check(
      [](const std::vector<D>& in) { return sum(conv2d(in[0], in[1], {}, 1, Padding::zero(1))); },
      {x, w}, {"x", "w"});
  CHECK(r.passed);
}

TEST_CASE("grad_check passes a conv relu pool chain") {
  std::mt19937_64 rng(4);
  D x = testing::random_tensor<double>({2, 5, 5}, rng, -1, 1, true);
  D w = testing::random_tensor<double>({3, 2, 3, 3}, rng, -1, 1, true);
  auto r = grad_check(
      [](const std::vector<D>& in) {
        return sum(global_avg_pool(relu(conv2d(in[0], in[1], {}, 1, Padding::reflect(1)))));
      },
      {x, w}, {"x", "w"});
  CHECK(r.passed);
}

TEST_CASE("grad_check catches a backward that is off by a factor of two") {
  std::mt19937_64 rng(5);
  D x = testing::random_tensor<double>({6}, rng, -1, 1, true);
  auto broken = [](const std::vector<D>& in) {
    const D& a = in[0];
    return make_op<double>("broken_square", a.shape(), a.values().square(), {a},
                           [a](const D::Array& g) {
                             accumulate_grad<double>(a, 4.0 * a.values() * g);
                           });
  };
  auto r = grad_check(broken, {x}, {"x"});
  CHECK_FALSE(r.passed);
  CHECK(r.worst > 0.1);
}

TEST_CASE("registered gradient suite passes with at least three cases per op") {
  const auto cases = run_gradcheck_suite();
  std::map<std::string, int> per_op;
  for (const auto& c : cases) {
    INFO(c.op, " ", c.shape, " ", c.report.worst);
    CHECK(c.report.passed);
    ++per_op[c.op];
  }
  for (const auto& [op, n] : per_op) {
    INFO(op);
    CHECK(n >= 3);
  }
}
