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

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ndlp/error.hpp"

namespace ndlp {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

template <typename Scalar>
struct Node {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Shape shape;
  Array values;
  Array grad;  // empty until something flows into it
  bool requires_grad = false;
  bool leaf = true;
};

template <typename Scalar>
using NodePtr = std::shared_ptr<Node<Scalar>>;

}  // namespace detail

/// Dense row-major tensor. Image data is laid out channels x height x width.
///
/// A Tensor is a cheap handle: copies share storage, so a parameter held by a
/// network and by an optimizer is the same object. Use clone() for a deep copy.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  Tensor(Shape shape, Array values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from(Shape shape, std::initializer_list<Scalar> values);
  static Tensor scalar(Scalar value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  /// Extent along `axis`; negative axes count from the back.
  Index dim(int axis) const;
  Index size() const { return node_->values.size(); }

  const Array& values() const { return node_->values; }
  /// Mutable access for leaves only (optimizer updates, initialization).
  Array& mutable_values();
  Scalar item() const;
  Scalar at(Index c, Index h, Index w) const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return node_->leaf; }

  bool has_grad() const { return node_ && node_->grad.size() > 0; }
  const Array& grad() const;
  /// Gradient buffer, allocated as zeros on first access.
  Array& mutable_grad();
  void zero_grad() { node_->grad.resize(0); }

  /// Leaf copy of the values with no gradient history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  const detail::NodePtr<Scalar>& node() const { return node_; }

 private:
  detail::NodePtr<Scalar> node_;
};

/// Ordered record of differentiable ops executed while the tape is active.
///
/// Constructing a Tape makes it the active tape for the calling thread until
/// it is destroyed; ops executed without an active tape record nothing.
template <typename Scalar>
class Tape {
 public:
  using Array = typename Tensor<Scalar>::Array;
  using BackwardFn = std::function<void(const Array& grad_out)>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  void record(std::vector<detail::NodePtr<Scalar>> inputs, detail::NodePtr<Scalar> output,
              BackwardFn fn);

  /// Populates d(loss)/d(leaf) for every leaf that requires grad.
  void backward(const Tensor<Scalar>& loss);

  /// Drops all records; the tape may then be reused for a new graph.
  void reset();

  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Record {
    std::vector<detail::NodePtr<Scalar>> inputs;
    detail::NodePtr<Scalar> output;
    BackwardFn fn;
  };

  template <typename>
  friend class NoGradScope;
  static void set_current(Tape* tape);

  std::vector<Record> records_;
  bool consumed_ = false;
  Tape* previous_ = nullptr;
};

/// Suspends recording on this thread for the lifetime of the scope.
template <typename Scalar>
class NoGradScope {
 public:
  NoGradScope() : saved_(Tape<Scalar>::current()) { Tape<Scalar>::set_current(nullptr); }
  ~NoGradScope() { Tape<Scalar>::set_current(saved_); }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<Scalar>* saved_;
};

/// True when an op on `inputs` would be recorded on the active tape.
template <typename Scalar>
bool will_record(std::span<const Tensor<Scalar>> inputs);

/// Builds an op result, checks it for non-finite values and, if recording,
/// registers `backward` on the active tape. `backward` receives the output
/// gradient and is expected to accumulate into its inputs via accumulate_grad.
template <typename Scalar>
Tensor<Scalar> make_op(std::string_view name, Shape shape,
                       typename Tensor<Scalar>::Array values,
                       std::vector<Tensor<Scalar>> inputs,
                       typename Tape<Scalar>::BackwardFn backward);

/// Adds `delta` into the gradient buffer of `t` when it requires grad.
template <typename Scalar>
void accumulate_grad(const Tensor<Scalar>& t, const typename Tensor<Scalar>::Array& delta);

}  // namespace ndlp
