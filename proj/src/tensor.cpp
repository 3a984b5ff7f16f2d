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

#include "ndlp/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace ndlp {

Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Array values, bool requires_grad)
    : node_(std::make_shared<detail::Node<Scalar>>()) {
  for (Index e : shape) NDLP_CHECK_SHAPE(e > 0, "extents must be positive, got ", to_string(shape));
  NDLP_CHECK_SHAPE(numel(shape) == values.size(), "shape ", to_string(shape), " does not match ",
                   values.size(), " values");
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Scalar(0), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::full(Shape shape, Scalar value, bool requires_grad) {
  const Index n = numel(shape);
  return Tensor(std::move(shape), Array::Constant(n, value), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from(Shape shape, std::initializer_list<Scalar> values) {
  Array a(static_cast<Index>(values.size()));
  std::copy(values.begin(), values.end(), a.data());
  return Tensor(std::move(shape), std::move(a));
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::scalar(Scalar value) {
  return full({1}, value);
}

template <typename Scalar>
Index Tensor<Scalar>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  NDLP_CHECK_SHAPE(axis >= 0 && axis < r, "axis ", axis, " out of range for rank ", r);
  return node_->shape[axis];
}

template <typename Scalar>
typename Tensor<Scalar>::Array& Tensor<Scalar>::mutable_values() {
  NDLP_CHECK(node_->leaf, "mutable_values() on a non-leaf tensor");
  return node_->values;
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  NDLP_CHECK_SHAPE(size() == 1, "item() needs a single-element tensor, got ", to_string(shape()));
  return node_->values[0];
}

template <typename Scalar>
Scalar Tensor<Scalar>::at(Index c, Index h, Index w) const {
  NDLP_CHECK_SHAPE(rank() == 3, "at(c,h,w) needs rank 3");
  const auto& s = node_->shape;
  return node_->values[(c * s[1] + h) * s[2] + w];
}

template <typename Scalar>
Tensor<Scalar>& Tensor<Scalar>::set_requires_grad(bool on) {
  NDLP_CHECK(node_->leaf, "requires_grad can only be set on leaves");
  node_->requires_grad = on;
  return *this;
}

template <typename Scalar>
const typename Tensor<Scalar>::Array& Tensor<Scalar>::grad() const {
  NDLP_CHECK(has_grad(), "tensor has no gradient");
  return node_->grad;
}

template <typename Scalar>
typename Tensor<Scalar>::Array& Tensor<Scalar>::mutable_grad() {
  if (node_->grad.size() == 0) node_->grad = Array::Zero(node_->values.size());
  return node_->grad;
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::detach() const {
  return Tensor(node_->shape, node_->values);
}

// Tape ----------------------------------------------------------------------

namespace {
template <typename Scalar>
Tape<Scalar>*& active_tape() {
  thread_local Tape<Scalar>* tape = nullptr;
  return tape;
}
}  // namespace

template <typename Scalar>
Tape<Scalar>::Tape() : previous_(active_tape<Scalar>()) {
  active_tape<Scalar>() = this;
}

template <typename Scalar>
Tape<Scalar>::~Tape() {
  active_tape<Scalar>() = previous_;
}

template <typename Scalar>
Tape<Scalar>* Tape<Scalar>::current() {
  return active_tape<Scalar>();
}

template <typename Scalar>
void Tape<Scalar>::set_current(Tape* tape) {
  active_tape<Scalar>() = tape;
}

template <typename Scalar>
void Tape<Scalar>::record(std::vector<detail::NodePtr<Scalar>> inputs,
                          detail::NodePtr<Scalar> output, BackwardFn fn) {
  if (consumed_) throw TapeError("tape already ran backward; reset() before recording");
  records_.push_back({std::move(inputs), std::move(output), std::move(fn)});
}

template <typename Scalar>
void Tape<Scalar>::backward(const Tensor<Scalar>& loss) {
  if (consumed_) throw TapeError("backward called twice on the same tape");
  if (records_.empty()) throw TapeError("backward on an empty tape");
  NDLP_CHECK_AS(TapeError, loss.size() == 1, "loss must be scalar, got shape ",
                to_string(loss.shape()));
  NDLP_CHECK_AS(TapeError, loss.requires_grad(), "loss does not depend on any recorded op");
  consumed_ = true;

  auto& seed = loss.node()->grad;
  if (seed.size() == 0) seed = Array::Zero(1);
  seed[0] += Scalar(1);

  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    const auto& g = it->output->grad;
    if (g.size() == 0) continue;
    it->fn(g);
  }
}

template <typename Scalar>
void Tape<Scalar>::reset() {
  records_.clear();
  consumed_ = false;
}

// Op construction -----------------------------------------------------------

template <typename Scalar>
bool will_record(std::span<const Tensor<Scalar>> inputs) {
  if (Tape<Scalar>::current() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<Scalar>& t) { return t.defined() && t.requires_grad(); });
}

template <typename Scalar>
Tensor<Scalar> make_op(std::string_view name, Shape shape, typename Tensor<Scalar>::Array values,
                       std::vector<Tensor<Scalar>> inputs,
                       typename Tape<Scalar>::BackwardFn backward) {
  if (!values.allFinite()) {
    throw NonFiniteError(std::string(name) + ": produced a non-finite value");
  }
  Tensor<Scalar> out(std::move(shape), std::move(values));
  if (will_record<Scalar>(inputs)) {
    auto node = out.node();
    node->requires_grad = true;
    node->leaf = false;
    std::vector<detail::NodePtr<Scalar>> parents;
    parents.reserve(inputs.size());
    for (const auto& t : inputs)
      if (t.defined()) parents.push_back(t.node());
    Tape<Scalar>::current()->record(std::move(parents), node, std::move(backward));
  }
  return out;
}

template <typename Scalar>
void accumulate_grad(const Tensor<Scalar>& t, const typename Tensor<Scalar>::Array& delta) {
  if (!t.defined() || !t.requires_grad()) return;
  auto& g = t.node()->grad;
  if (g.size() == 0) {
    g = delta;
  } else {
    g += delta;
  }
}

#define NDLP_INSTANTIATE(S)                                                                   \
  template class Tensor<S>;                                                                   \
  template class Tape<S>;                                                                     \
  template bool will_record<S>(std::span<const Tensor<S>>);                                  \
  template Tensor<S> make_op<S>(std::string_view, Shape, typename Tensor<S>::Array,          \
                                std::vector<Tensor<S>>, typename Tape<S>::BackwardFn);        \
  template void accumulate_grad<S>(const Tensor<S>&, const typename Tensor<S>::Array&);

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
