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

#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ndlp/tensor.hpp"

namespace ndlp {

enum class Init { kKaiming, kZeros, kOnes };

/// Ordered, named collection of trainable leaves.
template <typename S>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor<S> tensor;
    Init init;
  };

  Tensor<S> add(std::string name, Shape shape, Init init) {
    NDLP_CHECK(find(name) == nullptr, "duplicate parameter '", name, "'");
    Tensor<S> t = Tensor<S>::zeros(std::move(shape), true);
    entries_.push_back({std::move(name), t, init});
    return t;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const Tensor<S>* find(std::string_view name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e.tensor;
    return nullptr;
  }

  const Tensor<S>& get(std::string_view name) const {
    const Tensor<S>* t = find(name);
    NDLP_CHECK(t != nullptr, "no parameter named '", name, "'");
    return *t;
  }

  /// Total number of scalar parameters.
  Index count() const {
    Index n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  /// Kaiming-uniform on fan-in for weights, zeros for biases, ones for scales.
  void initialize(std::mt19937_64& rng) {
    for (auto& e : entries_) {
      auto& v = e.tensor.mutable_values();
      switch (e.init) {
        case Init::kZeros:
          v.setZero();
          break;
        case Init::kOnes:
          v.setOnes();
          break;
        case Init::kKaiming: {
          const Index fan_in = e.tensor.size() / e.tensor.dim(0);
          const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
          std::uniform_real_distribution<double> dist(-bound, bound);
          for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<S>(dist(rng));
          break;
        }
      }
    }
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  /// Copies every value from `other`, matching by name and shape.
  template <typename T>
  void assign_from(const ParameterSet<T>& other) {
    NDLP_CHECK(other.size() == size(), "parameter sets differ in size");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& src = other.entries()[i];
      NDLP_CHECK(src.name == entries_[i].name && src.tensor.shape() == entries_[i].tensor.shape(),
                 "parameter mismatch at '", entries_[i].name, "'");
      entries_[i].tensor.mutable_values() = src.tensor.values().template cast<S>();
    }
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace ndlp
