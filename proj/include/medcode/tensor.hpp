// Copyright 2026 The medcode Authors.
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

// Dense reverse-mode autodiff over Eigen matrices.
//
// Every tensor in the library is a 2-D row-major matrix. Vectors are 1 x n
// rows; scalars are 1 x 1. Higher-rank weights (the k x d x f convolution
// bank) are stored flattened as (k*d) x f.
//
// A Tape records forward operations in execution order. Each recorded node
// owns its value (or views a Parameter's value) and an optional closure that
// pushes its output gradient into its inputs. Tapes are single-threaded.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "medcode/random.hpp"

namespace medcode {

template <typename Scalar>
using Matrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// A learned array that outlives any single tape.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  /// Frozen parameters never receive gradient (static embeddings).
  bool frozen = false;
  /// Distance from the classifier head; drives layer-wise learning rates.
  int depth = 0;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1 x 1 node.
  Scalar item() const;
  bool requires_grad() const;

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  /// training enables dropout; grad_enabled=false records values only
  /// (parameters become constants, no closures are kept).
  explicit Tape(bool training = false, bool grad_enabled = true,
                std::uint64_t seed = 0);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Matrix<Scalar> value);
  Var<Scalar> parameter(Parameter<Scalar>& param);

  /// Appends an op result. Throws NumericError if value has NaN/Inf.
  Var<Scalar> record(const char* op, Matrix<Scalar> value,
                     std::initializer_list<Var<Scalar>> inputs,
                     BackwardFn backward);

  /// Reverse sweep from a 1 x 1 loss. Gradients of parameter leaves are
  /// added into Parameter::grad, so repeated calls accumulate.
  void backward(Var<Scalar> loss);

  const Matrix<Scalar>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix<Scalar>& grad(std::size_t id);
  /// Gradient of a node after backward(); empty if none flowed into it.
  const Matrix<Scalar>& grad_of(Var<Scalar> v) const {
    return nodes_[v.id()].grad;
  }

  bool training() const { return training_; }
  bool grad_enabled() const { return grad_enabled_; }
  Rng& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<Scalar> owned;
    const Matrix<Scalar>* view = nullptr;
    Matrix<Scalar> grad;
    Parameter<Scalar>* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool training_;
  bool grad_enabled_;
  Rng rng_;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
  return tape_->value(id_);
}

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  return value()(0, 0);
}

template <typename Scalar>
bool Var<Scalar>::requires_grad() const {
  return tape_->requires_grad(id_);
}

std::string shape_string(Index rows, Index cols);

template <typename Scalar>
std::string shape_string(const Matrix<Scalar>& m) {
  return shape_string(m.rows(), m.cols());
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace medcode
