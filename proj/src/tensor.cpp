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

#include "medcode/tensor.hpp"

#include <utility>

#include "medcode/errors.hpp"

namespace medcode {

std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Scalar>
Tape<Scalar>::Tape(bool training, bool grad_enabled, std::uint64_t seed)
    : training_(training), grad_enabled_(grad_enabled), rng_(seed) {
  nodes_.reserve(256);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::constant(Matrix<Scalar> value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::parameter(Parameter<Scalar>& param) {
  Node node;
  node.view = &param.value;
  if (grad_enabled_ && !param.frozen) {
    node.param = &param;
    node.requires_grad = true;
  }
  nodes_.push_back(std::move(node));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::record(const char* op, Matrix<Scalar> value,
                                 std::initializer_list<Var<Scalar>> inputs,
                                 BackwardFn backward) {
  if (!value.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite value in output " +
                       shape_string(value));
  }
  Node node;
  node.owned = std::move(value);
  if (grad_enabled_) {
    for (const auto& in : inputs) {
      if (nodes_[in.id()].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
const Matrix<Scalar>& Tape<Scalar>::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.view ? *n.view : n.owned;
}

template <typename Scalar>
Matrix<Scalar>& Tape<Scalar>::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const auto& v = value(id);
    n.grad.setZero(v.rows(), v.cols());
  }
  return n.grad;
}

template <typename Scalar>
void Tape<Scalar>::backward(Var<Scalar> loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw DimensionError("backward: loss must be scalar, got " +
                         shape_string(loss.value()));
  }
  if (&loss.tape() != this) {
    throw DimensionError("backward: loss belongs to a different tape");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;

  grad(loss.id()).setOnes();
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, i);
    } else if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace medcode
