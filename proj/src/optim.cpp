#include "ldl/optim.hpp"

#include "ldl/errors.hpp"

#include <cmath>

namespace ldl::experiments {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state,
               const AdamOptions& options) {
  if (params.size() != grads.size()) throw ContractError("adam_step: parameter and gradient counts differ");
  if (state.step == 0 && state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw ContractError("adam_step: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = *params[i];
    if (grads[i]->rows() != p.rows() || grads[i]->cols() != p.cols() || state.first_moment[i].rows() != p.rows() ||
        state.first_moment[i].cols() != p.cols())
      throw ContractError("adam_step: shape mismatch for parameter " + std::to_string(i));
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    Matrix g = *grads[i];
    if (options.weight_decay != 0.0) {
      if (options.decoupled) {
        p *= 1.0 - options.lr * options.weight_decay;
      } else {
        g += options.weight_decay * p;
      }
    }
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseAbs2();
    p.array() -= options.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + options.eps);
  }
}

Adam::Adam(std::vector<numerics::Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_)
    if (!p.is_leaf() || !p.requires_grad()) throw ContractError("Adam optimizes trainable leaf tensors only");
}

void Adam::step() {
  std::vector<Matrix*> values;
  std::vector<Matrix> zeros;
  std::vector<const Matrix*> grads;
  zeros.reserve(params_.size());
  for (auto& p : params_) {
    values.push_back(&p.mutable_values());
    if (p.has_grad()) {
      grads.push_back(&p.grad());
    } else {
      zeros.push_back(Matrix::Zero(p.rows(), p.cols()));
      grads.push_back(&zeros.back());
    }
  }
  adam_step(values, grads, state_, options_);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace ldl::experiments
