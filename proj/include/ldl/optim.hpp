#pragma once

#include "ldl/tensor.hpp"

#include <span>
#include <vector>

namespace ldl::experiments {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// true: AdamW (decay applied to the parameters); false: L2 added to the gradient.
  bool decoupled = false;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step = 0;
};

/// One bias-corrected Adam / AdamW update of `params` in place. The state is
/// lazily sized on the first call; later shape mismatches are ContractErrors.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state,
               const AdamOptions& options);

/// Adam over autodiff leaves; tensors without a gradient are treated as having zero gradient.
class Adam {
 public:
  Adam(std::vector<numerics::Tensor> params, AdamOptions options);

  void step();
  void zero_grad();
  const AdamState& state() const noexcept { return state_; }

 private:
  std::vector<numerics::Tensor> params_;
  AdamOptions options_;
  AdamState state_;
};

}  // namespace ldl::experiments
