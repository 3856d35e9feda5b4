#pragma once

#include <torch/torch.h>

#include "varsig/core/forward_model.hpp"

namespace varsig {

/// Batched A(f) on a [B, signal_len] tensor, returning [B, measurement_len]
/// in the dtype of `f`. With `differentiable`, the result takes part in
/// autograd and its backward pass calls the model's vjp per sample.
torch::Tensor forward_apply(const ForwardModel& fm, const torch::Tensor& f, bool differentiable);

/// Conversions between flat double buffers and [B, n] tensors.
torch::Tensor batch_tensor(const std::vector<std::vector<double>>& rows, torch::Dtype dtype);
std::vector<double> row_vector(const torch::Tensor& batch, std::int64_t row);

}  // namespace varsig
