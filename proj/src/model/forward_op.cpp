#include "varsig/model/forward_op.hpp"

#include <cstring>

#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"

namespace varsig {

namespace {

torch::Tensor as_double_rows(const torch::Tensor& t) {
  return t.detach().to(torch::kCPU, torch::kDouble).contiguous();
}

torch::Tensor apply_rows(const ForwardModel& fm, const torch::Tensor& f) {
  const torch::Tensor fd = as_double_rows(f);
  const std::int64_t batch = fd.size(0);
  const auto n = static_cast<std::int64_t>(fm.signal_len());
  const auto m = static_cast<std::int64_t>(fm.measurement_len());
  if (fd.dim() != 2 || fd.size(1) != n) {
    throw ShapeError("forward_apply: expected [B, " + std::to_string(n) + "] input");
  }
  torch::Tensor g = torch::empty({batch, m}, torch::kDouble);
  const double* src = fd.data_ptr<double>();
  double* dst = g.data_ptr<double>();
  parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
    fm.apply(std::span<const double>(src + b * n, n), std::span<double>(dst + b * m, m));
  });
  return g;
}

class ForwardFunction : public torch::autograd::Function<ForwardFunction> {
 public:
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, torch::Tensor f,
                               std::int64_t fm_handle) {
    ctx->save_for_backward({f});
    ctx->saved_data["fm"] = fm_handle;
    const auto* fm = reinterpret_cast<const ForwardModel*>(fm_handle);
    return apply_rows(*fm, f).to(f.scalar_type());
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grads) {
    const auto* fm = reinterpret_cast<const ForwardModel*>(ctx->saved_data["fm"].toInt());
    const torch::Tensor f = ctx->get_saved_variables()[0];
    const torch::Tensor fd = as_double_rows(f);
    const torch::Tensor gd = as_double_rows(grads[0]);
    const std::int64_t batch = fd.size(0), n = fd.size(1), m = gd.size(1);
    torch::Tensor fbar = torch::empty({batch, n}, torch::kDouble);
    const double* fp = fd.data_ptr<double>();
    const double* gp = gd.data_ptr<double>();
    double* out = fbar.data_ptr<double>();
    parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
      fm->vjp(std::span<const double>(fp + b * n, n), std::span<const double>(gp + b * m, m),
              std::span<double>(out + b * n, n));
    });
    return {fbar.to(f.scalar_type()), torch::Tensor()};
  }
};

}  // namespace

torch::Tensor forward_apply(const ForwardModel& fm, const torch::Tensor& f, bool differentiable) {
  if (differentiable && f.requires_grad()) {
    return ForwardFunction::apply(f, reinterpret_cast<std::int64_t>(&fm));
  }
  return apply_rows(fm, f).to(f.scalar_type());
}

torch::Tensor batch_tensor(const std::vector<std::vector<double>>& rows, torch::Dtype dtype) {
  if (rows.empty()) throw ShapeError("batch_tensor: no rows");
  const std::size_t n = rows.front().size();
  torch::Tensor t = torch::empty({static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(n)},
                                 torch::kDouble);
  double* p = t.data_ptr<double>();
  for (const auto& r : rows) {
    if (r.size() != n) throw ShapeError("batch_tensor: ragged rows");
    std::memcpy(p, r.data(), n * sizeof(double));
    p += n;
  }
  return t.to(dtype);
}

std::vector<double> row_vector(const torch::Tensor& batch, std::int64_t row) {
  const torch::Tensor r = batch.detach()[row].to(torch::kCPU, torch::kDouble).contiguous();
  const double* p = r.data_ptr<double>();
  return std::vector<double>(p, p + r.numel());
}

}  // namespace varsig
