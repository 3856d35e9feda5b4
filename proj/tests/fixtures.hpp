#pragma once

#include <Eigen/Dense>

#include "varsig/core/forward_model.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/physics/video_cs.hpp"
#include "varsig/train/images.hpp"

namespace varsig::fixture {

// Dense operator on an image-shaped signal, for small exhaustive checks.
class DenseImageModel final : public ForwardModel {
 public:
  DenseImageModel(Eigen::MatrixXd b, Shape shape) : b_(std::move(b)), shape_(std::move(shape)) {}
  SystemId system() const noexcept override { return SystemId::generic; }
  std::string name() const override { return "dense_image"; }
  bool is_linear() const noexcept override { return true; }
  Shape signal_shape() const override { return shape_; }
  Shape measurement_shape() const override { return {static_cast<std::size_t>(b_.rows())}; }
  bool nonneg_measurement() const noexcept override { return false; }
  void apply(std::span<const double> f, std::span<double> g) const override {
    Eigen::Map<Eigen::VectorXd>(g.data(), g.size()) = b_ * Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
  }
  void vjp(std::span<const double>, std::span<const double> gb, std::span<double> fb) const override {
    Eigen::Map<Eigen::VectorXd>(fb.data(), fb.size()) =
        b_.transpose() * Eigen::Map<const Eigen::VectorXd>(gb.data(), gb.size());
  }
  json config_json() const override { return json::object(); }

 private:
  Eigen::MatrixXd b_;
  Shape shape_;
};

inline std::vector<double> scene_measurement(const VideoCsModel& model, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return model.apply(synthetic_scene(rng, model.config().size, model.config().frames));
}

}  // namespace varsig::fixture
