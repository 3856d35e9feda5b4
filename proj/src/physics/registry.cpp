#include "varsig/physics/registry.hpp"

#include "varsig/core/error.hpp"
#include "varsig/physics/fresnel.hpp"
#include "varsig/physics/streaking.hpp"
#include "varsig/physics/toy.hpp"
#include "varsig/physics/video_cs.hpp"

namespace varsig {

ForwardModelPtr make_forward_model(SystemId system, const json& physics) {
  const json cfg = physics.is_null() ? json::object() : physics;
  switch (system) {
    case SystemId::streaking:
      return std::make_shared<StreakingModel>(StreakingConfig::from_json(cfg));
    case SystemId::video_cs:
      return std::make_shared<VideoCsModel>(VideoConfig::from_json(cfg));
    case SystemId::hologram:
      return std::make_shared<HologramModel>(FresnelConfig::from_json(cfg));
    case SystemId::generic:
      break;
  }
  try {
    const auto kind = cfg.at("kind").get<std::string>();
    const auto seed = cfg.value("seed", std::uint64_t{0});
    if (kind == "squared_linear") {
      return std::make_shared<SquaredLinearModel>(cfg.at("n").get<std::size_t>(),
                                                  cfg.at("m").get<std::size_t>(), seed);
    }
    if (kind == "matrix") {
      const auto rows = cfg.at("rows").get<std::size_t>();
      const auto cols = cfg.at("cols").get<std::size_t>();
      return std::make_shared<MatrixModel>(MatrixModel::random_matrix(rows, cols, seed), seed);
    }
    throw ConfigError("unknown generic model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generic physics config: ") + e.what());
  }
}

json default_physics(SystemId system) {
  switch (system) {
    case SystemId::streaking: return StreakingConfig::defaults().to_json();
    case SystemId::video_cs: return VideoConfig{}.to_json();
    case SystemId::hologram: return FresnelConfig{}.to_json();
    case SystemId::generic: break;
  }
  return {{"kind", "squared_linear"}, {"n", 16}, {"m", 32}, {"seed", 0}};
}

}  // namespace varsig
