#pragma once

#include "varsig/core/forward_model.hpp"

namespace varsig {

/// Builds the forward model for `system` from its JSON physics config
/// (missing keys take their defaults). Generic systems need a "kind" of
/// "squared_linear" or "matrix" with dimensions and a seed.
ForwardModelPtr make_forward_model(SystemId system, const json& physics = json::object());

/// Default physics config for a system, as JSON.
json default_physics(SystemId system);

}  // namespace varsig
