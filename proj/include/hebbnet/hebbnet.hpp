#pragma once

// Umbrella header for the hebbnet library: structured and deep
// Hebbian/anti-Hebbian networks that optimize similarity-matching
// objectives through fixed-point neural dynamics and local plasticity.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/connectivity.hpp"
#include "hebbnet/data.hpp"
#include "hebbnet/dynamics.hpp"
#include "hebbnet/eval.hpp"
#include "hebbnet/manifest.hpp"
#include "hebbnet/model.hpp"
#include "hebbnet/objective.hpp"
#include "hebbnet/plasticity.hpp"
#include "hebbnet/presets.hpp"
#include "hebbnet/tensor_io.hpp"
#include "hebbnet/verify.hpp"
#include "hebbnet/weights.hpp"
