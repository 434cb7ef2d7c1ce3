#pragma once

#include "arraycav/analytics.hpp"
#include "arraycav/common.hpp"
#include "arraycav/io.hpp"
#include "arraycav/model.hpp"
#include "arraycav/scattering.hpp"
#include "arraycav/sweeps.hpp"

namespace arraycav {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace arraycav
