#pragma once

#include <span>

#include "comrope/attention.hpp"

namespace comrope::attention::detail {

void check_shapes(const AttentionBatch& batch, const AngleMatrixSet& set, std::span<const Coordinate> positions);

}  // namespace comrope::attention::detail
