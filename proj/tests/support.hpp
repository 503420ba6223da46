#pragma once

#include <cstdint>

#include "drmco/model.hpp"

namespace drmco::testing {

/// Small three-stage instance with up to three nodes per stage, one or two
/// state dimensions, and an ambiguity kind rotated by seed. Value-function
/// slopes stay below 2, so a regularization factor of 10 is exact.
Instance make_random_small(std::uint64_t seed);

}  // namespace drmco::testing
