#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "hypergauss/gaussian.hpp"
#include "hypergauss/linalg.hpp"

namespace support {

using namespace hypergauss;

inline BlockCovariance random_cov(std::mt19937_64& rng, std::vector<int> blocks, double spread = 0.6) {
  return random_block_covariance(rng, std::move(blocks), spread);
}

}  // namespace support
