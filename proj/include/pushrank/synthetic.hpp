#ifndef PUSHRANK_SYNTHETIC_HPP
#define PUSHRANK_SYNTHETIC_HPP

#include <cstdint>

#include "pushrank/data.hpp"
#include "pushrank/model.hpp"

namespace pushrank {

struct SyntheticData {
  ResponseMatrix response;
  ExpressionMatrix expression;
  LatentModel planted;
};

/// Plants seeded standard-normal latent vectors; responses are the negated
/// latent scores plus noise (lower = more sensitive), expression embeds the
/// cell-line vectors into 5*l_true genes through a seeded random linear map
/// plus noise, and the missing mask is uniform, resampled until every row
/// and column keeps an observation (up to 100 attempts).
SyntheticData generate_synthetic(int m, int n, int l_true, double noise_sigma,
                                 double missing_frac, uint64_t seed);

}  // namespace pushrank

#endif
