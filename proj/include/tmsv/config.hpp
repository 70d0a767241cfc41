#pragma once

namespace tmsv {

/// Numeric tolerances shared by all modules.
struct Config
{
  double tail_tol = 1e-9;    // discarded probability allowed by truncations
  double oracle_tol = 1e-10; // agreement required between the two p(n,m) routes
  double zero_band = 1e-12;  // sign verdicts treat |x| <= zero_band as zero
  unsigned max_pair_index = 200;
};

} // namespace tmsv
