#ifndef IBIA_RANDOM_NET_HPP
#define IBIA_RANDOM_NET_HPP

#include <cstdint>
#include <map>

#include "ibia/bn_model.hpp"

namespace ibia {

struct RandomNetOptions {
  int nvars = 10;
  int max_parents = 3;
  int max_card = 2;          // cardinalities uniform in [2, max_card]
  double det_row_frac = 0.0; // fraction of point-mass conditional rows
};

// Deterministic seeded generator; parents are always lower-numbered vars.
BayesNet random_net(std::uint64_t seed, const RandomNetOptions& opt);

// Observe `count` distinct leaf-biased variables with random states.
std::map<VarId, int> random_evidence(std::uint64_t seed, const BayesNet& net,
                                     int count);

}  // namespace ibia

#endif
