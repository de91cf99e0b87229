#pragma once

#include <cstdint>

#include "eard/detector.hpp"

namespace eard {

// Synthetic benchmark: streams whose posts turn evidential ("verdict
// confirmed ...") from a per-instance reveal index onward, paired with an
// oracle detector whose predictions become correct exactly there.
struct SyntheticConfig {
  std::size_t num_instances = 200;
  std::size_t posts_per_instance = 20;
  std::size_t reveal_min = 3;
  std::size_t reveal_max = 6;  // inclusive
  std::size_t flip_period = 1;
  std::int64_t post_interval_seconds = 600;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Instance> instances;  // labeled, balanced
  OracleParams oracle;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg);

}  // namespace eard
