#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eard/corpus.hpp"

namespace eard {

enum class FeaturizerMode { HashedBagOfWords, PrecomputedEmbeddings };

struct FeaturizerSpec {
  FeaturizerMode mode = FeaturizerMode::HashedBagOfWords;
  std::size_t dim = 256;  // text-feature width d; state width is d + 1
  std::optional<std::filesystem::path> embedding_path;
};

// State embedding: L2-normalized text features of the observed prefix
// followed by the previous action as one scalar (values[dim] exactly).
struct StateVector {
  std::vector<double> values;
  std::size_t prefix_len = 0;
  int prev_action = 0;
};

// FNV-1a, 64-bit. Stable across platforms and process runs.
std::uint64_t stable_token_hash(std::string_view token);

// Lowercase, split on runs of non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text);

class Featurizer {
 public:
  explicit Featurizer(FeaturizerSpec spec);

  const FeaturizerSpec& spec() const { return spec_; }
  std::size_t state_dim() const { return spec_.dim + 1; }

  // Per-post vectors are L2-normalized (a zero vector stays zero), averaged
  // over the prefix, and the average is L2-normalized again. Pure and
  // deterministic for a fixed spec.
  StateVector encode(const std::string& instance_id,
                     std::span<const Post> posts_prefix, int prev_action) const;

 private:
  std::vector<double> hashed_post_vector(const Post& post) const;
  const std::vector<double>& lookup_embedding(const std::string& instance_id,
                                              std::size_t post_index) const;

  FeaturizerSpec spec_;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> table_;
};

}  // namespace eard
