#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eard/error.hpp"

namespace eard {

// Binary veracity label. Rumor == 1 everywhere, including on disk.
enum class Label : int { NonRumor = 0, Rumor = 1 };

inline Label flip(Label y) {
  return y == Label::Rumor ? Label::NonRumor : Label::Rumor;
}

struct Post {
  std::string text;            // non-empty after trimming
  std::int64_t timestamp = 0;  // seconds since epoch, non-negative
};

// One claim: chronologically ordered posts plus an optional label.
// Unlabeled env-pool entries keep label == nullopt (label withheld),
// never a fake value.
struct Instance {
  std::string id;
  std::optional<Label> label;
  std::vector<Post> posts;

  std::size_t size() const { return posts.size(); }
};

struct FewShotSplit {
  std::vector<Instance> labeled;
  std::vector<Instance> env_pool;  // labels stripped
  std::uint64_t seed = 0;
};

// Line-delimited JSON, one instance per line:
//   {"id": str, "label": 0|1|null, "posts": [{"text": str, "t": int}]}
// Posts are stably sorted by timestamp on load; equal-second posts keep
// their source order. Errors name the offending line.
std::vector<Instance> load_dataset(const std::filesystem::path& path);

void save_dataset(const std::vector<Instance>& instances,
                  const std::filesystem::path& path);

// Disjoint uniform samples without replacement; pure function of
// (dataset order, k_labeled, n_env, seed). Env-pool labels are stripped.
FewShotSplit sample_few_shot(const std::vector<Instance>& dataset,
                             std::size_t k_labeled, std::size_t n_env,
                             std::uint64_t seed);

}  // namespace eard
