#include "eard/featurizer.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace eard {

namespace {

void l2_normalize(std::vector<double>& v) {
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq == 0.0) return;  // zero vector stays zero
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
}

}  // namespace

std::uint64_t stable_token_hash(std::string_view token) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Featurizer::Featurizer(FeaturizerSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 1) throw Error("config", "featurizer dim must be >= 1");
  if (spec_.mode == FeaturizerMode::PrecomputedEmbeddings) {
    if (!spec_.embedding_path) {
      throw Error("config", "precomputed-embeddings mode requires embedding_path");
    }
    std::ifstream in(*spec_.embedding_path);
    if (!in) {
      throw Error("io", "cannot open embedding file: " +
                            spec_.embedding_path->string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error("schema", "embedding line " + std::to_string(line_no) +
                                  ": " + e.what());
      }
      const auto id = j.at("id").get<std::string>();
      const auto idx = j.at("idx").get<std::size_t>();
      auto vec = j.at("vec").get<std::vector<double>>();
      if (vec.size() != spec_.dim) {
        throw Error("schema", "embedding for (" + id + ", " +
                                  std::to_string(idx) + ") has dimension " +
                                  std::to_string(vec.size()) + ", expected " +
                                  std::to_string(spec_.dim));
      }
      table_[{id, idx}] = std::move(vec);
    }
  }
}

std::vector<double> Featurizer::hashed_post_vector(const Post& post) const {
  std::vector<double> v(spec_.dim, 0.0);
  for (const auto& token : tokenize(post.text)) {
    const std::uint64_t h = stable_token_hash(token);
    const std::size_t bucket = static_cast<std::size_t>(h % spec_.dim);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
  }
  l2_normalize(v);
  return v;
}

const std::vector<double>& Featurizer::lookup_embedding(
    const std::string& instance_id, std::size_t post_index) const {
  auto it = table_.find({instance_id, post_index});
  if (it == table_.end()) {
    throw Error("schema", "missing embedding for (" + instance_id + ", " +
                              std::to_string(post_index) + ")");
  }
  return it->second;
}

StateVector Featurizer::encode(const std::string& instance_id,
                               std::span<const Post> posts_prefix,
                               int prev_action) const {
  if (posts_prefix.empty()) throw Error("config", "empty post prefix");

  std::vector<double> mean(spec_.dim, 0.0);
  for (std::size_t i = 0; i < posts_prefix.size(); ++i) {
    std::vector<double> v;
    if (spec_.mode == FeaturizerMode::HashedBagOfWords) {
      v = hashed_post_vector(posts_prefix[i]);
    } else {
      v = lookup_embedding(instance_id, i);
    }
    for (std::size_t k = 0; k < spec_.dim; ++k) mean[k] += v[k];
  }
  const double inv_n = 1.0 / static_cast<double>(posts_prefix.size());
  for (double& x : mean) x *= inv_n;
  l2_normalize(mean);

  StateVector s;
  s.values = std::move(mean);
  s.values.push_back(static_cast<double>(prev_action));
  s.prefix_len = posts_prefix.size();
  s.prev_action = prev_action;
  return s;
}

}  // namespace eard
