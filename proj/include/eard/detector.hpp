#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eard/corpus.hpp"

namespace eard {

// Detector output for every prefix of an instance: preds[i] is the label
// predicted from posts[0..=i].
struct PredictionTrace {
  std::string instance_id;
  std::vector<Label> preds;
};

struct OracleParams {
  struct Entry {
    std::size_t reveal = 0;  // prefix index from which predictions are true
    Label truth = Label::NonRumor;
  };
  std::map<std::string, Entry> instances;
  std::size_t flip_period = 1;  // pre-reveal flip period p, >= 1
};

struct HttpParams {
  std::string url;  // full chat-completion endpoint URL
  std::string model;
  int max_retries = 3;
  bool retry_parse_errors = false;
};

enum class DetectorKind { SyntheticOracle, HttpLLM, CachedTrace };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::SyntheticOracle;
  std::optional<OracleParams> oracle;
  std::optional<HttpParams> endpoint;
  std::optional<std::filesystem::path> cache_path;
};

// Posts serialized one per line as "{k}. {text}" with k starting at 1,
// substituted into the fixed template. Bit-exact contract.
std::string render_prompt(std::span<const Post> posts);

// Trims whitespace/punctuation, case-folds; accepts any reply whose first
// word is yes/no. "yes" -> Rumor, "no" -> NonRumor.
Label normalize_reply(const std::string& raw);

class Detector {
 public:
  virtual ~Detector() = default;

  virtual Label predict(std::span<const Post> posts_prefix,
                        const std::string& instance_id,
                        std::size_t prefix_len) = 0;

  // preds[i] = predict(posts[0..=i]) for every i. Served from the cache when
  // the instance was already traced; new traces are appended to the cache
  // file when a cache path is configured.
  PredictionTrace trace_instance(const Instance& instance);

  bool has_cached(const std::string& instance_id) const;

 protected:
  explicit Detector(std::optional<std::filesystem::path> cache_path = {});

  std::optional<std::filesystem::path> cache_path_;
  std::map<std::string, std::vector<Label>> cache_;
};

class OracleDetector : public Detector {
 public:
  OracleDetector(OracleParams params,
                 std::optional<std::filesystem::path> cache_path = {});
  Label predict(std::span<const Post> posts_prefix,
                const std::string& instance_id,
                std::size_t prefix_len) override;

 private:
  OracleParams params_;
};

// Replays a previously written trace cache file.
class CachedTraceDetector : public Detector {
 public:
  explicit CachedTraceDetector(const std::filesystem::path& cache_path);
  Label predict(std::span<const Post> posts_prefix,
                const std::string& instance_id,
                std::size_t prefix_len) override;
};

class HttpDetector : public Detector {
 public:
  HttpDetector(HttpParams params, std::string api_key,
               std::optional<std::filesystem::path> cache_path = {});
  Label predict(std::span<const Post> posts_prefix,
                const std::string& instance_id,
                std::size_t prefix_len) override;

 private:
  HttpParams params_;
  std::string api_key_;
};

// Reads the API key for HttpLLM from the EARD_API_KEY environment variable.
std::unique_ptr<Detector> make_detector(const DetectorSpec& spec);

}  // namespace eard
