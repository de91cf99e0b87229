#include "eard/detector.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace eard {

namespace {

constexpr const char* kPromptTemplate =
    "Analyze the given sequence of social media posts, determine if it is a "
    "rumor. Respond Yes or No only.\nPosts: ";

std::map<std::string, std::vector<Label>> load_cache_file(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<Label>> cache;
  std::ifstream in(path);
  if (!in) return cache;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("schema", "trace cache line " + std::to_string(line_no) +
                                ": " + e.what());
    }
    const auto id = j.at("id").get<std::string>();
    std::vector<Label> preds;
    for (const auto& v : j.at("preds")) {
      const auto x = v.get<int>();
      if (x != 0 && x != 1) {
        throw Error("schema", "trace cache line " + std::to_string(line_no) +
                                  ": prediction must be 0 or 1");
      }
      preds.push_back(static_cast<Label>(x));
    }
    cache[id] = std::move(preds);
  }
  return cache;
}

void append_cache_record(const std::filesystem::path& path,
                         const std::string& id,
                         const std::vector<Label>& preds) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("io", "cannot write trace cache: " + path.string());
  nlohmann::json j;
  j["id"] = id;
  nlohmann::json arr = nlohmann::json::array();
  for (Label p : preds) arr.push_back(static_cast<int>(p));
  j["preds"] = std::move(arr);
  out << j.dump() << "\n";
}

}  // namespace

std::string render_prompt(std::span<const Post> posts) {
  std::string serialized;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (i > 0) serialized += "\n";
    serialized += std::to_string(i + 1) + ". " + posts[i].text;
  }
  return kPromptTemplate + serialized;
}

Label normalize_reply(const std::string& raw) {
  // first word, ignoring surrounding whitespace/punctuation
  std::string word;
  for (unsigned char c : raw) {
    if (std::isalpha(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (!word.empty()) {
      break;
    }
  }
  if (word == "yes") return Label::Rumor;
  if (word == "no") return Label::NonRumor;
  throw Error("parse", "reply not normalizable to Yes/No: \"" + raw + "\"");
}

Detector::Detector(std::optional<std::filesystem::path> cache_path)
    : cache_path_(std::move(cache_path)) {
  if (cache_path_ && std::filesystem::exists(*cache_path_)) {
    cache_ = load_cache_file(*cache_path_);
  }
}

bool Detector::has_cached(const std::string& instance_id) const {
  return cache_.count(instance_id) > 0;
}

PredictionTrace Detector::trace_instance(const Instance& instance) {
  if (instance.posts.empty()) {
    throw Error("config", "cannot trace instance with no posts: " + instance.id);
  }
  PredictionTrace trace;
  trace.instance_id = instance.id;

  auto it = cache_.find(instance.id);
  if (it != cache_.end() && it->second.size() == instance.size()) {
    trace.preds = it->second;
    return trace;
  }

  for (std::size_t i = 0; i < instance.size(); ++i) {
    std::span<const Post> prefix(instance.posts.data(), i + 1);
    try {
      trace.preds.push_back(predict(prefix, instance.id, i + 1));
    } catch (const Error& e) {
      throw Error(e.category(), "instance " + instance.id + " prefix " +
                                    std::to_string(i) + ": " + e.what());
    }
  }
  cache_[instance.id] = trace.preds;
  if (cache_path_) append_cache_record(*cache_path_, instance.id, trace.preds);
  return trace;
}

OracleDetector::OracleDetector(OracleParams params,
                               std::optional<std::filesystem::path> cache_path)
    : Detector(std::move(cache_path)), params_(std::move(params)) {
  if (params_.flip_period == 0) {
    throw Error("config", "oracle flip period must be positive");
  }
}

Label OracleDetector::predict(std::span<const Post> posts_prefix,
                              const std::string& instance_id,
                              std::size_t prefix_len) {
  if (posts_prefix.empty() || prefix_len != posts_prefix.size()) {
    throw Error("config", "prefix length mismatch");
  }
  auto it = params_.instances.find(instance_id);
  if (it == params_.instances.end()) {
    throw Error("config", "oracle has no entry for instance " + instance_id);
  }
  const auto& entry = it->second;
  const std::size_t idx = prefix_len - 1;
  if (idx >= entry.reveal) return entry.truth;
  // deterministic pre-reveal noise: flip on odd periods
  return (idx / params_.flip_period) % 2 == 0 ? entry.truth : flip(entry.truth);
}

CachedTraceDetector::CachedTraceDetector(const std::filesystem::path& cache_path)
    : Detector(cache_path) {
  if (!std::filesystem::exists(cache_path)) {
    throw Error("io", "trace cache not found: " + cache_path.string());
  }
}

Label CachedTraceDetector::predict(std::span<const Post> posts_prefix,
                                   const std::string& instance_id,
                                   std::size_t prefix_len) {
  (void)posts_prefix;
  auto it = cache_.find(instance_id);
  if (it == cache_.end()) {
    throw Error("config", "cache miss for instance " + instance_id);
  }
  if (prefix_len == 0 || prefix_len > it->second.size()) {
    throw Error("config", "cache miss for instance " + instance_id +
                              " prefix length " + std::to_string(prefix_len));
  }
  return it->second[prefix_len - 1];
}

HttpDetector::HttpDetector(HttpParams params, std::string api_key,
                           std::optional<std::filesystem::path> cache_path)
    : Detector(std::move(cache_path)),
      params_(std::move(params)),
      api_key_(std::move(api_key)) {}

Label HttpDetector::predict(std::span<const Post> posts_prefix,
                            const std::string& instance_id,
                            std::size_t prefix_len) {
  (void)instance_id;
  (void)prefix_len;
  const auto scheme_end = params_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("config", "invalid endpoint URL: " + params_.url);
  }
  const auto path_start = params_.url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos
                               ? params_.url
                               : params_.url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : params_.url.substr(path_start);

  nlohmann::json body;
  body["model"] = params_.model;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", render_prompt(posts_prefix)}}});
  body["temperature"] = 0;

  httplib::Client client(base);
  client.set_connection_timeout(30);
  client.set_read_timeout(60);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

  std::string last_error;
  for (int attempt = 0; attempt <= params_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::seconds(1 << (attempt - 1)));
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300) {
      last_error = res ? "HTTP status " + std::to_string(res->status)
                       : "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    std::string content;
    try {
      auto j = nlohmann::json::parse(res->body);
      content = j.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("parse", std::string("malformed completion reply: ") + e.what());
    }
    try {
      return normalize_reply(content);
    } catch (const Error&) {
      if (!params_.retry_parse_errors || attempt == params_.max_retries) throw;
      last_error = "unparseable reply: " + content;
    }
  }
  throw Error("transport", "request failed after retries: " + last_error);
}

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec) {
  switch (spec.kind) {
    case DetectorKind::SyntheticOracle:
      if (!spec.oracle) throw Error("config", "oracle detector needs oracle params");
      return std::make_unique<OracleDetector>(*spec.oracle, spec.cache_path);
    case DetectorKind::CachedTrace:
      if (!spec.cache_path) {
        throw Error("config", "cached-trace detector needs cache_path");
      }
      return std::make_unique<CachedTraceDetector>(*spec.cache_path);
    case DetectorKind::HttpLLM: {
      if (!spec.endpoint) throw Error("config", "http detector needs endpoint");
      const char* key = std::getenv("EARD_API_KEY");
      if (!key || !*key) {
        throw Error("config", "EARD_API_KEY environment variable is not set");
      }
      return std::make_unique<HttpDetector>(*spec.endpoint, key, spec.cache_path);
    }
  }
  throw Error("config", "unknown detector kind");
}

}  // namespace eard
