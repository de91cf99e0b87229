#include "eard/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eard/rng.hpp"

namespace eard {

namespace {

using nlohmann::json;

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

[[noreturn]] void schema_error(std::size_t line_no, const std::string& what) {
  throw Error("schema", "line " + std::to_string(line_no) + ": " + what);
}

Label parse_label(const json& j, std::size_t line_no) {
  if (!j.is_number_integer()) schema_error(line_no, "label must be 0, 1 or null");
  const auto v = j.get<std::int64_t>();
  if (v != 0 && v != 1) {
    schema_error(line_no, "unknown label token \"" + j.dump() + "\"");
  }
  return static_cast<Label>(v);
}

Instance parse_instance(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    schema_error(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) schema_error(line_no, "record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) {
    schema_error(line_no, "missing or non-string \"id\"");
  }
  if (!j.contains("posts") || !j["posts"].is_array()) {
    schema_error(line_no, "missing or non-array \"posts\"");
  }
  if (!j.contains("label")) schema_error(line_no, "missing \"label\"");

  Instance inst;
  inst.id = j["id"].get<std::string>();
  if (!j["label"].is_null()) inst.label = parse_label(j["label"], line_no);

  for (const auto& jp : j["posts"]) {
    if (!jp.is_object() || !jp.contains("text") || !jp.contains("t")) {
      schema_error(line_no, "post missing \"text\" or \"t\"");
    }
    if (!jp["text"].is_string()) schema_error(line_no, "post text must be a string");
    if (!jp["t"].is_number_integer()) {
      schema_error(line_no, "post timestamp must be an integer");
    }
    Post p;
    p.text = jp["text"].get<std::string>();
    p.timestamp = jp["t"].get<std::int64_t>();
    if (is_blank(p.text)) schema_error(line_no, "post text is empty");
    if (p.timestamp < 0) schema_error(line_no, "negative timestamp");
    inst.posts.push_back(std::move(p));
  }
  if (inst.posts.empty()) schema_error(line_no, "instance has no posts");

  std::stable_sort(inst.posts.begin(), inst.posts.end(),
                   [](const Post& a, const Post& b) {
                     return a.timestamp < b.timestamp;
                   });
  return inst;
}

}  // namespace

std::vector<Instance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open dataset file: " + path.string());

  std::vector<Instance> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Instance inst = parse_instance(line, line_no);
    if (!seen.insert(inst.id).second) {
      schema_error(line_no, "duplicate id \"" + inst.id + "\"");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void save_dataset(const std::vector<Instance>& instances,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write dataset file: " + path.string());
  for (const auto& inst : instances) {
    json j;
    j["id"] = inst.id;
    if (inst.label) {
      j["label"] = static_cast<int>(*inst.label);
    } else {
      j["label"] = nullptr;
    }
    json posts = json::array();
    for (const auto& p : inst.posts) {
      posts.push_back({{"text", p.text}, {"t", p.timestamp}});
    }
    j["posts"] = std::move(posts);
    out << j.dump() << "\n";
  }
}

FewShotSplit sample_few_shot(const std::vector<Instance>& dataset,
                             std::size_t k_labeled, std::size_t n_env,
                             std::uint64_t seed) {
  if (k_labeled + n_env > dataset.size()) {
    std::ostringstream msg;
    msg << "insufficient instances: need " << k_labeled << " labeled + "
        << n_env << " env, have " << dataset.size();
    throw Error("config", msg.str());
  }

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle_indices(order, rng);

  FewShotSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < k_labeled; ++i) {
    const Instance& inst = dataset[order[i]];
    if (!inst.label) {
      throw Error("config",
                  "labeled sample drew unlabeled instance \"" + inst.id + "\"");
    }
    split.labeled.push_back(inst);
  }
  for (std::size_t i = k_labeled; i < k_labeled + n_env; ++i) {
    Instance inst = dataset[order[i]];
    inst.label.reset();  // label withheld
    split.env_pool.push_back(std::move(inst));
  }
  return split;
}

}  // namespace eard
