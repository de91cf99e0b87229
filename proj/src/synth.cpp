#include "eard/synth.hpp"

#include <random>

#include "eard/rng.hpp"

namespace eard {

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.reveal_min > cfg.reveal_max ||
      cfg.reveal_max >= cfg.posts_per_instance) {
    throw Error("config", "reveal range must fit inside the post stream");
  }
  static const char* kFiller[] = {
      "people",  "saying", "heard",  "report", "video",  "photo",
      "source",  "claims", "thread", "update", "happen", "online",
      "witness", "street", "crowd",  "police", "denies", "spread"};
  constexpr std::size_t kFillerCount = std::size(kFiller);

  std::mt19937_64 rng(cfg.seed);
  SyntheticCorpus corpus;
  corpus.oracle.flip_period = cfg.flip_period;
  for (std::size_t i = 0; i < cfg.num_instances; ++i) {
    Instance inst;
    inst.id = "syn" + std::to_string(i);
    inst.label = i % 2 == 0 ? Label::NonRumor : Label::Rumor;
    const std::size_t reveal =
        cfg.reveal_min +
        uniform_below(rng, cfg.reveal_max - cfg.reveal_min + 1);
    for (std::size_t j = 0; j < cfg.posts_per_instance; ++j) {
      Post p;
      p.timestamp = static_cast<std::int64_t>(j) * cfg.post_interval_seconds;
      // position token plus position-determined filler: prefixes of
      // different lengths stay separable in a bag-of-words state and carry
      // no per-instance noise, so stopping points are actually learnable
      p.text = "slot" + std::to_string(j);
      p.text += " ";
      p.text += kFiller[(j * 5) % kFillerCount];
      p.text += " ";
      p.text += kFiller[(j * 7 + 3) % kFillerCount];
      // evidential marker: present in every post from the reveal index on
      if (j >= reveal) p.text += " verdict confirmed";
      inst.posts.push_back(std::move(p));
    }
    corpus.oracle.instances[inst.id] = {reveal, *inst.label};
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

}  // namespace eard
