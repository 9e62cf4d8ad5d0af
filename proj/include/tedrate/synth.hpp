#ifndef TEDRATE_SYNTH_HPP
#define TEDRATE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tedrate/common.hpp"

namespace tedrate::synth {

enum class TreeShape { chain, random_shape };

TreeShape parse_tree_shape(const std::string& name);  // "chain" | "random"

// One planted signal. Lexical rules inject a trigger token into the
// transcript; prosodic rules (prosody_channel >= 0) inject a localized bump
// into one series channel instead. Either way, the rule's category gets its
// rating pushed through a logistic link on the trigger count.
struct PlantedRule {
  std::string category;  // one of the 14 rating categories
  std::string trigger;   // token to inject (lexical rules only)
  int prosody_channel = -1;
  double strength = 0.0;

  bool lexical() const { return prosody_channel < 0; }
};

struct SynthSpec {
  std::size_t n_talks = 200;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 8;
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 12;
  std::size_t vocab_size = 60;  // filler words; triggers live outside this budget
  std::vector<PlantedRule> rules;
  TreeShape tree_shape = TreeShape::chain;
  std::uint64_t seed = 1;

  void validate() const;  // throws UsageError
};

// What generation decided per talk; written to truth.csv so tests can
// measure planted-signal strength without re-parsing the transcripts.
struct SynthSummary {
  std::vector<std::string> talk_ids;
  std::vector<std::string> rule_categories;      // truth.csv column order
  std::vector<std::vector<int>> trigger_counts;  // [talk][rule]
  std::vector<std::string> vocabulary;           // filler words + triggers
};

// Emits a mutually consistent synthetic corpus under out_dir:
//   talks.jsonl, trees.conllu, prosody/<id>.csv, annotations/<id>.csv,
//   trajectory/<id>.csv, embeddings.txt, lexicon.txt, truth.csv.
// Byte-identical output given the same spec.
SynthSummary generate(const SynthSpec& spec, const std::string& out_dir);

}  // namespace tedrate::synth

#endif  // TEDRATE_SYNTH_HPP
