#ifndef TEDRATE_TEXTPIPE_HPP
#define TEDRATE_TEXTPIPE_HPP

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tedrate/common.hpp"

namespace tedrate::textpipe {

// Lowercased, punctuation-separated surface tokens. Deterministic; an empty
// string yields an empty list.
std::vector<std::string> tokenize(std::string_view sentence);

// Pre-trained word vectors, text format: one entry per line,
// "word v1 v2 ... vd". Absent words look up to the zero vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return table_.size(); }
  bool contains(const std::string& word) const { return table_.count(word) > 0; }

  // Zero vector for OOV words; every returned vector has length dimension().
  const std::vector<double>& lookup(const std::string& word) const;

  void insert(const std::string& word, std::vector<double> vec);

  // Stable content hash over the sorted vocabulary (checkpoint guard).
  std::uint64_t vocab_hash() const;

  std::size_t skipped_lines = 0;    // malformed lines in the source file
  std::size_t duplicate_lines = 0;  // later occurrence replaced an earlier one

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::vector<double> zero_;
};

EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension);

struct TreeNode {
  std::string form;
  std::string upos;
  std::string deprel;
  int parent = -1;  // index into nodes, -1 for ROOT
};

struct DepTree {
  std::vector<TreeNode> nodes;
  int root = -1;
  std::vector<std::vector<int>> children;  // derived from parent links

  void rebuild_children();
  // Throws DataError unless parent links form a single-rooted tree.
  void validate(std::string_view context) const;
};

struct TalkTrees {
  std::string talk_id;
  std::vector<DepTree> sentences;
  std::vector<std::string> rejected;  // per-sentence diagnostics
};

// Standard 10-column CoNLL-U. Sentences separated by blank lines, talks by
// "# talk_id = ..." comments. Multiword-token and empty-node lines are
// skipped; cyclic or multi-rooted sentences are rejected with a diagnostic.
// A talk whose sentences were all rejected is an error.
std::vector<TalkTrees> read_conllu(const std::string& path);

void write_conllu(const std::string& path, const std::vector<TalkTrees>& talks);

// Dense 0-based tag index with UNK reserved at index 0. Construction sorts
// the observed tags so index assignment is stable across runs.
class TagVocab {
 public:
  static constexpr int kUnkIndex = 0;

  TagVocab() { index_to_tag_.push_back("<UNK>"); }

  void add(const std::string& tag);
  void finalize();  // sorts and assigns indices; idempotent

  int index_of(const std::string& tag) const;  // kUnkIndex for unseen tags
  std::size_t size() const { return index_to_tag_.size(); }
  const std::vector<std::string>& tags() const { return index_to_tag_; }

  std::uint64_t hash() const;

  void save_json(const std::string& path) const;
  static TagVocab load_json(const std::string& path);

 private:
  std::vector<std::string> index_to_tag_;
  std::map<std::string, int> tag_to_index_;
  std::vector<std::string> pending_;
  bool finalized_ = false;
};

struct AuxVocabs {
  TagVocab pos;
  TagVocab dep;
};

// Builds POS and dependency-type vocabularies from (training-split) trees.
AuxVocabs build_aux_vocabs(const std::vector<const TalkTrees*>& talks);

}  // namespace tedrate::textpipe

#endif  // TEDRATE_TEXTPIPE_HPP
