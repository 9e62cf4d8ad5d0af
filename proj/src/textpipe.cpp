#include "tedrate/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace tedrate::textpipe {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char ch : sentence) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c >= 0x80) {
      // bytes >= 0x80 belong to multi-byte UTF-8 sequences; keep them in-word
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      tokens.push_back(std::string(1, ch));
    }
  }
  flush();
  return tokens;
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& word) const {
  auto it = table_.find(word);
  if (it != table_.end()) return it->second;
  return zero_;
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dimension_)
    throw DataError("embedding for '" + word + "' has " + std::to_string(vec.size()) +
                    " components, expected " + std::to_string(dimension_));
  if (zero_.size() != dimension_) zero_.assign(dimension_, 0.0);
  auto [it, inserted] = table_.insert_or_assign(word, std::move(vec));
  (void)it;
  if (!inserted) ++duplicate_lines;
}

std::uint64_t EmbeddingTable::vocab_hash() const {
  std::vector<std::string> words;
  words.reserve(table_.size());
  for (const auto& [w, _] : table_) words.push_back(w);
  std::sort(words.begin(), words.end());
  std::uint64_t h = fnv1a64("embeddings/" + std::to_string(dimension_));
  for (const auto& w : words) {
    h = fnv1a64(w, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  EmbeddingTable table(dimension);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    std::istringstream iss(line);
    std::string word;
    iss >> word;
    std::vector<double> vec;
    vec.reserve(dimension);
    double v;
    while (iss >> v) vec.push_back(v);
    if (vec.size() != dimension || word.empty()) {
      ++table.skipped_lines;
      std::cerr << "warning: " << path << ":" << lineno << ": malformed embedding line skipped\n";
      continue;
    }
    std::size_t before = table.duplicate_lines;
    table.insert(word, std::move(vec));
    if (table.duplicate_lines > before)
      std::cerr << "warning: " << path << ":" << lineno << ": duplicate entry for '" << word
                << "', last occurrence wins\n";
  }
  return table;
}

void DepTree::rebuild_children() {
  children.assign(nodes.size(), {});
  root = -1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    int p = nodes[i].parent;
    if (p < 0)
      root = static_cast<int>(i);
    else
      children[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
  }
}

void DepTree::validate(std::string_view context) const {
  if (nodes.empty()) throw DataError(std::string(context) + ": empty tree");
  int roots = 0;
  for (const auto& n : nodes) {
    if (n.parent < 0)
      ++roots;
    else if (n.parent >= static_cast<int>(nodes.size()))
      throw DataError(std::string(context) + ": head index out of range");
  }
  if (roots != 1)
    throw DataError(std::string(context) + ": expected exactly one root, found " +
                    std::to_string(roots));
  // reachability from the root covers acyclicity given n-1 edges
  std::vector<int> stack{root};
  std::vector<bool> seen(nodes.size(), false);
  std::size_t visited = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = true;
    ++visited;
    for (int c : children[static_cast<std::size_t>(v)]) stack.push_back(c);
  }
  if (visited != nodes.size())
    throw DataError(std::string(context) + ": head links contain a cycle or unreachable node");
}

namespace {

bool plain_token_id(const std::string& id) {
  // skips multiword ranges ("1-2") and empty nodes ("5.1")
  return !id.empty() && id.find('-') == std::string::npos && id.find('.') == std::string::npos;
}

void finish_sentence(std::vector<std::string>& forms, std::vector<std::string>& upos,
                     std::vector<std::string>& deprel, std::vector<int>& heads,
                     TalkTrees& talk, const std::string& context) {
  if (forms.empty()) return;
  DepTree tree;
  tree.nodes.resize(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i) {
    tree.nodes[i].form = forms[i];
    tree.nodes[i].upos = upos[i];
    tree.nodes[i].deprel = deprel[i];
    tree.nodes[i].parent = heads[i] == 0 ? -1 : heads[i] - 1;
    if (heads[i] < 0 || heads[i] > static_cast<int>(forms.size())) {
      talk.rejected.push_back(context + ": HEAD out of range");
      forms.clear(); upos.clear(); deprel.clear(); heads.clear();
      return;
    }
  }
  tree.rebuild_children();
  try {
    tree.validate(context);
    talk.sentences.push_back(std::move(tree));
  } catch (const DataError& e) {
    talk.rejected.push_back(e.what());
  }
  forms.clear();
  upos.clear();
  deprel.clear();
  heads.clear();
}

}  // namespace

std::vector<TalkTrees> read_conllu(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CoNLL-U file '" + path + "'");
  std::vector<TalkTrees> talks;
  TalkTrees current;
  bool have_talk = false;

  std::vector<std::string> forms, upos, deprel;
  std::vector<int> heads;
  std::string line;
  std::size_t lineno = 0;
  std::size_t sentno = 0;

  auto context = [&]() {
    return path + ": talk '" + current.talk_id + "' sentence " + std::to_string(sentno);
  };
  auto close_talk = [&]() {
    if (!have_talk) return;
    finish_sentence(forms, upos, deprel, heads, current, context());
    if (current.sentences.empty())
      throw DataError(path + ": talk '" + current.talk_id + "' has no valid sentences");
    talks.push_back(std::move(current));
    current = TalkTrees{};
    have_talk = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish_sentence(forms, upos, deprel, heads, current, context());
      continue;
    }
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (line.find("talk_id") != std::string::npos && eq != std::string::npos) {
        close_talk();
        current.talk_id = trim_copy(line.substr(eq + 1));
        have_talk = true;
        sentno = 0;
      }
      continue;
    }
    if (!have_talk)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": token line before any '# talk_id = ...' comment");
    auto cols = split_on(line, '\t');
    if (cols.size() != 10)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 10 tab-separated columns");
    if (!plain_token_id(cols[0])) continue;
    if (forms.empty()) ++sentno;
    forms.push_back(cols[1]);
    upos.push_back(cols[3]);
    deprel.push_back(cols[7]);
    heads.push_back(static_cast<int>(parse_int(cols[6], path + ":" + std::to_string(lineno) + " HEAD")));
  }
  close_talk();
  return talks;
}

void write_conllu(const std::string& path, const std::vector<TalkTrees>& talks) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CoNLL-U file '" + path + "'");
  for (const auto& talk : talks) {
    out << "# talk_id = " << talk.talk_id << "\n";
    for (const auto& tree : talk.sentences) {
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        out << (i + 1) << '\t' << n.form << '\t' << "_" << '\t' << n.upos << '\t' << "_" << '\t'
            << "_" << '\t' << (n.parent < 0 ? 0 : n.parent + 1) << '\t' << n.deprel << '\t' << "_"
            << '\t' << "_" << "\n";
      }
      out << "\n";
    }
  }
}

void TagVocab::add(const std::string& tag) {
  if (finalized_) throw Error("TagVocab: add after finalize");
  pending_.push_back(tag);
}

void TagVocab::finalize() {
  if (finalized_) return;
  std::sort(pending_.begin(), pending_.end());
  pending_.erase(std::unique(pending_.begin(), pending_.end()), pending_.end());
  for (const auto& tag : pending_) {
    tag_to_index_[tag] = static_cast<int>(index_to_tag_.size());
    index_to_tag_.push_back(tag);
  }
  pending_.clear();
  finalized_ = true;
}

int TagVocab::index_of(const std::string& tag) const {
  if (!finalized_) throw Error("TagVocab: lookup before finalize");
  auto it = tag_to_index_.find(tag);
  return it == tag_to_index_.end() ? kUnkIndex : it->second;
}

std::uint64_t TagVocab::hash() const {
  std::uint64_t h = fnv1a64("tagvocab");
  for (const auto& tag : index_to_tag_) {
    h = fnv1a64(tag, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void TagVocab::save_json(const std::string& path) const {
  json j = json::object();
  for (const auto& [tag, idx] : tag_to_index_) j[tag] = idx;
  j["<UNK>"] = kUnkIndex;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file '" + path + "'");
  out << j.dump(2) << "\n";
}

TagVocab TagVocab::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  std::vector<std::pair<int, std::string>> entries;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "<UNK>") entries.emplace_back(it.value().get<int>(), it.key());
  std::sort(entries.begin(), entries.end());
  TagVocab vocab;
  for (const auto& [idx, tag] : entries) {
    if (idx != static_cast<int>(vocab.index_to_tag_.size()))
      throw DataError(path + ": vocabulary indices are not dense");
    vocab.tag_to_index_[tag] = idx;
    vocab.index_to_tag_.push_back(tag);
  }
  vocab.finalized_ = true;
  return vocab;
}

AuxVocabs build_aux_vocabs(const std::vector<const TalkTrees*>& talks) {
  AuxVocabs vocabs;
  for (const TalkTrees* talk : talks) {
    for (const auto& tree : talk->sentences) {
      for (const auto& node : tree.nodes) {
        vocabs.pos.add(node.upos);
        vocabs.dep.add(node.deprel);
      }
    }
  }
  vocabs.pos.finalize();
  vocabs.dep.finalize();
  return vocabs;
}

}  // namespace tedrate::textpipe
