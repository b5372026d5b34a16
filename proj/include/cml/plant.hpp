#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cml/lexicon.hpp"

namespace cml {

// Universal POS tags as produced by standard annotation tools. The module
// ingests pre-tagged captions; only the fixture fallback tagger assigns tags
// itself.
enum class Pos {
  NOUN, PROPN, ADJ, NUM, ADP, VERB,
  DET, PRON, AUX, ADV, CCONJ, SCONJ, PART, PUNCT, SYM, INTJ, X
};

Pos pos_from_string(const std::string& tag);
std::string pos_to_string(Pos pos);

// True for the tags eligible as perturbation targets; function words
// (determiners, conjunctions, ...) are excluded.
bool pos_in_filter_set(Pos pos);

struct Token {
  std::string surface;
  std::string lemma;
  Pos pos = Pos::X;
  std::string dep;  // optional dependency relation label
  int head = -1;    // optional head token index
};

struct TaggedCaption {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
};

enum class Category { attribute, object, relation };

std::string category_to_string(Category c);
Category category_from_string(const std::string& s);

struct KeywordCandidate {
  std::size_t token_start = 0;
  std::size_t span = 1;        // 1 or 2 tokens
  std::string lemma_key;       // normalized lemma (bigrams space-joined)
  std::string surface;         // surface form as it appears in the caption
  double concreteness = 0.0;   // valid only when scored
  bool scored = false;         // false: keyword missing from the lexicon
  Category category = Category::object;
};

struct SelectionPolicy {
  enum class Mode { high_concreteness, low_concreteness, random };
  Mode mode = Mode::high_concreteness;
  int top_k = 3;
  double sample_temperature = 1.0;
  std::uint64_t seed = 0;
};

// Running attribute/object totals and their target split. Relations bypass
// the quota entirely.
struct QuotaState {
  double target_attribute = 0.5;
  double target_object = 0.5;
  long n_attribute = 0;
  long n_object = 0;
  long n_relation = 0;
};

// Spatial prepositions plus multi-word spatial phrases, loaded from a plain
// text file (one entry per line, '#' comments).
struct SpatialLexicon {
  std::set<std::string> prepositions;
  std::vector<std::vector<std::string>> phrases;  // lemma sequences

  static SpatialLexicon load(const std::string& path);
  static SpatialLexicon builtin();

  // [start, end) ranges of phrase occurrences in the caption's lemmas.
  std::vector<std::pair<std::size_t, std::size_t>> phrase_spans(
      const TaggedCaption& caption) const;
};

struct CorpusRecord {
  std::string id;
  std::string image_ref;
  std::vector<TaggedCaption> captions;
};

struct SelectionRecord {
  std::string id;
  std::string anchor_caption;
  std::string keyword;
  std::size_t span = 1;
  Category category = Category::object;
  double concreteness = 0.0;
};

// Caption with the most tokens; ties break toward the lowest index.
const TaggedCaption& pick_anchor_caption(const std::vector<TaggedCaption>& captions);

// Compositional category of a candidate within its caption.
Category classify_composition(const TaggedCaption& caption,
                              const KeywordCandidate& candidate,
                              const SpatialLexicon& spatial);

// Left-to-right scan with bigram-first lexicon lookup and the POS filter.
// Candidates without a rating are returned with scored=false and act as the
// fallback pool. Tokens inside a multi-word spatial phrase collapse into one
// relation candidate at the phrase's content word.
std::vector<KeywordCandidate> extract_candidates(const TaggedCaption& caption,
                                                 const ConcretenessLexicon& lexicon,
                                                 const SpatialLexicon& spatial);

// Relation wins whenever available; otherwise the attribute/object deficit
// rule applies (ties toward object). Updates the quota counts.
Category choose_category(const std::set<Category>& available, QuotaState& quota);

// Concreteness-biased draw from one category's scored candidates.
const KeywordCandidate& sample_keyword(const std::vector<KeywordCandidate>& candidates,
                                       const SelectionPolicy& policy,
                                       std::mt19937_64& rng);

struct SelectionRunReport {
  std::size_t processed = 0;
  std::size_t skipped_no_candidates = 0;
  std::size_t fallback_used = 0;
  QuotaState quota;
};

// Full selection pass over a corpus: anchor choice and candidate extraction
// fan out per record; category assignment and sampling run sequentially in
// corpus order so results are reproducible.
std::vector<SelectionRecord> select_keywords(const std::vector<CorpusRecord>& corpus,
                                             const ConcretenessLexicon& lexicon,
                                             const SpatialLexicon& spatial,
                                             const SelectionPolicy& policy,
                                             QuotaState quota,
                                             SelectionRunReport* report = nullptr);

// Rule/word-list tagger used when corpus records carry no token annotations.
TaggedCaption fallback_tag(const std::string& id, const std::string& text);

// ---- JSONL I/O ----
std::vector<CorpusRecord> read_corpus_jsonl(const std::string& path);
void write_selections_jsonl(const std::string& path,
                            const std::vector<SelectionRecord>& records);
std::vector<SelectionRecord> read_selections_jsonl(const std::string& path);

}  // namespace cml
