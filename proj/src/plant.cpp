#include "cml/plant.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include "json.hpp"

#include "cml/jsonl.hpp"

namespace cml {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::set<std::string>& state_like_verbs() {
  static const std::set<std::string> verbs = {
      "standing", "sitting", "lying", "open", "closed", "lit", "broken"};
  return verbs;
}

// Function words skipped when locating the content word of a spatial phrase.
const std::set<std::string>& phrase_function_words() {
  static const std::set<std::string> words = {"in", "to", "of", "on", "at",
                                              "the", "a", "an"};
  return words;
}

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_nominal(Pos pos) { return pos == Pos::NOUN || pos == Pos::PROPN; }

}  // namespace

Pos pos_from_string(const std::string& tag) {
  const std::string t = lower(tag);
  if (t == "noun") return Pos::NOUN;
  if (t == "propn") return Pos::PROPN;
  if (t == "adj") return Pos::ADJ;
  if (t == "num") return Pos::NUM;
  if (t == "adp") return Pos::ADP;
  if (t == "verb") return Pos::VERB;
  if (t == "det") return Pos::DET;
  if (t == "pron") return Pos::PRON;
  if (t == "aux") return Pos::AUX;
  if (t == "adv") return Pos::ADV;
  if (t == "cconj" || t == "conj") return Pos::CCONJ;
  if (t == "sconj") return Pos::SCONJ;
  if (t == "part") return Pos::PART;
  if (t == "punct") return Pos::PUNCT;
  if (t == "sym") return Pos::SYM;
  if (t == "intj") return Pos::INTJ;
  return Pos::X;
}

std::string pos_to_string(Pos pos) {
  switch (pos) {
    case Pos::NOUN: return "NOUN";
    case Pos::PROPN: return "PROPN";
    case Pos::ADJ: return "ADJ";
    case Pos::NUM: return "NUM";
    case Pos::ADP: return "ADP";
    case Pos::VERB: return "VERB";
    case Pos::DET: return "DET";
    case Pos::PRON: return "PRON";
    case Pos::AUX: return "AUX";
    case Pos::ADV: return "ADV";
    case Pos::CCONJ: return "CCONJ";
    case Pos::SCONJ: return "SCONJ";
    case Pos::PART: return "PART";
    case Pos::PUNCT: return "PUNCT";
    case Pos::SYM: return "SYM";
    case Pos::INTJ: return "INTJ";
    case Pos::X: return "X";
  }
  return "X";
}

bool pos_in_filter_set(Pos pos) {
  switch (pos) {
    case Pos::NOUN:
    case Pos::PROPN:
    case Pos::ADJ:
    case Pos::NUM:
    case Pos::ADP:
    case Pos::VERB:
      return true;
    default:
      return false;
  }
}

std::string category_to_string(Category c) {
  switch (c) {
    case Category::attribute: return "attribute";
    case Category::object: return "object";
    case Category::relation: return "relation";
  }
  return "object";
}

Category category_from_string(const std::string& s) {
  if (s == "attribute") return Category::attribute;
  if (s == "object") return Category::object;
  if (s == "relation") return Category::relation;
  throw UnknownCategoryError("unknown category: " + s);
}

// ---- spatial lexicon ----

SpatialLexicon SpatialLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  SpatialLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::vector<std::string> words;
    std::string word;
    for (char ch : line) {
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!word.empty()) words.push_back(lower(word));
        word.clear();
      } else {
        word.push_back(ch);
      }
    }
    if (!word.empty()) words.push_back(lower(word));
    if (words.empty()) continue;
    if (words.size() == 1)
      lex.prepositions.insert(words[0]);
    else
      lex.phrases.push_back(words);
  }
  return lex;
}

SpatialLexicon SpatialLexicon::builtin() {
  SpatialLexicon lex;
  lex.prepositions = {"on",     "in",      "under",   "above", "below",
                      "behind", "beside",  "between", "near",  "over",
                      "inside", "outside", "left",    "right", "front"};
  lex.phrases = {{"in", "front", "of"},
                 {"to", "the", "left", "of"},
                 {"to", "the", "right", "of"},
                 {"on", "top", "of"},
                 {"next", "to"}};
  return lex;
}

std::vector<std::pair<std::size_t, std::size_t>> SpatialLexicon::phrase_spans(
    const TaggedCaption& caption) const {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  const std::size_t n = caption.tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& phrase : phrases) {
      if (i + phrase.size() > n) continue;
      bool match = true;
      for (std::size_t k = 0; k < phrase.size(); ++k) {
        if (lower(caption.tokens[i + k].lemma) != phrase[k]) {
          match = false;
          break;
        }
      }
      if (match) {
        spans.emplace_back(i, i + phrase.size());
        break;
      }
    }
  }
  return spans;
}

// ---- anchor choice ----

const TaggedCaption& pick_anchor_caption(const std::vector<TaggedCaption>& captions) {
  if (captions.empty()) throw EmptyInputError("no captions to pick an anchor from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < captions.size(); ++i)
    if (captions[i].tokens.size() > captions[best].tokens.size()) best = i;
  return captions[best];
}

// ---- classification ----

namespace {

bool caption_has_deps(const TaggedCaption& caption) {
  for (const auto& tok : caption.tokens)
    if (!tok.dep.empty()) return true;
  return false;
}

bool has_nominal_dependent(const TaggedCaption& caption, std::size_t adp_index) {
  const auto& tokens = caption.tokens;
  if (caption_has_deps(caption)) {
    // prep -> pobj style child, or the adposition case-marking a nominal head.
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (tokens[j].head == static_cast<int>(adp_index) && is_nominal(tokens[j].pos) &&
          (tokens[j].dep == "pobj" || tokens[j].dep == "obj"))
        return true;
    }
    const Token& adp = tokens[adp_index];
    if (adp.dep == "case" && adp.head >= 0 &&
        adp.head < static_cast<int>(tokens.size()) &&
        is_nominal(tokens[static_cast<std::size_t>(adp.head)].pos))
      return true;
    return false;
  }
  // Positional route: a nominal within the next three tokens, skipping
  // determiners and modifiers.
  std::size_t looked = 0;
  for (std::size_t j = adp_index + 1; j < tokens.size() && looked < 3; ++j, ++looked) {
    if (is_nominal(tokens[j].pos)) return true;
    if (tokens[j].pos == Pos::DET || tokens[j].pos == Pos::ADJ ||
        tokens[j].pos == Pos::NUM)
      continue;
    break;
  }
  return false;
}

bool is_transitive(const TaggedCaption& caption, std::size_t verb_index) {
  const auto& tokens = caption.tokens;
  if (caption_has_deps(caption)) {
    bool has_subject = false;
    bool has_object = false;
    for (const auto& tok : tokens) {
      if (tok.head != static_cast<int>(verb_index)) continue;
      if (tok.dep.rfind("nsubj", 0) == 0) has_subject = true;
      if (tok.dep == "dobj" || tok.dep == "obj") has_object = true;
    }
    return has_subject && has_object;
  }
  // Positional route: a nominal on the left, and a nominal on the right
  // before any adposition opens a prepositional phrase.
  bool has_subject = false;
  for (std::size_t j = 0; j < verb_index; ++j)
    if (is_nominal(tokens[j].pos) || tokens[j].pos == Pos::PRON) has_subject = true;
  if (!has_subject) return false;
  for (std::size_t j = verb_index + 1; j < tokens.size(); ++j) {
    if (is_nominal(tokens[j].pos) || tokens[j].pos == Pos::PRON) return true;
    if (tokens[j].pos == Pos::DET || tokens[j].pos == Pos::ADJ ||
        tokens[j].pos == Pos::NUM || tokens[j].pos == Pos::ADV)
      continue;
    return false;
  }
  return false;
}

bool is_state_like(const Token& token) {
  return state_like_verbs().count(lower(token.lemma)) > 0 ||
         state_like_verbs().count(lower(token.surface)) > 0;
}

}  // namespace

Category classify_composition(const TaggedCaption& caption,
                              const KeywordCandidate& candidate,
                              const SpatialLexicon& spatial) {
  for (const auto& [begin, end] : spatial.phrase_spans(caption))
    if (candidate.token_start >= begin && candidate.token_start < end)
      return Category::relation;

  std::size_t head = candidate.token_start;
  if (candidate.span == 2 && head + 1 < caption.tokens.size() &&
      is_nominal(caption.tokens[head + 1].pos))
    head = head + 1;
  const Token& token = caption.tokens[head];
  switch (token.pos) {
    case Pos::ADJ:
    case Pos::NUM:
      return Category::attribute;
    case Pos::VERB:
      if (is_state_like(token)) return Category::attribute;
      if (is_transitive(caption, head)) return Category::relation;
      return Category::attribute;
    case Pos::ADP:
      if (spatial.prepositions.count(lower(token.lemma)) &&
          has_nominal_dependent(caption, head))
        return Category::relation;
      return Category::attribute;
    case Pos::NOUN:
    case Pos::PROPN:
      return Category::object;
    default:
      return Category::attribute;
  }
}

// ---- candidate extraction ----

std::vector<KeywordCandidate> extract_candidates(const TaggedCaption& caption,
                                                 const ConcretenessLexicon& lexicon,
                                                 const SpatialLexicon& spatial) {
  const auto& tokens = caption.tokens;
  const std::size_t n = tokens.size();
  std::vector<std::string> lemmas(n);
  for (std::size_t i = 0; i < n; ++i) lemmas[i] = lower(tokens[i].lemma);

  const auto spans = spatial.phrase_spans(caption);
  std::vector<int> phrase_of(n, -1);
  for (std::size_t s = 0; s < spans.size(); ++s)
    for (std::size_t i = spans[s].first; i < spans[s].second; ++i)
      phrase_of[i] = static_cast<int>(s);

  std::vector<KeywordCandidate> candidates;
  std::size_t i = 0;
  while (i < n) {
    if (phrase_of[i] >= 0) {
      const auto [begin, end] = spans[static_cast<std::size_t>(phrase_of[i])];
      if (i == begin) {
        // The phrase collapses into one relation candidate at its content word.
        std::size_t focal = begin;
        for (std::size_t k = begin; k < end; ++k) {
          if (!phrase_function_words().count(lemmas[k])) {
            focal = k;
            break;
          }
        }
        KeywordCandidate cand;
        cand.token_start = focal;
        cand.span = 1;
        cand.lemma_key = lemmas[focal];
        cand.surface = tokens[focal].surface;
        cand.category = Category::relation;
        if (auto rating = lexicon.rating(lemmas[focal])) {
          cand.concreteness = *rating;
          cand.scored = true;
        }
        candidates.push_back(std::move(cand));
      }
      i = end;
      continue;
    }
    const Token& token = tokens[i];
    if (!pos_in_filter_set(token.pos)) {
      ++i;
      continue;
    }
    if (token.pos == Pos::ADP) {
      // Only spatial prepositions heading a nominal qualify; other
      // adpositions stay function words.
      if (spatial.prepositions.count(lemmas[i]) && has_nominal_dependent(caption, i)) {
        KeywordCandidate cand;
        cand.token_start = i;
        cand.span = 1;
        cand.lemma_key = lemmas[i];
        cand.surface = token.surface;
        cand.category = Category::relation;
        if (auto rating = lexicon.rating(lemmas[i])) {
          cand.concreteness = *rating;
          cand.scored = true;
        }
        candidates.push_back(std::move(cand));
      }
      ++i;
      continue;
    }
    KeywordCandidate cand;
    cand.token_start = i;
    auto hit = lexicon.lookup(lemmas, i);
    if (hit && hit->span == 2 && phrase_of[i + 1] >= 0) hit = std::nullopt;
    if (hit && hit->span == 2) {
      cand.span = 2;
      cand.lemma_key = normalize_key(lemmas[i] + " " + lemmas[i + 1]);
      cand.surface = tokens[i].surface + " " + tokens[i + 1].surface;
      cand.concreteness = hit->rating;
      cand.scored = true;
    } else {
      cand.span = 1;
      cand.lemma_key = lemmas[i];
      cand.surface = token.surface;
      if (hit) {
        cand.concreteness = hit->rating;
        cand.scored = true;
      }
    }
    cand.category = classify_composition(caption, cand, spatial);
    i += cand.span;
    candidates.push_back(std::move(cand));
  }
  return candidates;
}

// ---- quota + sampling ----

Category choose_category(const std::set<Category>& available, QuotaState& quota) {
  if (available.empty()) throw EmptyInputError("no categories available");
  if (available.count(Category::relation)) {
    ++quota.n_relation;
    return Category::relation;
  }
  const bool has_attr = available.count(Category::attribute) > 0;
  const bool has_obj = available.count(Category::object) > 0;
  Category chosen;
  if (has_attr && has_obj) {
    const double assigned = static_cast<double>(quota.n_attribute + quota.n_object);
    const double deficit_attr =
        quota.target_attribute * assigned - static_cast<double>(quota.n_attribute);
    const double deficit_obj =
        quota.target_object * assigned - static_cast<double>(quota.n_object);
    chosen = deficit_attr > deficit_obj ? Category::attribute : Category::object;
  } else {
    chosen = has_attr ? Category::attribute : Category::object;
  }
  if (chosen == Category::attribute)
    ++quota.n_attribute;
  else
    ++quota.n_object;
  return chosen;
}

const KeywordCandidate& sample_keyword(const std::vector<KeywordCandidate>& candidates,
                                       const SelectionPolicy& policy,
                                       std::mt19937_64& rng) {
  if (candidates.empty()) throw EmptyInputError("no candidates to sample from");
  if (policy.top_k < 1) throw InvalidConfigError("top_k must be >= 1");
  if (!(policy.sample_temperature > 0.0))
    throw InvalidConfigError("sample_temperature must be positive");

  if (policy.mode == SelectionPolicy::Mode::random) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  }

  const bool high = policy.mode == SelectionPolicy::Mode::high_concreteness;
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = candidates[a].concreteness;
    const double rb = candidates[b].concreteness;
    if (ra != rb) return high ? ra > rb : ra < rb;
    return candidates[a].token_start < candidates[b].token_start;
  });
  const std::size_t keep =
      std::min<std::size_t>(static_cast<std::size_t>(policy.top_k), order.size());

  // Softmax over (possibly negated) ratings, max-shifted.
  std::vector<double> weights(keep);
  double max_score = -1e300;
  for (std::size_t k = 0; k < keep; ++k) {
    const double r = candidates[order[k]].concreteness;
    const double score = (high ? r : -r) / policy.sample_temperature;
    weights[k] = score;
    max_score = std::max(max_score, score);
  }
  double total = 0.0;
  for (double& w : weights) {
    w = std::exp(w - max_score);
    total += w;
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < keep; ++k) {
    acc += weights[k];
    if (u < acc) return candidates[order[k]];
  }
  return candidates[order[keep - 1]];
}

// ---- selection pipeline ----

namespace {

struct Extraction {
  bool valid = false;
  std::string anchor_text;
  std::vector<KeywordCandidate> candidates;
};

std::vector<Extraction> extract_all(const std::vector<CorpusRecord>& corpus,
                                    const ConcretenessLexicon& lexicon,
                                    const SpatialLexicon& spatial) {
  std::vector<Extraction> out(corpus.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (corpus[i].captions.empty()) continue;
      const TaggedCaption& anchor = pick_anchor_caption(corpus[i].captions);
      out[i].valid = true;
      out[i].anchor_text = anchor.text;
      out[i].candidates = extract_candidates(anchor, lexicon, spatial);
    }
  };
  const std::size_t n = corpus.size();
  std::size_t n_threads = std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<std::size_t>(n_threads, 8);
  if (n < 64 || n_threads <= 1) {
    work(0, n);
    return out;
  }
  std::vector<std::future<void>> futures;
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    futures.push_back(std::async(std::launch::async, work, begin, end));
  }
  for (auto& f : futures) f.get();
  return out;
}

}  // namespace

std::vector<SelectionRecord> select_keywords(const std::vector<CorpusRecord>& corpus,
                                             const ConcretenessLexicon& lexicon,
                                             const SpatialLexicon& spatial,
                                             const SelectionPolicy& policy,
                                             QuotaState quota,
                                             SelectionRunReport* report) {
  // Extraction fans out; category assignment and sampling run sequentially in
  // corpus order so identical inputs and seed give identical output.
  const std::vector<Extraction> extractions = extract_all(corpus, lexicon, spatial);

  std::vector<SelectionRecord> records;
  records.reserve(corpus.size());
  SelectionRunReport local;
  std::mt19937_64 rng(policy.seed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Extraction& ext = extractions[i];
    if (!ext.valid || ext.candidates.empty()) {
      ++local.skipped_no_candidates;
      continue;
    }
    std::set<Category> available;
    for (const auto& cand : ext.candidates) available.insert(cand.category);
    const Category chosen = choose_category(available, quota);

    std::vector<KeywordCandidate> scored;
    std::vector<KeywordCandidate> unscored;
    for (const auto& cand : ext.candidates) {
      if (cand.category != chosen) continue;
      (cand.scored ? scored : unscored).push_back(cand);
    }
    SelectionRecord record;
    record.id = corpus[i].id;
    record.anchor_caption = ext.anchor_text;
    record.category = chosen;
    if (!scored.empty()) {
      const KeywordCandidate& kw = sample_keyword(scored, policy, rng);
      record.keyword = kw.surface;
      record.span = kw.span;
      record.concreteness = kw.concreteness;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, unscored.size() - 1);
      const KeywordCandidate& kw = unscored[pick(rng)];
      record.keyword = kw.surface;
      record.span = kw.span;
      record.concreteness = 3.0;  // out-of-lexicon sentinel
      ++local.fallback_used;
    }
    records.push_back(std::move(record));
    ++local.processed;
  }
  local.quota = quota;
  if (report) *report = local;
  return records;
}

// ---- fallback tagger ----

namespace {

const std::set<std::string>& det_words() {
  static const std::set<std::string> words = {"a",     "an",    "the", "this",
                                              "that",  "these", "those"};
  return words;
}

const std::set<std::string>& pron_words() {
  static const std::set<std::string> words = {
      "he", "she", "it",  "they", "we",   "you",   "i",   "him", "her", "them",
      "us", "me",  "his", "hers", "its",  "their", "our", "your", "my"};
  return words;
}

const std::set<std::string>& aux_words() {
  static const std::set<std::string> words = {
      "is",  "are",  "was",  "were", "be",   "been",  "being", "am",
      "has", "have", "had",  "do",   "does", "did",   "will",  "would",
      "can", "could", "shall", "should", "may", "might", "must"};
  return words;
}

const std::set<std::string>& cconj_words() {
  static const std::set<std::string> words = {"and", "or", "but", "nor", "so", "yet"};
  return words;
}

const std::set<std::string>& sconj_words() {
  static const std::set<std::string> words = {"because", "while", "although",
                                              "though",  "if",    "when", "since"};
  return words;
}

const std::set<std::string>& adp_words() {
  static const std::set<std::string> words = {
      "of",      "in",      "on",      "at",      "by",      "with",
      "from",    "to",      "under",   "over",    "above",   "below",
      "behind",  "beside",  "between", "near",    "inside",  "outside",
      "into",    "onto",    "across",  "along",   "around",  "through",
      "during",  "against", "beneath", "underneath", "toward", "towards",
      "up",      "down",    "off"};
  return words;
}

const std::set<std::string>& adv_words() {
  static const std::set<std::string> words = {"very", "quite",  "too",   "now",
                                              "then", "here",   "there", "always",
                                              "never", "often"};
  return words;
}

const std::set<std::string>& adj_words() {
  static const std::set<std::string> words = {
      "red",     "blue",   "green",  "yellow",   "orange", "purple", "pink",
      "white",   "black",  "brown",  "golden",   "gray",   "grey",   "wooden",
      "plastic", "metal",  "glass",  "cloudy",   "clear",  "sunny",  "rainy",
      "old",     "young",  "new",    "small",    "big",    "large",  "tall",
      "short",   "happy",  "sad",    "quiet",    "loud",   "strange", "gentle",
      "bright",  "dark",   "shiny",  "dusty",    "colorful", "empty", "full",
      "fresh",   "soft",   "warm",   "cold",     "tiny",   "huge",   "round",
      "flat",    "broken", "open",   "closed",   "lit"};
  return words;
}

const std::set<std::string>& num_words() {
  static const std::set<std::string> words = {"one", "two",   "three", "four",
                                              "five", "six",  "seven", "eight",
                                              "nine", "ten"};
  return words;
}

Pos guess_pos(const std::string& lemma) {
  if (det_words().count(lemma)) return Pos::DET;
  if (pron_words().count(lemma)) return Pos::PRON;
  if (aux_words().count(lemma)) return Pos::AUX;
  if (cconj_words().count(lemma)) return Pos::CCONJ;
  if (sconj_words().count(lemma)) return Pos::SCONJ;
  if (adp_words().count(lemma)) return Pos::ADP;
  if (adj_words().count(lemma)) return Pos::ADJ;
  if (num_words().count(lemma)) return Pos::NUM;
  if (!lemma.empty() && std::isdigit(static_cast<unsigned char>(lemma[0])))
    return Pos::NUM;
  if (adv_words().count(lemma)) return Pos::ADV;
  if (lemma.size() > 4 && (lemma.ends_with("ing") || lemma.ends_with("ed")))
    return Pos::VERB;
  if (lemma.size() > 3 && lemma.ends_with("ly")) return Pos::ADV;
  return Pos::NOUN;
}

}  // namespace

TaggedCaption fallback_tag(const std::string& id, const std::string& text) {
  TaggedCaption caption;
  caption.id = id;
  caption.text = text;
  std::string word;
  auto flush_word = [&]() {
    if (word.empty()) return;
    Token tok;
    tok.surface = word;
    tok.lemma = lower(word);
    tok.pos = guess_pos(tok.lemma);
    caption.tokens.push_back(std::move(tok));
    word.clear();
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush_word();
    } else if (std::string(".,!?;:").find(ch) != std::string::npos) {
      flush_word();
      Token tok;
      tok.surface = std::string(1, ch);
      tok.lemma = tok.surface;
      tok.pos = Pos::PUNCT;
      caption.tokens.push_back(std::move(tok));
    } else {
      word.push_back(ch);
    }
  }
  flush_word();
  return caption;
}

// ---- JSONL I/O ----

std::vector<CorpusRecord> read_corpus_jsonl(const std::string& path) {
  std::vector<CorpusRecord> corpus;
  for_each_jsonl_line(path, [&](std::size_t line_no, const json& j) {
    CorpusRecord record;
    if (!j.contains("id")) throw ParseError(line_no, "record missing id");
    record.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    record.image_ref = j.value("image_ref", std::string());
    if (!j.contains("captions") || !j["captions"].is_array())
      throw ParseError(line_no, "record missing captions array");
    for (const auto& c : j["captions"]) {
      if (!c.contains("text")) throw ParseError(line_no, "caption missing text");
      const std::string text = c["text"].get<std::string>();
      if (c.contains("tokens") && c["tokens"].is_array() && !c["tokens"].empty()) {
        TaggedCaption caption;
        caption.id = record.id;
        caption.text = text;
        for (const auto& t : c["tokens"]) {
          Token tok;
          tok.surface = t.value("t", std::string());
          tok.lemma = t.value("lemma", lower(tok.surface));
          tok.pos = pos_from_string(t.value("pos", std::string("X")));
          tok.dep = t.value("dep", std::string());
          tok.head = t.value("head", -1);
          caption.tokens.push_back(std::move(tok));
        }
        for (const auto& tok : caption.tokens) {
          if (tok.head >= static_cast<int>(caption.tokens.size()))
            throw ParseError(line_no, "token head index out of range");
        }
        record.captions.push_back(std::move(caption));
      } else {
        record.captions.push_back(fallback_tag(record.id, text));
      }
    }
    corpus.push_back(std::move(record));
  });
  return corpus;
}

void write_selections_jsonl(const std::string& path,
                            const std::vector<SelectionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& record : records) {
    ordered_json j;
    j["id"] = record.id;
    j["anchor_caption"] = record.anchor_caption;
    j["keyword"] = record.keyword;
    j["span"] = record.span;
    j["category"] = category_to_string(record.category);
    j["concreteness"] = record.concreteness;
    out << j.dump() << "\n";
  }
}

std::vector<SelectionRecord> read_selections_jsonl(const std::string& path) {
  std::vector<SelectionRecord> records;
  for_each_jsonl_line(path, [&](std::size_t line_no, const json& j) {
    SelectionRecord record;
    try {
      record.id = j.at("id").get<std::string>();
      record.anchor_caption = j.at("anchor_caption").get<std::string>();
      record.keyword = j.at("keyword").get<std::string>();
      record.span = j.at("span").get<std::size_t>();
      record.category = category_from_string(j.at("category").get<std::string>());
      record.concreteness = j.at("concreteness").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    records.push_back(std::move(record));
  });
  return records;
}

}  // namespace cml
