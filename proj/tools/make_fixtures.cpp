// Regenerates the deterministic test fixtures: a concreteness lexicon and a
// 500-caption pre-tagged corpus assembled from slot templates. Run from the
// repository root:
//   cementlab-make-fixtures [out_dir]   (default tests/fixtures)

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

using nlohmann::ordered_json;

namespace {

struct Word {
  const char* surface;
  const char* pos;
  double rating;
};

// Nouns span the whole rating scale so the scored candidate pools have real
// spread; verbs split into transitive / state / intransitive roles.
const std::vector<Word> kNouns = {
    {"dog", "NOUN", 4.85},     {"cat", "NOUN", 4.86},    {"table", "NOUN", 4.90},
    {"car", "NOUN", 4.92},     {"helmet", "NOUN", 4.80}, {"boat", "NOUN", 4.80},
    {"lamp", "NOUN", 4.72},    {"sofa", "NOUN", 4.90},   {"tree", "NOUN", 4.85},
    {"park", "NOUN", 4.52},    {"woman", "NOUN", 4.76},  {"child", "NOUN", 4.58},
    {"person", "NOUN", 4.45},  {"bicycle", "NOUN", 4.90}, {"guitar", "NOUN", 4.95},
    {"pizza", "NOUN", 4.98},   {"mountain", "NOUN", 4.57}, {"river", "NOUN", 4.79},
    {"house", "NOUN", 4.95},   {"window", "NOUN", 4.84}, {"chair", "NOUN", 4.98},
    {"door", "NOUN", 4.90},    {"garden", "NOUN", 4.60}, {"bridge", "NOUN", 4.81},
    {"shadow", "NOUN", 3.95},  {"smoke", "NOUN", 4.10},  {"music", "NOUN", 3.10},
    {"song", "NOUN", 2.90},    {"story", "NOUN", 2.30},  {"breeze", "NOUN", 3.20},
    {"crowd", "NOUN", 4.00},   {"noise", "NOUN", 3.20},  {"idea", "NOUN", 1.61},
    {"dream", "NOUN", 1.90},   {"rumor", "NOUN", 1.72},  {"moment", "NOUN", 2.20},
    {"silence", "NOUN", 2.41}, {"freedom", "NOUN", 1.56}, {"style", "NOUN", 2.00},
    {"secret", "NOUN", 1.95},  {"memory", "NOUN", 2.10}, {"feeling", "NOUN", 2.28},
};

const std::vector<Word> kAdjectives = {
    {"red", "ADJ", 4.40},      {"blue", "ADJ", 4.35},    {"green", "ADJ", 4.36},
    {"yellow", "ADJ", 4.33},   {"wooden", "ADJ", 4.30},  {"plastic", "ADJ", 4.43},
    {"golden", "ADJ", 4.10},   {"cloudy", "ADJ", 3.90},  {"bright", "ADJ", 3.45},
    {"dark", "ADJ", 3.50},     {"old", "ADJ", 3.05},     {"young", "ADJ", 3.10},
    {"small", "ADJ", 3.35},    {"big", "ADJ", 3.40},     {"tall", "ADJ", 3.55},
    {"round", "ADJ", 3.90},    {"happy", "ADJ", 2.56},   {"sad", "ADJ", 2.40},
    {"quiet", "ADJ", 2.20},    {"loud", "ADJ", 2.70},    {"strange", "ADJ", 1.84},
    {"gentle", "ADJ", 2.30},   {"calm", "ADJ", 2.25},    {"pleasant", "ADJ", 1.86},
    {"colorful", "ADJ", 3.80}, {"shiny", "ADJ", 4.00},   {"dusty", "ADJ", 3.85},
};

const std::vector<Word> kTransitiveVerbs = {
    {"holding", "VERB", 4.05},  {"wearing", "VERB", 4.20}, {"riding", "VERB", 4.35},
    {"carrying", "VERB", 4.10}, {"pushing", "VERB", 4.00}, {"chasing", "VERB", 3.90},
    {"watching", "VERB", 3.30}, {"reading", "VERB", 4.20},
};

const std::vector<Word> kStateVerbs = {
    {"sitting", "VERB", 3.95}, {"standing", "VERB", 3.90}, {"lying", "VERB", 3.60},
};

const std::vector<Word> kIntransitiveVerbs = {
    {"running", "VERB", 4.30},  {"sleeping", "VERB", 4.00}, {"walking", "VERB", 4.25},
    {"jumping", "VERB", 4.15},  {"smiling", "VERB", 3.80},  {"waiting", "VERB", 2.90},
};

const std::vector<Word> kPrepositions = {
    {"under", "ADP", 3.30},  {"on", "ADP", 3.07},      {"above", "ADP", 3.10},
    {"behind", "ADP", 3.40}, {"beside", "ADP", 3.25},  {"near", "ADP", 2.90},
    {"over", "ADP", 2.95},   {"between", "ADP", 3.18}, {"inside", "ADP", 3.65},
    {"outside", "ADP", 3.55}, {"below", "ADP", 3.05},
};

// Content words of the multi-word spatial phrases plus loose bigram parts.
const std::vector<Word> kExtraWords = {
    {"front", "NOUN", 4.00}, {"top", "NOUN", 4.05},  {"next", "NOUN", 2.50},
    {"left", "NOUN", 3.20},  {"right", "NOUN", 3.10}, {"cup", "NOUN", 5.00},
    {"coffee", "NOUN", 4.89}, {"fire", "NOUN", 4.20}, {"hydrant", "NOUN", 4.64},
    {"kitchen", "NOUN", 4.70},
};

struct Bigram {
  const char* first;
  const char* second;
  double rating;
};

const std::vector<Bigram> kBigrams = {
    {"coffee", "cup", 4.90},
    {"fire", "hydrant", 4.80},
};

struct Phrase {
  std::vector<const char*> words;
  std::vector<const char*> pos;
};

const std::vector<Phrase> kPhrases = {
    {{"in", "front", "of"}, {"ADP", "NOUN", "ADP"}},
    {{"on", "top", "of"}, {"ADP", "NOUN", "ADP"}},
    {{"next", "to"}, {"NOUN", "ADP"}},
};

struct Tok {
  std::string surface;
  std::string pos;
};

std::string join_text(const std::vector<Tok>& tokens) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) text.push_back(' ');
    text += tokens[i].surface;
  }
  return text;
}

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  const Word& pick(const std::vector<Word>& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng_)];
  }

  const Word& pick_noun_distinct(const Word& other) {
    for (;;) {
      const Word& w = pick(kNouns);
      if (std::string(w.surface) != other.surface) return w;
    }
  }

  std::size_t pick_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(rng_);
  }

  // Relation-free: "A {adj} {noun} and a {adj} {noun}"
  std::vector<Tok> pair_scene() {
    const Word& a1 = pick(kAdjectives);
    const Word& n1 = pick(kNouns);
    const Word& a2 = pick(kAdjectives);
    const Word& n2 = pick_noun_distinct(n1);
    return {{"A", "DET"}, {a1.surface, a1.pos}, {n1.surface, n1.pos},
            {"and", "CCONJ"}, {"a", "DET"}, {a2.surface, a2.pos},
            {n2.surface, n2.pos}};
  }

  // Relation-free: "The {adj} {noun} was {adj}"
  std::vector<Tok> copula_scene() {
    const Word& a1 = pick(kAdjectives);
    const Word& n1 = pick(kNouns);
    const Word& a2 = pick(kAdjectives);
    return {{"The", "DET"}, {a1.surface, a1.pos}, {n1.surface, n1.pos},
            {"was", "AUX"}, {a2.surface, a2.pos}};
  }

  // Relation-free: "A {adj} {noun} {intransitive}"
  std::vector<Tok> action_scene() {
    const Word& a1 = pick(kAdjectives);
    const Word& n1 = pick(kNouns);
    const Word& v = pick(kIntransitiveVerbs);
    return {{"A", "DET"}, {a1.surface, a1.pos}, {n1.surface, n1.pos},
            {v.surface, v.pos}};
  }

  // Relation-free with a bigram: "A {adj} {bigram} and a {noun}"
  std::vector<Tok> bigram_scene() {
    const Word& a1 = pick(kAdjectives);
    const Bigram& b = kBigrams[pick_index(kBigrams.size())];
    const Word& n2 = pick(kNouns);
    return {{"A", "DET"}, {a1.surface, a1.pos}, {b.first, "NOUN"},
            {b.second, "NOUN"}, {"and", "CCONJ"}, {"a", "DET"},
            {n2.surface, n2.pos}};
  }

  // Relation: "A {adj} {noun} {state} {prep} the {noun}"
  std::vector<Tok> spatial_scene() {
    const Word& a1 = pick(kAdjectives);
    const Word& n1 = pick(kNouns);
    const Word& v = pick(kStateVerbs);
    const Word& p = pick(kPrepositions);
    const Word& n2 = pick_noun_distinct(n1);
    return {{"A", "DET"}, {a1.surface, a1.pos}, {n1.surface, n1.pos},
            {v.surface, v.pos}, {p.surface, p.pos}, {"the", "DET"},
            {n2.surface, n2.pos}};
  }

  // Relation: "A {noun} {transitive} a {adj} {noun}"
  std::vector<Tok> interaction_scene() {
    const Word& n1 = pick(kNouns);
    const Word& v = pick(kTransitiveVerbs);
    const Word& a1 = pick(kAdjectives);
    const Word& n2 = pick_noun_distinct(n1);
    return {{"A", "DET"}, {n1.surface, n1.pos}, {v.surface, v.pos},
            {"a", "DET"}, {a1.surface, a1.pos}, {n2.surface, n2.pos}};
  }

  // Relation: "A {noun} standing {phrase} the {noun}"
  std::vector<Tok> phrase_scene() {
    const Word& n1 = pick(kNouns);
    const Phrase& ph = kPhrases[pick_index(kPhrases.size())];
    const Word& n2 = pick_noun_distinct(n1);
    std::vector<Tok> tokens = {{"A", "DET"}, {n1.surface, n1.pos},
                               {"standing", "VERB"}};
    for (std::size_t k = 0; k < ph.words.size(); ++k)
      tokens.push_back({ph.words[k], ph.pos[k]});
    tokens.push_back({"the", "DET"});
    tokens.push_back({n2.surface, n2.pos});
    return tokens;
  }

  // Two relation candidates: "A {noun} {transitive} a {noun} {prep} the {noun}"
  std::vector<Tok> double_relation_scene() {
    const Word& n1 = pick(kNouns);
    const Word& v = pick(kTransitiveVerbs);
    const Word& n2 = pick_noun_distinct(n1);
    const Word& p = pick(kPrepositions);
    const Word& n3 = pick_noun_distinct(n2);
    return {{"A", "DET"}, {n1.surface, n1.pos}, {v.surface, v.pos},
            {"a", "DET"}, {n2.surface, n2.pos}, {p.surface, p.pos},
            {"the", "DET"}, {n3.surface, n3.pos}};
  }

  // Short filler captions, always shorter than the main one.
  std::vector<Tok> filler(bool with_adjective) {
    const Word& n = pick(kNouns);
    if (with_adjective) {
      const Word& a = pick(kAdjectives);
      return {{"A", "DET"}, {a.surface, a.pos}, {n.surface, n.pos}};
    }
    return {{"A", "DET"}, {n.surface, n.pos}};
  }

  std::mt19937_64 rng_;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "tests/fixtures";

  // Lexicon CSV.
  {
    std::ofstream out(out_dir + "/lexicon.csv", std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_dir << "/lexicon.csv\n";
      return 1;
    }
    out << "Word,Conc.M\n";
    char buf[64];
    auto emit = [&](const std::string& word, double rating) {
      std::snprintf(buf, sizeof(buf), "%s,%.2f\n", word.c_str(), rating);
      out << buf;
    };
    for (const auto& pool : {kNouns, kAdjectives, kTransitiveVerbs, kStateVerbs,
                             kIntransitiveVerbs, kPrepositions, kExtraWords})
      for (const Word& w : pool) emit(w.surface, w.rating);
    for (const Bigram& b : kBigrams)
      emit(std::string(b.first) + " " + b.second, b.rating);
  }

  // Corpus JSONL: 500 records, each with the main caption plus 0-2 shorter
  // fillers in shuffled positions.
  Builder builder(9157);
  std::ofstream out(out_dir + "/corpus_500.jsonl", std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_dir << "/corpus_500.jsonl\n";
    return 1;
  }
  for (int i = 0; i < 500; ++i) {
    // 40% relation-free, 60% relation-bearing.
    const std::size_t kind = builder.pick_index(100);
    std::vector<Tok> main_tokens;
    if (kind < 12) main_tokens = builder.pair_scene();
    else if (kind < 20) main_tokens = builder.copula_scene();
    else if (kind < 30) main_tokens = builder.action_scene();
    else if (kind < 40) main_tokens = builder.bigram_scene();
    else if (kind < 58) main_tokens = builder.spatial_scene();
    else if (kind < 74) main_tokens = builder.interaction_scene();
    else if (kind < 85) main_tokens = builder.phrase_scene();
    else main_tokens = builder.double_relation_scene();

    const std::size_t n_fillers = builder.pick_index(3);
    std::vector<std::vector<Tok>> captions;
    for (std::size_t f = 0; f < n_fillers; ++f)
      captions.push_back(builder.filler(f == 0));
    const std::size_t main_at = builder.pick_index(captions.size() + 1);
    captions.insert(captions.begin() + static_cast<long>(main_at), main_tokens);

    char id[32];
    std::snprintf(id, sizeof(id), "fix-%04d", i);
    ordered_json record;
    record["id"] = id;
    record["image_ref"] = std::string("img://") + (id + 4);
    ordered_json caption_array = ordered_json::array();
    for (const auto& tokens : captions) {
      ordered_json caption;
      caption["text"] = join_text(tokens);
      ordered_json token_array = ordered_json::array();
      for (const Tok& tok : tokens) {
        ordered_json t;
        t["t"] = tok.surface;
        std::string lemma = tok.surface;
        for (auto& ch : lemma)
          ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        t["lemma"] = lemma;
        t["pos"] = tok.pos;
        token_array.push_back(t);
      }
      caption["tokens"] = token_array;
      caption_array.push_back(caption);
    }
    record["captions"] = caption_array;
    out << record.dump() << "\n";
  }
  std::cout << "fixtures written to " << out_dir << "\n";
  return 0;
}
