#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cml/errors.hpp"

namespace cml {

struct LexiconLoadOptions {
  std::string word_column = "Word";
  std::string rating_column = "Conc.M";
};

struct LexiconLoadReport {
  std::size_t loaded = 0;
  std::size_t duplicates = 0;
};

struct LookupResult {
  double rating = 0.0;
  std::size_t span = 1;  // matched tokens: 2 for a bigram, 1 for a unigram
};

// Word/bigram -> concreteness rating table. Keys are lowercase,
// single-space-normalized lemmas; ratings live in [1, 5].
class ConcretenessLexicon {
 public:
  // Reads a CSV or TSV file (delimiter sniffed from the header row) with a
  // word column and a mean-rating column. Duplicate keys keep the first
  // occurrence; duplicates are counted in the load report.
  static ConcretenessLexicon load(const std::string& path,
                                  const LexiconLoadOptions& options = {},
                                  LexiconLoadReport* report = nullptr);

  void insert(const std::string& key, double rating);

  std::optional<double> rating(const std::string& key) const;

  // Bigram-first lookup at tokens[start]: tries the space-joined bigram
  // (tokens[start], tokens[start+1]) before the unigram.
  std::optional<LookupResult> lookup(const std::vector<std::string>& tokens,
                                     std::size_t start) const;

  std::size_t size() const { return entries_.size(); }

  // Rating histogram with 0.5-wide bins over [1, 5]: 8 bins, the last one
  // closed at 5.0.
  std::vector<std::size_t> histogram() const;

  bool operator==(const ConcretenessLexicon& other) const {
    return entries_ == other.entries_;
  }

 private:
  std::unordered_map<std::string, double> entries_;
};

// Lowercases and collapses runs of whitespace to single spaces.
std::string normalize_key(const std::string& raw);

}  // namespace cml
