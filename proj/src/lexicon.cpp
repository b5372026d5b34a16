#include "cml/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cml {

std::string normalize_key(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

namespace {

std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, delim)) cells.push_back(cell);
  if (!line.empty() && line.back() == delim) cells.push_back("");
  return cells;
}

}  // namespace

ConcretenessLexicon ConcretenessLexicon::load(const std::string& path,
                                              const LexiconLoadOptions& options,
                                              LexiconLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "empty lexicon file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> columns = split_row(header, delim);
  auto find_column = [&](const std::string& name) {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw MissingColumnError(name);
    return static_cast<std::size_t>(it - columns.begin());
  };
  const std::size_t word_idx = find_column(options.word_column);
  const std::size_t rating_idx = find_column(options.rating_column);

  ConcretenessLexicon lexicon;
  LexiconLoadReport local_report;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_row(line, delim);
    if (cells.size() <= std::max(word_idx, rating_idx))
      throw ParseError(line_no, "too few columns");
    const std::string key = normalize_key(cells[word_idx]);
    if (key.empty()) throw ParseError(line_no, "empty word");
    double rating = 0.0;
    try {
      rating = std::stod(cells[rating_idx]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad rating: " + cells[rating_idx]);
    }
    if (!(rating >= 1.0 && rating <= 5.0)) throw RatingOutOfRangeError(line_no, rating);
    if (lexicon.entries_.count(key)) {
      ++local_report.duplicates;
      continue;  // first occurrence wins
    }
    lexicon.entries_.emplace(key, rating);
    ++local_report.loaded;
  }
  if (report) *report = local_report;
  return lexicon;
}

void ConcretenessLexicon::insert(const std::string& key, double rating) {
  if (!(rating >= 1.0 && rating <= 5.0)) throw RatingOutOfRangeError(0, rating);
  entries_.emplace(normalize_key(key), rating);
}

std::optional<double> ConcretenessLexicon::rating(const std::string& key) const {
  auto it = entries_.find(normalize_key(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<LookupResult> ConcretenessLexicon::lookup(
    const std::vector<std::string>& tokens, std::size_t start) const {
  if (start >= tokens.size()) throw IndexOutOfRangeError("lookup start out of range");
  if (start + 1 < tokens.size()) {
    const std::string bigram = normalize_key(tokens[start] + " " + tokens[start + 1]);
    auto it = entries_.find(bigram);
    if (it != entries_.end()) return LookupResult{it->second, 2};
  }
  auto it = entries_.find(normalize_key(tokens[start]));
  if (it != entries_.end()) return LookupResult{it->second, 1};
  return std::nullopt;
}

std::vector<std::size_t> ConcretenessLexicon::histogram() const {
  std::vector<std::size_t> bins(8, 0);
  for (const auto& [key, rating] : entries_) {
    auto bin = static_cast<std::size_t>((rating - 1.0) / 0.5);
    if (bin >= bins.size()) bin = bins.size() - 1;  // rating 5.0 joins [4.5, 5.0]
    ++bins[bin];
  }
  return bins;
}

}  // namespace cml
