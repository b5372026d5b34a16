#include "cml/genio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "cml/digest.hpp"
#include "cml/jsonl.hpp"

namespace cml {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::string word;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!word.empty()) words.push_back(word);
      word.clear();
    } else {
      word.push_back(ch);
    }
  }
  if (!word.empty()) words.push_back(word);
  return words;
}

bool is_punct(char ch) { return std::string(".,!?;:").find(ch) != std::string::npos; }

std::string strip_punct(const std::string& w) {
  std::size_t begin = 0;
  std::size_t end = w.size();
  while (begin < end && is_punct(w[begin])) ++begin;
  while (end > begin && is_punct(w[end - 1])) --end;
  return w.substr(begin, end - begin);
}

std::string trailing_punct(const std::string& w) {
  std::size_t end = w.size();
  while (end > 0 && is_punct(w[end - 1])) --end;
  return w.substr(end);
}

std::string first_nonempty_line(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::size_t begin = 0;
    std::size_t end = line.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(line[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    if (end > begin) return line.substr(begin, end - begin);
  }
  return "";
}

}  // namespace

// ---- prompt template ----

PromptTemplate PromptTemplate::load(const std::string& dir) {
  PromptTemplate tmpl;
  tmpl.instruction = read_file(dir + "/template.txt");
  for (const char* key : {"attribute", "relation", "object", "random"}) {
    const std::string path = dir + "/examples_" + key + ".txt";
    std::ifstream probe(path);
    if (probe) tmpl.example_blocks[key] = read_file(path);
  }
  std::size_t placeholders = 0;
  for (std::size_t at = tmpl.instruction.find("{}"); at != std::string::npos;
       at = tmpl.instruction.find("{}", at + 2))
    ++placeholders;
  if (placeholders != 3)
    throw InvalidConfigError("template must contain exactly three {} placeholders");
  return tmpl;
}

std::string build_prompt(const SelectionRecord& record, const PromptTemplate& tmpl,
                         const std::string& block_key) {
  auto it = tmpl.example_blocks.find(block_key);
  if (it == tmpl.example_blocks.end())
    throw UnknownCategoryError("no example block for category: " + block_key);
  std::string out = tmpl.instruction;
  const std::string* fills[3] = {&it->second, &record.anchor_caption, &record.keyword};
  std::size_t at = 0;
  for (const std::string* fill : fills) {
    at = out.find("{}", at);
    out.replace(at, 2, *fill);
    at += fill->size();
  }
  return out;
}

std::string build_prompt(const SelectionRecord& record, const PromptTemplate& tmpl) {
  return build_prompt(record, tmpl, category_to_string(record.category));
}

// ---- mock client ----

namespace {

struct Swap {
  std::string match;        // span replaced in the anchor caption
  std::string replacement;
};

const std::map<std::string, Swap>& swap_table() {
  static const std::map<std::string, Swap> table = {
      {"red", {"red", "blue"}},
      {"wooden", {"wooden", "plastic"}},
      {"cloudy", {"cloudy", "clear"}},
      {"under", {"under", "on"}},
      {"front", {"in front of", "behind"}},
      {"left", {"left", "right"}},
      {"dog", {"dog", "cat"}},
      {"coffee cup", {"coffee cup", "laptop"}},
      {"highway", {"highway", "grass"}},
  };
  return table;
}

Swap default_swap(const std::string& keyword, const std::string& category) {
  const std::string kw = lower(keyword);
  if (category == "attribute") return {keyword, kw == "blue" ? "red" : "blue"};
  if (category == "relation") return {keyword, kw == "on" ? "under" : "on"};
  return {keyword, kw == "cat" ? "dog" : "cat"};
}

// Replaces every whole-word occurrence of the match span, keeping trailing
// punctuation and sentence-initial capitalization.
std::string replace_span(const std::string& text, const std::string& match,
                         const std::string& replacement) {
  const std::vector<std::string> words = split_words(text);
  std::vector<std::string> match_words = split_words(lower(match));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < words.size()) {
    bool hit = match_words.size() > 0 && i + match_words.size() <= words.size();
    if (hit) {
      for (std::size_t k = 0; k < match_words.size(); ++k) {
        if (lower(strip_punct(words[i + k])) != match_words[k]) {
          hit = false;
          break;
        }
      }
    }
    if (!hit) {
      out.push_back(words[i]);
      ++i;
      continue;
    }
    const std::string& last = words[i + match_words.size() - 1];
    std::vector<std::string> repl_words = split_words(replacement);
    if (!repl_words.empty()) {
      const std::string first_stripped = strip_punct(words[i]);
      if (!first_stripped.empty() &&
          std::isupper(static_cast<unsigned char>(first_stripped[0])))
        repl_words.front()[0] = static_cast<char>(
            std::toupper(static_cast<unsigned char>(repl_words.front()[0])));
      repl_words.back() += trailing_punct(last);
      for (auto& w : repl_words) out.push_back(std::move(w));
    }
    i += match_words.size();
  }
  std::string joined;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) joined.push_back(' ');
    joined += out[k];
  }
  return joined;
}

}  // namespace

std::string MockClient::complete_caption(const CaptionRequest& request) {
  const auto& table = swap_table();
  auto it = table.find(lower(request.keyword));
  const Swap swap = it != table.end() ? it->second
                                      : default_swap(request.keyword, request.category);
  std::string out = replace_span(request.anchor, swap.match, swap.replacement);
  if (out == request.anchor && swap.match != request.keyword) {
    // Phrase entry that does not occur verbatim: swap the bare keyword.
    out = replace_span(request.anchor, request.keyword, swap.replacement);
  }
  return out;
}

std::string MockClient::edit_image(const ImageEditRequest& request) {
  return "mock://" + sha256_hex(request.image_ref + request.caption);
}

// ---- http client ----

void validate_client_config(const GenerationClientConfig& cfg) {
  if (cfg.max_retries < 0) throw InvalidConfigError("max_retries must be >= 0");
  if (cfg.max_concurrent < 1) throw InvalidConfigError("max_concurrent must be >= 1");
  if (!(cfg.image_strength > 0.0 && cfg.image_strength <= 1.0))
    throw InvalidConfigError("image strength must lie in (0, 1]");
  if (cfg.image_steps < 1) throw InvalidConfigError("image steps must be >= 1");
  if (!(cfg.timeout_seconds > 0.0)) throw InvalidConfigError("timeout must be positive");
}

namespace {

class HttpClient final : public GenerationClient {
 public:
  explicit HttpClient(const GenerationClientConfig& cfg) : cfg_(cfg) {
    if (cfg_.endpoint.empty()) throw InvalidConfigError("http client needs an endpoint");
  }

  std::string complete_caption(const CaptionRequest& request) override {
    json body;
    body["prompt"] = request.prompt;
    const json reply = post("/caption", body);
    if (!reply.contains("text") || !reply["text"].is_string())
      throw MalformedResponseError("caption reply lacks text field");
    return reply["text"].get<std::string>();
  }

  std::string edit_image(const ImageEditRequest& request) override {
    json body;
    body["image_ref"] = request.image_ref;
    body["caption"] = request.caption;
    body["strength"] = request.strength;
    body["steps"] = request.steps;
    const json reply = post("/edit-image", body);
    if (!reply.contains("image_ref") || !reply["image_ref"].is_string())
      throw MalformedResponseError("edit reply lacks image_ref field");
    return reply["image_ref"].get<std::string>();
  }

 private:
  json post(const std::string& path, const json& body) {
    httplib::Client client(cfg_.endpoint);
    const auto seconds = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usec = static_cast<time_t>(
        (cfg_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, usec);
    client.set_read_timeout(seconds, usec);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw TimeoutError("no response from " + cfg_.endpoint + path);
    if (res->status != 200)
      throw BackendError(res->status, "POST " + path + " failed");
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw MalformedResponseError(e.what());
    }
  }

  GenerationClientConfig cfg_;
};

}  // namespace

std::unique_ptr<GenerationClient> make_http_client(const GenerationClientConfig& cfg) {
  validate_client_config(cfg);
  return std::make_unique<HttpClient>(cfg);
}

// ---- captioning / validation / image ops ----

std::string caption_negative(const SelectionRecord& record, const PromptTemplate& tmpl,
                             GenerationClient& client, const GenerationClientConfig& cfg,
                             const std::string& block_key) {
  CaptionRequest request;
  request.prompt = build_prompt(
      record, tmpl, block_key.empty() ? category_to_string(record.category) : block_key);
  request.anchor = record.anchor_caption;
  request.keyword = record.keyword;
  request.category = category_to_string(record.category);
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      const std::string line = first_nonempty_line(client.complete_caption(request));
      if (line.empty()) throw MalformedResponseError("empty caption response");
      return line;
    } catch (const TimeoutError&) {
    } catch (const BackendError&) {
    } catch (const MalformedResponseError&) {
    }
  }
  throw RetriesExhaustedError("caption request failed after " +
                              std::to_string(attempts) + " attempts");
}

std::string reject_reason_to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::none: return "none";
    case RejectReason::no_change: return "no_change";
    case RejectReason::keyword_present: return "keyword_present";
    case RejectReason::excessive_edit: return "excessive_edit";
    case RejectReason::length_mismatch: return "length_mismatch";
    case RejectReason::retries: return "retries";
  }
  return "none";
}

RejectReason reject_reason_from_string(const std::string& s) {
  if (s == "none") return RejectReason::none;
  if (s == "no_change") return RejectReason::no_change;
  if (s == "keyword_present") return RejectReason::keyword_present;
  if (s == "excessive_edit") return RejectReason::excessive_edit;
  if (s == "length_mismatch") return RejectReason::length_mismatch;
  if (s == "retries") return RejectReason::retries;
  throw ParseError(0, "unknown reject reason: " + s);
}

std::size_t word_edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::string> wa = split_words(lower(a));
  std::vector<std::string> wb = split_words(lower(b));
  const std::size_t n = wa.size();
  const std::size_t m = wb.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (wa[i - 1] == wb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

bool contains_span(const std::string& text, const std::string& span) {
  const std::vector<std::string> words = split_words(text);
  const std::vector<std::string> span_words = split_words(lower(span));
  if (span_words.empty() || span_words.size() > words.size()) return false;
  for (std::size_t i = 0; i + span_words.size() <= words.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < span_words.size(); ++k) {
      if (lower(strip_punct(words[i + k])) != span_words[k]) {
        hit = false;
        break;
      }
    }
    if (hit) return true;
  }
  return false;
}

}  // namespace

RejectReason validate_negative(const std::string& anchor, const std::string& negative,
                               const std::string& keyword,
                               const ValidationLimits& limits) {
  if (negative == anchor) return RejectReason::no_change;
  if (contains_span(negative, keyword)) return RejectReason::keyword_present;
  if (word_edit_distance(anchor, negative) > limits.max_word_edit_distance)
    return RejectReason::excessive_edit;
  const std::size_t na = split_words(anchor).size();
  const std::size_t nb = split_words(negative).size();
  const std::size_t delta = na > nb ? na - nb : nb - na;
  if (delta > limits.max_token_delta) return RejectReason::length_mismatch;
  return RejectReason::none;
}

std::string record_status_to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::rejected: return "rejected";
    case RecordStatus::pending_image: return "pending_image";
  }
  return "rejected";
}

RecordStatus record_status_from_string(const std::string& s) {
  if (s == "ok") return RecordStatus::ok;
  if (s == "rejected") return RecordStatus::rejected;
  if (s == "pending_image") return RecordStatus::pending_image;
  throw ParseError(0, "unknown record status: " + s);
}

std::string image_negative(const NegativeRecord& record, GenerationClient& client,
                           const GenerationClientConfig& cfg,
                           const std::string& anchor_image_ref) {
  if (record.status == RecordStatus::rejected)
    throw SkippedRecordError("rejected record cannot enter the image stage: " +
                             record.id);
  ImageEditRequest request;
  request.image_ref = anchor_image_ref;
  request.caption = record.negative_caption;
  request.strength = cfg.image_strength;
  request.steps = cfg.image_steps;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      return client.edit_image(request);
    } catch (const TimeoutError&) {
    } catch (const BackendError&) {
    } catch (const MalformedResponseError&) {
    }
  }
  throw RetriesExhaustedError("image request failed after " + std::to_string(attempts) +
                              " attempts");
}

// ---- pipeline ----

namespace {

NegativeRecord process_record(const SelectionRecord& sel, GenerationClient& client,
                              const PromptTemplate& tmpl,
                              const GenerationClientConfig& cfg,
                              const GenerationOptions& options) {
  NegativeRecord rec;
  rec.id = sel.id;
  rec.anchor_caption = sel.anchor_caption;
  rec.keyword = sel.keyword;
  rec.category = sel.category;
  rec.concreteness = sel.concreteness;
  const std::string block = options.prompt_block_override.empty()
                                ? category_to_string(sel.category)
                                : options.prompt_block_override;
  RejectReason last = RejectReason::retries;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::string negative;
    try {
      negative = caption_negative(sel, tmpl, client, cfg, block);
    } catch (const RetriesExhaustedError&) {
      last = RejectReason::retries;
      break;  // the transport budget is already spent
    } catch (const UnknownCategoryError&) {
      last = RejectReason::retries;
      break;
    }
    const RejectReason verdict =
        validate_negative(sel.anchor_caption, negative, sel.keyword, options.limits);
    if (verdict != RejectReason::none) {
      last = verdict;
      continue;
    }
    rec.negative_caption = negative;
    if (options.generate_images) {
      rec.status = RecordStatus::pending_image;
      auto it = options.image_refs.find(sel.id);
      const std::string anchor_ref = it != options.image_refs.end() ? it->second : sel.id;
      try {
        rec.negative_image_ref = image_negative(rec, client, cfg, anchor_ref);
      } catch (const RetriesExhaustedError&) {
        last = RejectReason::retries;
        break;
      }
    }
    rec.status = RecordStatus::ok;
    rec.reject_reason = RejectReason::none;
    return rec;
  }
  rec.status = RecordStatus::rejected;
  rec.reject_reason = last;
  rec.negative_caption.clear();
  rec.negative_image_ref.reset();
  return rec;
}

}  // namespace

GenerationResult run_generation(const std::vector<SelectionRecord>& selections,
                                GenerationClient& client, const PromptTemplate& tmpl,
                                const GenerationClientConfig& cfg,
                                const GenerationOptions& options) {
  validate_client_config(cfg);
  const std::size_t n = selections.size();
  std::vector<NegativeRecord> processed(n);

  if (cfg.max_concurrent <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      processed[i] = process_record(selections[i], client, tmpl, cfg, options);
  } else {
    // Bounded window of in-flight records; results land by index, so the
    // output is independent of completion order.
    std::vector<std::pair<std::size_t, std::future<NegativeRecord>>> window;
    auto drain_one = [&]() {
      auto& [idx, fut] = window.front();
      processed[idx] = fut.get();
      window.erase(window.begin());
    };
    for (std::size_t i = 0; i < n; ++i) {
      window.emplace_back(i, std::async(std::launch::async, [&, i]() {
                            return process_record(selections[i], client, tmpl, cfg,
                                                  options);
                          }));
      if (window.size() >= static_cast<std::size_t>(cfg.max_concurrent)) drain_one();
    }
    while (!window.empty()) drain_one();
  }

  GenerationResult result;
  result.report.total = n;
  for (auto& rec : processed) {
    if (rec.status == RecordStatus::ok) {
      ++result.report.ok;
      result.records.push_back(std::move(rec));
    } else {
      ++result.report.rejected_by_reason[reject_reason_to_string(rec.reject_reason)];
    }
  }
  return result;
}

// ---- JSONL / report I/O ----

void write_negatives_jsonl(const std::string& path,
                           const std::vector<NegativeRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& rec : records) {
    ordered_json j;
    j["id"] = rec.id;
    j["anchor_caption"] = rec.anchor_caption;
    j["keyword"] = rec.keyword;
    j["category"] = category_to_string(rec.category);
    j["concreteness"] = rec.concreteness;
    j["negative_caption"] = rec.negative_caption;
    if (rec.negative_image_ref) j["negative_image_ref"] = *rec.negative_image_ref;
    j["status"] = record_status_to_string(rec.status);
    if (rec.status == RecordStatus::rejected)
      j["reason"] = reject_reason_to_string(rec.reject_reason);
    out << j.dump() << "\n";
  }
}

std::vector<NegativeRecord> read_negatives_jsonl(const std::string& path) {
  std::vector<NegativeRecord> records;
  for_each_jsonl_line(path, [&](std::size_t line_no, const json& j) {
    NegativeRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.anchor_caption = j.at("anchor_caption").get<std::string>();
      rec.keyword = j.at("keyword").get<std::string>();
      rec.category = category_from_string(j.at("category").get<std::string>());
      rec.concreteness = j.at("concreteness").get<double>();
      rec.negative_caption = j.at("negative_caption").get<std::string>();
      if (j.contains("negative_image_ref"))
        rec.negative_image_ref = j["negative_image_ref"].get<std::string>();
      rec.status = record_status_from_string(j.at("status").get<std::string>());
      if (j.contains("reason"))
        rec.reject_reason = reject_reason_from_string(j["reason"].get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    records.push_back(std::move(rec));
  });
  return records;
}

void write_run_report_json(const std::string& path, const GenerationRunReport& report) {
  ordered_json j;
  j["total"] = report.total;
  j["ok"] = report.ok;
  ordered_json rejected = ordered_json::object();
  for (const auto& [reason, count] : report.rejected_by_reason) rejected[reason] = count;
  j["rejected"] = rejected;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace cml
