#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cml/plant.hpp"

namespace cml {

struct SkippedRecordError : Error { using Error::Error; };

// Instruction text with three {} placeholders (examples, input caption,
// keyword) plus one in-context example block per compositional category. The
// extra "random" block serves runs that ignore concreteness.
struct PromptTemplate {
  std::string instruction;
  std::map<std::string, std::string> example_blocks;

  // Reads template.txt and examples_<key>.txt from a directory.
  static PromptTemplate load(const std::string& dir);
};

// Substitutes the category's example block, the anchor caption, and the
// keyword into the template placeholders. Byte-deterministic.
std::string build_prompt(const SelectionRecord& record, const PromptTemplate& tmpl);
// Same with an explicit example-block key ("attribute", ..., "random").
std::string build_prompt(const SelectionRecord& record, const PromptTemplate& tmpl,
                         const std::string& block_key);

struct CaptionRequest {
  std::string prompt;
  // Structured fields mirror what the prompt embeds; the mock reads these,
  // an HTTP backend sees only the prompt.
  std::string anchor;
  std::string keyword;
  std::string category;
};

struct ImageEditRequest {
  std::string image_ref;
  std::string caption;
  double strength = 0.9;
  int steps = 2;
};

class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual std::string complete_caption(const CaptionRequest& request) = 0;
  virtual std::string edit_image(const ImageEditRequest& request) = 0;
};

// Deterministic stand-in for the captioner/editor pair: keyword-keyed
// substitution table with category-default swaps for unknown keywords, and
// content-hash image references.
class MockClient : public GenerationClient {
 public:
  std::string complete_caption(const CaptionRequest& request) override;
  std::string edit_image(const ImageEditRequest& request) override;
};

struct GenerationClientConfig {
  std::string endpoint;
  double timeout_seconds = 30.0;
  int max_retries = 2;
  int max_concurrent = 4;
  double image_strength = 0.9;  // in (0, 1]
  int image_steps = 2;
};

void validate_client_config(const GenerationClientConfig& cfg);

// Client speaking the minimal wire contract:
//   POST /caption    {"prompt": s}                               -> {"text": s}
//   POST /edit-image {"image_ref","caption","strength","steps"}  -> {"image_ref": s}
std::unique_ptr<GenerationClient> make_http_client(const GenerationClientConfig& cfg);

// One captioning call (transport retries up to max_retries inside), returning
// the first nonempty response line stripped of surrounding whitespace.
std::string caption_negative(const SelectionRecord& record,
                             const PromptTemplate& tmpl,
                             GenerationClient& client,
                             const GenerationClientConfig& cfg,
                             const std::string& block_key = "");

enum class RejectReason {
  none,
  no_change,
  keyword_present,
  excessive_edit,
  length_mismatch,
  retries,
};

std::string reject_reason_to_string(RejectReason reason);
RejectReason reject_reason_from_string(const std::string& s);

struct ValidationLimits {
  std::size_t max_word_edit_distance = 4;
  std::size_t max_token_delta = 2;
};

// Word-level Levenshtein distance (case-insensitive tokens).
std::size_t word_edit_distance(const std::string& a, const std::string& b);

// RejectReason::none means the negative caption passed all checks: it differs
// from the anchor, the keyword span is gone, the edit stayed local, and the
// length stayed close.
RejectReason validate_negative(const std::string& anchor, const std::string& negative,
                               const std::string& keyword,
                               const ValidationLimits& limits = {});

enum class RecordStatus { ok, rejected, pending_image };

std::string record_status_to_string(RecordStatus status);
RecordStatus record_status_from_string(const std::string& s);

struct NegativeRecord {
  std::string id;
  std::string anchor_caption;
  std::string keyword;
  Category category = Category::object;
  double concreteness = 0.0;
  std::string negative_caption;
  std::optional<std::string> negative_image_ref;
  RecordStatus status = RecordStatus::pending_image;
  RejectReason reject_reason = RejectReason::none;

  bool operator==(const NegativeRecord&) const = default;
};

// Submits the edit request for a validated record. Rejected records are a
// precondition violation (SkippedRecordError).
std::string image_negative(const NegativeRecord& record, GenerationClient& client,
                           const GenerationClientConfig& cfg,
                           const std::string& anchor_image_ref);

struct GenerationOptions {
  bool generate_images = false;
  // Empty: pick the example block from each record's category. "random"
  // selects the concreteness-agnostic block for every record.
  std::string prompt_block_override;
  ValidationLimits limits;
  // Anchor image references by record id (needed for the image stage); ids
  // without an entry fall back to the id itself.
  std::map<std::string, std::string> image_refs;
};

struct GenerationRunReport {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::map<std::string, std::size_t> rejected_by_reason;

  std::size_t rejected() const {
    std::size_t n = 0;
    for (const auto& [reason, count] : rejected_by_reason) n += count;
    return n;
  }
};

struct GenerationResult {
  std::vector<NegativeRecord> records;  // validated records only, input order
  GenerationRunReport report;
};

// Runs captioning + validation (+ optional image editing) over all
// selections. Per-record work may run on up to max_concurrent threads;
// results are assembled in input order, so concurrency never changes the
// output. Per-record failures never abort the run.
GenerationResult run_generation(const std::vector<SelectionRecord>& selections,
                                GenerationClient& client,
                                const PromptTemplate& tmpl,
                                const GenerationClientConfig& cfg,
                                const GenerationOptions& options = {});

void write_negatives_jsonl(const std::string& path,
                           const std::vector<NegativeRecord>& records);
std::vector<NegativeRecord> read_negatives_jsonl(const std::string& path);

void write_run_report_json(const std::string& path, const GenerationRunReport& report);

}  // namespace cml
