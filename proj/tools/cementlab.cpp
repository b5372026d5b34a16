// Command-line front end: loss evaluation, margin tables, gradient sweeps,
// keyword selection, hard-negative generation, lexicon stats, and the toy
// trainer.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cml/cement.hpp"
#include "cml/genio.hpp"
#include "cml/graddiag.hpp"
#include "cml/harness.hpp"
#include "cml/lexicon.hpp"
#include "cml/margin.hpp"
#include "cml/plant.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string default_data_dir() {
#ifdef CML_DATA_DIR
  return CML_DATA_DIR;
#else
  return "data";
#endif
}

cml::MarginMode margin_mode_from_string(const std::string& s) {
  if (s == "adaptive") return cml::MarginMode::adaptive;
  if (s == "inverse") return cml::MarginMode::inverse;
  if (s == "static") return cml::MarginMode::constant;
  if (s == "zero") return cml::MarginMode::zero;
  throw CLI::ValidationError("--margin-mode", "expected adaptive|inverse|static|zero");
}

struct MarginFlags {
  std::string mode = "adaptive";
  double m_min = -2.0;
  double m_max = 2.0;
  double c_tilde = 4.0;
  double tau_m = 0.15;
  double static_value = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--margin-mode", mode, "adaptive|inverse|static|zero")
        ->capture_default_str();
    app->add_option("--m-min", m_min)->capture_default_str();
    app->add_option("--m-max", m_max)->capture_default_str();
    app->add_option("--c-tilde", c_tilde)->capture_default_str();
    app->add_option("--tau-m", tau_m)->capture_default_str();
    app->add_option("--static-value", static_value)->capture_default_str();
  }

  cml::MarginConfig to_config() const {
    cml::MarginConfig cfg;
    cfg.mode = margin_mode_from_string(mode);
    cfg.m_min = m_min;
    cfg.m_max = m_max;
    cfg.c_tilde = c_tilde;
    cfg.tau_m = tau_m;
    cfg.static_value = static_value;
    cml::validate_margin_config(cfg);
    return cfg;
  }
};

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw cml::Error("cannot write " + path);
  return file;
}

void write_matrix_csv(const std::string& path, const cml::Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cml::Error("cannot write " + path);
  char buf[40];
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << "\n";
  }
}

// ---- loss ----

struct LossArgs {
  std::string batch_manifest;
  std::string image_path;
  std::string text_path;
  std::string concreteness_path;
  double temperature = 0.07;
  MarginFlags margin;
  bool infonce = false;
  std::string dump_grads;
};

std::vector<double> read_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cml::Error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line));
  }
  return values;
}

cml::PairedBatch load_batch(const LossArgs& args, bool temperature_flag_set) {
  std::string image_path = args.image_path;
  std::string text_path = args.text_path;
  double temperature = args.temperature;
  std::vector<double> concreteness;
  if (!args.batch_manifest.empty()) {
    std::ifstream in(args.batch_manifest);
    if (!in) throw cml::Error("cannot open " + args.batch_manifest);
    json manifest = json::parse(in);
    image_path = manifest.at("image_embeddings").get<std::string>();
    text_path = manifest.at("text_embeddings").get<std::string>();
    if (manifest.contains("temperature") && !temperature_flag_set)
      temperature = manifest["temperature"].get<double>();
    if (manifest.contains("concreteness"))
      concreteness = manifest["concreteness"].get<std::vector<double>>();
  }
  if (image_path.empty() || text_path.empty())
    throw CLI::ValidationError("loss", "need --batch or both embedding paths");
  if (!args.concreteness_path.empty())
    concreteness = read_values_file(args.concreteness_path);
  cml::EmbeddingMatrix image{cml::read_embeddings(image_path), false};
  cml::EmbeddingMatrix text{cml::read_embeddings(text_path), false};
  if (concreteness.empty()) concreteness.assign(image.rows() / 2, 3.0);
  return cml::make_paired_batch(cml::normalize_rows(image), cml::normalize_rows(text),
                                temperature, std::move(concreteness));
}

int run_loss(const LossArgs& args, bool temperature_flag_set) {
  const cml::PairedBatch batch = load_batch(args, temperature_flag_set);
  cml::LossReport report;
  if (args.infonce) {
    report = cml::infonce_loss(batch);
  } else {
    report = cml::cement_loss(batch, args.margin.to_config());
  }
  ordered_json j;
  j["loss_v2t"] = report.loss_v2t;
  j["loss_t2v"] = report.loss_t2v;
  j["total"] = report.total;
  j["recall_v2t"] = report.recall_v2t;
  j["recall_t2v"] = report.recall_t2v;
  std::cout << j.dump(2) << "\n";
  if (!args.dump_grads.empty()) {
    const cml::LogitGradients grads =
        args.infonce ? cml::grad_logits(batch, std::vector<double>{})
                     : cml::grad_logits(batch, args.margin.to_config());
    write_matrix_csv(args.dump_grads + "_v2t.csv", grads.d_s_v2t);
    write_matrix_csv(args.dump_grads + "_t2v.csv", grads.d_s_t2v);
  }
  return 0;
}

// ---- train-toy ----

struct TrainArgs {
  std::string config_path;
  std::string loss = "cement";
  MarginFlags margin;
  std::string out_trace;
  std::string out_eval;
  // dataset overrides
  long scenes = 2000;
  long latent_dim = 32;
  double noise_std = 0.05;
  std::uint64_t dataset_seed = 1;
  // train overrides
  long batch = 64;
  long epochs = 20;
  double learning_rate = 0.5;
  double momentum = 0.9;
  double temperature = 0.07;
  std::uint64_t seed = 7;
};

void apply_json(const json& j, const char* key, double& value) {
  if (j.contains(key)) value = j[key].get<double>();
}
void apply_json(const json& j, const char* key, long& value) {
  if (j.contains(key)) value = j[key].get<long>();
}
void apply_json(const json& j, const char* key, std::uint64_t& value) {
  if (j.contains(key)) value = j[key].get<std::uint64_t>();
}
void apply_json(const json& j, const char* key, int& value) {
  if (j.contains(key)) value = j[key].get<int>();
}
void apply_json(const json& j, const char* key, std::string& value) {
  if (j.contains(key)) value = j[key].get<std::string>();
}

int run_train_toy(CLI::App* cmd, TrainArgs& args) {
  cml::ToyDatasetConfig dataset_cfg;
  cml::TrainConfig train_cfg;
  MarginFlags margin_defaults;

  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw cml::Error("cannot open " + args.config_path);
    const json config = json::parse(in);
    if (config.contains("dataset")) {
      const json& d = config["dataset"];
      apply_json(d, "vocab_object1", dataset_cfg.vocab_object1);
      apply_json(d, "vocab_attribute", dataset_cfg.vocab_attribute);
      apply_json(d, "vocab_relation", dataset_cfg.vocab_relation);
      apply_json(d, "vocab_object2", dataset_cfg.vocab_object2);
      apply_json(d, "scenes", dataset_cfg.scenes);
      apply_json(d, "latent_dim", dataset_cfg.latent_dim);
      apply_json(d, "noise_std", dataset_cfg.noise_std);
      apply_json(d, "seed", dataset_cfg.seed);
      apply_json(d, "c_min", dataset_cfg.c_min);
      apply_json(d, "c_max", dataset_cfg.c_max);
    }
    if (config.contains("train")) {
      const json& t = config["train"];
      long batch = static_cast<long>(train_cfg.batch);
      apply_json(t, "batch", batch);
      train_cfg.batch = static_cast<std::size_t>(batch);
      apply_json(t, "epochs", train_cfg.epochs);
      apply_json(t, "learning_rate", train_cfg.learning_rate);
      apply_json(t, "momentum", train_cfg.momentum);
      apply_json(t, "temperature", train_cfg.temperature);
      apply_json(t, "seed", train_cfg.seed);
      apply_json(t, "loss", args.loss);
    }
    if (config.contains("margin")) {
      const json& m = config["margin"];
      apply_json(m, "mode", margin_defaults.mode);
      apply_json(m, "m_min", margin_defaults.m_min);
      apply_json(m, "m_max", margin_defaults.m_max);
      apply_json(m, "c_tilde", margin_defaults.c_tilde);
      apply_json(m, "tau_m", margin_defaults.tau_m);
      apply_json(m, "static_value", margin_defaults.static_value);
    }
  }

  // Every explicitly passed flag overrides its config key.
  auto set_if = [&](const char* name, auto& dst, const auto& src) {
    if (cmd->count(name)) dst = src;
  };
  set_if("--scenes", dataset_cfg.scenes, static_cast<int>(args.scenes));
  set_if("--latent-dim", dataset_cfg.latent_dim, static_cast<int>(args.latent_dim));
  set_if("--noise-std", dataset_cfg.noise_std, args.noise_std);
  set_if("--dataset-seed", dataset_cfg.seed, args.dataset_seed);
  set_if("--batch", train_cfg.batch, static_cast<std::size_t>(args.batch));
  set_if("--epochs", train_cfg.epochs, static_cast<int>(args.epochs));
  set_if("--lr", train_cfg.learning_rate, args.learning_rate);
  set_if("--momentum", train_cfg.momentum, args.momentum);
  set_if("--temperature", train_cfg.temperature, args.temperature);
  set_if("--seed", train_cfg.seed, args.seed);
  set_if("--margin-mode", margin_defaults.mode, args.margin.mode);
  set_if("--m-min", margin_defaults.m_min, args.margin.m_min);
  set_if("--m-max", margin_defaults.m_max, args.margin.m_max);
  set_if("--c-tilde", margin_defaults.c_tilde, args.margin.c_tilde);
  set_if("--tau-m", margin_defaults.tau_m, args.margin.tau_m);
  set_if("--static-value", margin_defaults.static_value, args.margin.static_value);

  train_cfg.margin = margin_defaults.to_config();
  if (args.loss == "infonce")
    train_cfg.loss = cml::LossKind::infonce;
  else if (args.loss == "cement")
    train_cfg.loss = cml::LossKind::cement;
  else
    throw CLI::ValidationError("--loss", "expected infonce|cement");

  const cml::ToyDataset dataset = cml::synth_dataset(dataset_cfg);
  const cml::TrainResult result = cml::train(dataset, train_cfg);

  if (!args.out_trace.empty()) cml::write_trace_csv(args.out_trace, result.trace);
  if (!args.out_eval.empty()) cml::write_eval_json(args.out_eval, result.eval);

  ordered_json j;
  j["steps"] = result.trace.size();
  j["final_loss"] = result.trace.empty() ? 0.0 : result.trace.back().loss;
  double mean_share = 0.0;
  for (const auto& row : result.trace) mean_share += row.report.hard_share;
  if (!result.trace.empty()) mean_share /= static_cast<double>(result.trace.size());
  j["mean_hard_share"] = mean_share;
  j["i2t_acc"] = result.eval.i2t_acc;
  j["t2i_acc"] = result.eval.t2i_acc;
  j["mean_logit_gap"] = result.eval.mean_logit_gap;
  j["rank_correlation"] = result.eval.rank_correlation;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concreteness-aware hard-negative contrastive training lab"};
  app.require_subcommand(1);

  // loss
  LossArgs loss_args;
  CLI::App* loss_cmd = app.add_subcommand("loss", "evaluate the loss on a stored batch");
  loss_cmd->add_option("--batch", loss_args.batch_manifest,
                       "JSON manifest with embedding paths");
  loss_cmd->add_option("--image-embeddings", loss_args.image_path,
                       "embedding file (.csv or binary)");
  loss_cmd->add_option("--text-embeddings", loss_args.text_path,
                       "embedding file (.csv or binary)");
  loss_cmd->add_option("--concreteness", loss_args.concreteness_path,
                       "file with one rating per line (length N or 2N)");
  CLI::Option* temp_opt =
      loss_cmd->add_option("--temperature", loss_args.temperature)->capture_default_str();
  loss_cmd->add_flag("--infonce", loss_args.infonce, "plain contrastive loss, no margin");
  loss_args.margin.attach(loss_cmd);
  loss_cmd->add_option("--dump-grads", loss_args.dump_grads,
                       "prefix for gradient CSVs (<prefix>_v2t.csv, <prefix>_t2v.csv)");

  // margin-table
  struct {
    double c_from = 1.0, c_to = 5.0, step = 0.1;
    MarginFlags margin;
    std::string out;
  } table_args;
  CLI::App* table_cmd = app.add_subcommand("margin-table", "emit the margin schedule as CSV");
  table_cmd->add_option("--c-from", table_args.c_from)->capture_default_str();
  table_cmd->add_option("--c-to", table_args.c_to)->capture_default_str();
  table_cmd->add_option("--step", table_args.step)->capture_default_str();
  table_args.margin.attach(table_cmd);
  table_cmd->add_option("--out", table_args.out, "output file (default stdout)");

  // grad-sweep
  struct {
    std::string sizes = "64,256,1024";
    double gap_mean = 2.0, gap_std = 0.5;
    double easy_gap_mean = 8.0, easy_gap_std = 1.0;
    double diagonal = 10.0;
    MarginFlags margin{.mode = "zero"};
    std::uint64_t seed = 0;
    std::string out;
  } sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand(
      "grad-sweep", "gradient decomposition across synthetic batch sizes");
  sweep_cmd->alias("batch-sweep");
  sweep_cmd->add_option("--sizes", sweep_args.sizes, "comma-separated anchor counts")
      ->capture_default_str();
  sweep_cmd->add_option("--gap-mean", sweep_args.gap_mean)->capture_default_str();
  sweep_cmd->add_option("--gap-std", sweep_args.gap_std)->capture_default_str();
  sweep_cmd->add_option("--easy-gap-mean", sweep_args.easy_gap_mean)->capture_default_str();
  sweep_cmd->add_option("--easy-gap-std", sweep_args.easy_gap_std)->capture_default_str();
  sweep_cmd->add_option("--diagonal", sweep_args.diagonal)->capture_default_str();
  sweep_args.margin.attach(sweep_cmd);
  sweep_cmd->add_option("--seed", sweep_args.seed)->capture_default_str();
  sweep_cmd->add_option("--out", sweep_args.out, "output CSV (default stdout)");

  // select-keywords
  struct {
    std::string corpus, lexicon, out, report;
    std::string mode = "hc";
    std::string spatial;
    int top_k = 3;
    double sample_temperature = 1.0;
    std::uint64_t seed = 0;
    double quota_attribute = 0.5;
    std::string word_column = "Word";
    std::string rating_column = "Conc.M";
  } select_args;
  CLI::App* select_cmd =
      app.add_subcommand("select-keywords", "concreteness-biased keyword selection");
  select_cmd->add_option("--corpus", select_args.corpus, "tagged corpus JSONL")->required();
  select_cmd->add_option("--lexicon", select_args.lexicon, "ratings CSV/TSV")->required();
  select_cmd->add_option("--mode", select_args.mode, "hc|lc|wo")->capture_default_str();
  select_cmd->add_option("--top-k", select_args.top_k)->capture_default_str();
  select_cmd->add_option("--sample-temperature", select_args.sample_temperature)
      ->capture_default_str();
  select_cmd->add_option("--seed", select_args.seed)->capture_default_str();
  select_cmd->add_option("--quota-attribute", select_args.quota_attribute,
                         "target attribute share of the attribute/object split")
      ->capture_default_str();
  select_cmd->add_option("--spatial", select_args.spatial,
                         "spatial preposition/phrase list");
  select_cmd->add_option("--word-column", select_args.word_column)->capture_default_str();
  select_cmd->add_option("--rating-column", select_args.rating_column)
      ->capture_default_str();
  select_cmd->add_option("--out", select_args.out, "selections JSONL")->required();
  select_cmd->add_option("--report", select_args.report, "run report JSON");

  // generate-negatives
  struct {
    std::string selections, out, report;
    std::string client = "mock";
    std::string endpoint;
    std::string prompt_dir;
    std::string prompt_style = "category";
    int max_retries = 2;
    int max_concurrent = 4;
    double timeout = 30.0;
    bool images = false;
    std::string corpus;
    double strength = 0.9;
    int steps = 2;
  } gen_args;
  CLI::App* gen_cmd =
      app.add_subcommand("generate-negatives", "hard-negative caption/image generation");
  gen_cmd->add_option("--selections", gen_args.selections)->required();
  gen_cmd->add_option("--client", gen_args.client, "mock|http")->capture_default_str();
  gen_cmd->add_option("--endpoint", gen_args.endpoint, "http backend base URL");
  gen_cmd->add_option("--prompt-dir", gen_args.prompt_dir,
                      "directory with template.txt and example blocks");
  gen_cmd->add_option("--prompt-style", gen_args.prompt_style, "category|random")
      ->capture_default_str();
  gen_cmd->add_option("--max-retries", gen_args.max_retries)->capture_default_str();
  gen_cmd->add_option("--max-concurrent", gen_args.max_concurrent)->capture_default_str();
  gen_cmd->add_option("--timeout", gen_args.timeout)->capture_default_str();
  gen_cmd->add_flag("--images", gen_args.images, "also request edited images");
  gen_cmd->add_option("--corpus", gen_args.corpus,
                      "corpus JSONL, resolves anchor image refs for --images");
  gen_cmd->add_option("--strength", gen_args.strength)->capture_default_str();
  gen_cmd->add_option("--steps", gen_args.steps)->capture_default_str();
  gen_cmd->add_option("--out", gen_args.out, "negatives JSONL")->required();
  gen_cmd->add_option("--report", gen_args.report, "run report JSON");

  // lexicon-stats
  struct {
    std::string path;
    std::string word_column = "Word";
    std::string rating_column = "Conc.M";
  } stats_args;
  CLI::App* stats_cmd = app.add_subcommand("lexicon-stats", "lexicon size and histogram");
  stats_cmd->add_option("--path", stats_args.path)->required();
  stats_cmd->add_option("--word-column", stats_args.word_column)->capture_default_str();
  stats_cmd->add_option("--rating-column", stats_args.rating_column)
      ->capture_default_str();

  // train-toy
  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train-toy", "toy contrastive trainer");
  train_cmd->add_option("--config", train_args.config_path, "JSON config");
  train_cmd->add_option("--loss", train_args.loss, "infonce|cement")->capture_default_str();
  train_args.margin.attach(train_cmd);
  train_cmd->add_option("--out-trace", train_args.out_trace, "per-step trace CSV");
  train_cmd->add_option("--out-eval", train_args.out_eval, "evaluation JSON");
  train_cmd->add_option("--scenes", train_args.scenes);
  train_cmd->add_option("--latent-dim", train_args.latent_dim);
  train_cmd->add_option("--noise-std", train_args.noise_std);
  train_cmd->add_option("--dataset-seed", train_args.dataset_seed);
  train_cmd->add_option("--batch", train_args.batch);
  train_cmd->add_option("--epochs", train_args.epochs);
  train_cmd->add_option("--lr", train_args.learning_rate);
  train_cmd->add_option("--momentum", train_args.momentum);
  train_cmd->add_option("--temperature", train_args.temperature);
  train_cmd->add_option("--seed", train_args.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (loss_cmd->parsed()) return run_loss(loss_args, temp_opt->count() > 0);

    if (table_cmd->parsed()) {
      const cml::MarginConfig cfg = table_args.margin.to_config();
      std::ofstream file;
      std::ostream& out = open_or_stdout(file, table_args.out);
      out << "c,margin\n";
      char buf[80];
      for (double c = table_args.c_from; c <= table_args.c_to + 1e-12;
           c += table_args.step) {
        const std::vector<double> m = cml::margin_vector(std::vector<double>{c}, cfg);
        std::snprintf(buf, sizeof(buf), "%.6g,%.17g\n", c, m[0]);
        out << buf;
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      cml::LogitGapConfig gap_cfg;
      gap_cfg.diagonal = sweep_args.diagonal;
      gap_cfg.hard_gap_mean = sweep_args.gap_mean;
      gap_cfg.hard_gap_std = sweep_args.gap_std;
      gap_cfg.easy_gap_mean = sweep_args.easy_gap_mean;
      gap_cfg.easy_gap_std = sweep_args.easy_gap_std;
      std::vector<std::size_t> sizes;
      std::stringstream ss(sweep_args.sizes);
      std::string cell;
      while (std::getline(ss, cell, ',')) sizes.push_back(std::stoul(cell));
      const auto points = cml::batch_sweep(gap_cfg, sizes,
                                           sweep_args.margin.to_config(), sweep_args.seed);
      std::ofstream file;
      std::ostream& out = open_or_stdout(file, sweep_args.out);
      out << "N,positive_pull,hard_reject,easy_reject,hard_share\n";
      char buf[256];
      for (const auto& point : points) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", point.n_anchors,
                      point.report.positive_pull, point.report.hard_reject,
                      point.report.easy_reject, point.report.hard_share);
        out << buf;
      }
      return 0;
    }

    if (select_cmd->parsed()) {
      cml::LexiconLoadOptions lex_options;
      lex_options.word_column = select_args.word_column;
      lex_options.rating_column = select_args.rating_column;
      const cml::ConcretenessLexicon lexicon =
          cml::ConcretenessLexicon::load(select_args.lexicon, lex_options);
      const cml::SpatialLexicon spatial =
          select_args.spatial.empty()
              ? cml::SpatialLexicon::load(default_data_dir() + "/spatial_prepositions.txt")
              : cml::SpatialLexicon::load(select_args.spatial);
      const std::vector<cml::CorpusRecord> corpus =
          cml::read_corpus_jsonl(select_args.corpus);
      cml::SelectionPolicy policy;
      if (select_args.mode == "hc")
        policy.mode = cml::SelectionPolicy::Mode::high_concreteness;
      else if (select_args.mode == "lc")
        policy.mode = cml::SelectionPolicy::Mode::low_concreteness;
      else if (select_args.mode == "wo")
        policy.mode = cml::SelectionPolicy::Mode::random;
      else
        throw CLI::ValidationError("--mode", "expected hc|lc|wo");
      policy.top_k = select_args.top_k;
      policy.sample_temperature = select_args.sample_temperature;
      policy.seed = select_args.seed;
      cml::QuotaState quota;
      quota.target_attribute = select_args.quota_attribute;
      quota.target_object = 1.0 - select_args.quota_attribute;
      cml::SelectionRunReport report;
      const auto records =
          cml::select_keywords(corpus, lexicon, spatial, policy, quota, &report);
      cml::write_selections_jsonl(select_args.out, records);
      if (!select_args.report.empty()) {
        ordered_json j;
        j["processed"] = report.processed;
        j["skipped_no_candidates"] = report.skipped_no_candidates;
        j["fallback_used"] = report.fallback_used;
        j["attribute"] = report.quota.n_attribute;
        j["object"] = report.quota.n_object;
        j["relation"] = report.quota.n_relation;
        std::ofstream out(select_args.report, std::ios::binary);
        out << j.dump(2) << "\n";
      }
      std::cerr << "selected " << records.size() << " keywords\n";
      return 0;
    }

    if (gen_cmd->parsed()) {
      const std::string prompt_dir =
          gen_args.prompt_dir.empty() ? default_data_dir() + "/prompt" : gen_args.prompt_dir;
      const cml::PromptTemplate tmpl = cml::PromptTemplate::load(prompt_dir);
      cml::GenerationClientConfig cfg;
      cfg.endpoint = gen_args.endpoint;
      cfg.max_retries = gen_args.max_retries;
      cfg.max_concurrent = gen_args.max_concurrent;
      cfg.timeout_seconds = gen_args.timeout;
      cfg.image_strength = gen_args.strength;
      cfg.image_steps = gen_args.steps;
      cml::validate_client_config(cfg);

      std::unique_ptr<cml::GenerationClient> owned;
      cml::MockClient mock;
      cml::GenerationClient* client = &mock;
      if (gen_args.client == "http") {
        owned = cml::make_http_client(cfg);
        client = owned.get();
      } else if (gen_args.client != "mock") {
        throw CLI::ValidationError("--client", "expected mock|http");
      }

      cml::GenerationOptions options;
      options.generate_images = gen_args.images;
      if (gen_args.prompt_style == "random")
        options.prompt_block_override = "random";
      else if (gen_args.prompt_style != "category")
        throw CLI::ValidationError("--prompt-style", "expected category|random");
      if (!gen_args.corpus.empty()) {
        for (const auto& record : cml::read_corpus_jsonl(gen_args.corpus))
          options.image_refs[record.id] = record.image_ref;
      }
      const auto selections = cml::read_selections_jsonl(gen_args.selections);
      const cml::GenerationResult result =
          cml::run_generation(selections, *client, tmpl, cfg, options);
      cml::write_negatives_jsonl(gen_args.out, result.records);
      if (!gen_args.report.empty())
        cml::write_run_report_json(gen_args.report, result.report);
      std::cerr << "ok " << result.report.ok << " / " << result.report.total << "\n";
      return 0;
    }

    if (stats_cmd->parsed()) {
      cml::LexiconLoadOptions options;
      options.word_column = stats_args.word_column;
      options.rating_column = stats_args.rating_column;
      cml::LexiconLoadReport load_report;
      const cml::ConcretenessLexicon lexicon =
          cml::ConcretenessLexicon::load(stats_args.path, options, &load_report);
      std::cout << "entries: " << lexicon.size() << "\n";
      std::cout << "duplicates_skipped: " << load_report.duplicates << "\n";
      const auto bins = lexicon.histogram();
      for (std::size_t b = 0; b < bins.size(); ++b) {
        const double lo = 1.0 + 0.5 * static_cast<double>(b);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "[%.1f,%.1f%s: %zu\n", lo, lo + 0.5,
                      b + 1 == bins.size() ? "]" : ")", bins[b]);
        std::cout << buf;
      }
      return 0;
    }

    if (train_cmd->parsed()) return run_train_toy(train_cmd, train_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
