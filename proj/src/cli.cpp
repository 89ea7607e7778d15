#include "cedi/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cedi/config_io.hpp"
#include "cedi/evaluation.hpp"
#include "cedi/synthetic.hpp"
#include "cedi/training.hpp"

namespace fs = std::filesystem;

namespace cedi::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool apply_path_key(RunConfig& config, const std::string& key,
                    const std::string& value) {
  if (key == "train_dir") config.train_dir = value;
  else if (key == "valid_dir") config.valid_dir = value;
  else if (key == "test_dir") config.test_dir = value;
  else if (key == "embeddings_path") config.embeddings_path = value;
  else if (key == "checkpoint_path") config.checkpoint_path = value;
  else if (key == "output_dir") config.output_dir = value;
  else return false;
  return true;
}

// Sorted .txt stems in a directory.
std::vector<std::string> list_stems(const std::string& dir,
                                    const std::string& extension) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::vector<corpus::Document> load_standoff_dir(const std::string& dir) {
  std::vector<corpus::Document> docs;
  for (const std::string& stem : list_stems(dir, ".txt")) {
    const std::string txt = dir + "/" + stem + ".txt";
    const std::string ann = dir + "/" + stem + ".ann";
    std::vector<std::string> warnings;
    docs.push_back(corpus::load_standoff(txt, ann, &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  }
  if (docs.empty()) throw DataError("no .txt/.ann pairs in " + dir);
  return docs;
}

// Predicted spans for the gold documents; pred_dir holds .ann files keyed by
// the gold document ids.
eval::SpanLists load_predictions(const std::vector<corpus::Document>& gold,
                                 const std::string& gold_dir,
                                 const std::string& pred_dir) {
  std::set<std::string> gold_ids;
  eval::SpanLists pred;
  std::vector<std::string> missing;
  for (const auto& doc : gold) {
    gold_ids.insert(doc.id);
    const std::string ann = pred_dir + "/" + doc.id + ".ann";
    if (!fs::is_regular_file(ann)) {
      missing.push_back(doc.id);
      continue;
    }
    pred.push_back(
        corpus::load_standoff(gold_dir + "/" + doc.id + ".txt", ann).gold_spans);
  }
  for (const std::string& stem : list_stems(pred_dir, ".ann")) {
    if (!gold_ids.count(stem)) missing.push_back(stem);
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& id : missing) joined += " " + id;
    throw DataError("document ids do not match between directories:" + joined);
  }
  return pred;
}

model::CediModel load_checkpoint_arg(const std::string& path) {
  try {
    return model::load(path);
  } catch (const Error& e) {
    // A bad checkpoint argument is a usage error for predict/redact.
    throw ConfigError(e.what());
  }
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path);
  out << contents;
  if (!out) throw DataError("failed writing: " + path);
}

}  // namespace

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig config;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": key \"" + key + "\" given twice");
    }
    if (!model::apply_config_key(config.model, key, value) &&
        !apply_path_key(config, key, value)) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": unknown key \"" + key + "\"");
    }
  }
  return config;
}

int cmd_train(const RunConfig& config, bool quiet) {
  config.model.validate();
  auto all_docs = load_standoff_dir(config.train_dir);
  std::vector<corpus::Document> train_docs, valid_docs;
  if (config.valid_dir.empty()) {
    std::tie(train_docs, valid_docs) =
        corpus::split_train_valid(std::move(all_docs), config.model.seed);
  } else {
    train_docs = std::move(all_docs);
    valid_docs = load_standoff_dir(config.valid_dir);
  }

  const auto vocab =
      corpus::build_vocab(train_docs, config.model.prefix_threshold,
                          config.model.affix_length, config.model.scheme);
  model::CediModel initial = [&] {
    if (config.embeddings_path.empty()) {
      return model::build(config.model, vocab);
    }
    Rng rng(Rng::derive(config.model.seed, 0x9107));
    const auto pretrained = corpus::load_pretrained(
        config.embeddings_path, vocab, config.model.token_dim, rng);
    if (!quiet) {
      std::fprintf(stderr, "pretrained coverage: %.3f\n", pretrained.coverage);
    }
    return model::build(config.model, vocab, &pretrained.table);
  }();

  fs::create_directories(config.output_dir);
  const std::string log_path = config.output_dir + "/training.log";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw DataError("cannot write: " + log_path);

  auto result =
      train::train(std::move(initial), train_docs, valid_docs, &log);

  const std::string checkpoint = config.checkpoint_path.empty()
                                     ? config.output_dir + "/model.ckpt"
                                     : config.checkpoint_path;
  model::save(result.best, checkpoint);
  if (!quiet) {
    std::fprintf(stderr,
                 "best epoch %d, validation F1 %.4f, checkpoint %s\n",
                 result.state.best_epoch, result.state.best_valid_f1,
                 checkpoint.c_str());
  }
  return kOk;
}

int cmd_predict(const std::string& checkpoint_path,
                const std::string& input_dir, const std::string& output_dir,
                bool quiet) {
  const auto m = load_checkpoint_arg(checkpoint_path);
  fs::create_directories(output_dir);
  int count = 0;
  for (const std::string& stem : list_stems(input_dir, ".txt")) {
    std::ifstream in(input_dir + "/" + stem + ".txt", std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    const auto doc = corpus::make_document(stem, text.str());
    const auto spans = model::predict(m, doc);
    std::ostringstream ann;
    corpus::write_standoff_ann(ann, doc, spans);
    write_file(output_dir + "/" + stem + ".ann", ann.str());
    ++count;
  }
  if (!quiet) std::fprintf(stderr, "predicted %d documents\n", count);
  return kOk;
}

int cmd_evaluate(const std::string& gold_dir, const std::string& pred_dir,
                 const std::string& mode, bool machine, std::ostream& out) {
  const auto gold_docs = load_standoff_dir(gold_dir);
  eval::SpanLists gold;
  for (const auto& d : gold_docs) gold.push_back(d.gold_spans);
  const auto pred = load_predictions(gold_docs, gold_dir, pred_dir);
  eval::EvalReport report;
  if (mode == "entity") {
    report = eval::entity_prf(gold, pred);
  } else if (mode == "token") {
    report = eval::token_prf(gold, pred);
  } else {
    throw ConfigError("mode must be entity or token, got " + mode);
  }
  out << eval::format_report(report, machine);
  return kOk;
}

int cmd_compare(const std::string& gold_dir, const std::string& pred_a_dir,
                const std::string& pred_b_dir, int shuffles, uint64_t seed,
                std::ostream& out) {
  const auto gold_docs = load_standoff_dir(gold_dir);
  eval::SpanLists gold;
  for (const auto& d : gold_docs) gold.push_back(d.gold_spans);
  const auto pred_a = load_predictions(gold_docs, gold_dir, pred_a_dir);
  const auto pred_b = load_predictions(gold_docs, gold_dir, pred_b_dir);
  const double f1_a = eval::entity_f1_metric(gold, pred_a);
  const double f1_b = eval::entity_f1_metric(gold, pred_b);
  const double p = eval::approx_randomization(eval::entity_f1_metric, gold,
                                              pred_a, pred_b, shuffles, seed);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "F1 A = %.6f\nF1 B = %.6f\ndiff = %.6f\np = %.6f\n", f1_a,
                f1_b, std::fabs(f1_a - f1_b), p);
  out << buf;
  return kOk;
}

int cmd_redact(const std::string& checkpoint_path,
               const std::string& input_dir, const std::string& output_dir,
               const std::string& style, bool quiet) {
  if (style != "placeholder" && style != "mask") {
    throw ConfigError("style must be placeholder or mask, got " + style);
  }
  const auto m = load_checkpoint_arg(checkpoint_path);
  fs::create_directories(output_dir);
  int count = 0;
  for (const std::string& stem : list_stems(input_dir, ".txt")) {
    std::ifstream in(input_dir + "/" + stem + ".txt", std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    const auto doc = corpus::make_document(stem, text.str());
    auto spans = model::predict(m, doc);
    std::sort(spans.begin(), spans.end(),
              [](const corpus::EntitySpan& a, const corpus::EntitySpan& b) {
                return a.char_start < b.char_start;
              });
    // Replace spans back to front; every byte outside a span is untouched.
    std::string redacted = doc.text;
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
      const auto len = static_cast<size_t>(it->char_end - it->char_start);
      const std::string replacement =
          style == "mask" ? std::string(len, '#')
                          : "[**" + it->label + "**]";
      redacted.replace(static_cast<size_t>(it->char_start), len, replacement);
    }
    write_file(output_dir + "/" + stem + ".txt", redacted);
    ++count;
  }
  if (!quiet) std::fprintf(stderr, "redacted %d documents\n", count);
  return kOk;
}

int cmd_generate(const std::string& output_dir, int n_docs, uint64_t seed,
                 bool quiet) {
  if (n_docs < 1) throw ConfigError("need at least one document");
  fs::create_directories(output_dir);
  const auto docs = corpus::generate_synthetic_corpus(seed, n_docs);
  for (const auto& doc : docs) {
    write_file(output_dir + "/" + doc.id + ".txt", doc.text);
    std::ostringstream ann;
    corpus::write_standoff_ann(ann, doc, doc.gold_spans);
    write_file(output_dir + "/" + doc.id + ".ann", ann.str());
  }
  if (!quiet) {
    std::fprintf(stderr, "wrote %d documents to %s\n", n_docs,
                 output_dir.c_str());
  }
  return kOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"CEDI sequence labeling and de-identification toolchain"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  std::string config_path, checkpoint, input_dir, output_dir;
  std::string gold_dir, pred_dir, pred_b_dir, mode = "entity";
  std::string style = "placeholder";
  bool machine = false;
  int shuffles = 9999;
  int n_docs = 100;
  std::optional<uint64_t> seed_flag;

  auto* train_cmd = app.add_subcommand("train", "train from a run-config file");
  train_cmd->add_option("--config", config_path, "run-config file")->required();
  train_cmd->add_option("--seed", seed_flag, "override the config seed");

  auto* predict_cmd =
      app.add_subcommand("predict", "write .ann predictions for a directory");
  predict_cmd->add_option("--checkpoint", checkpoint)->required();
  predict_cmd->add_option("--input", input_dir)->required();
  predict_cmd->add_option("--output", output_dir)->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions");
  eval_cmd->add_option("--gold", gold_dir)->required();
  eval_cmd->add_option("--pred", pred_dir)->required();
  eval_cmd->add_option("--mode", mode, "entity|token");
  eval_cmd->add_flag("--machine", machine, "tab-separated output");

  auto* compare_cmd =
      app.add_subcommand("compare", "approximate randomization test");
  compare_cmd->add_option("--gold", gold_dir)->required();
  compare_cmd->add_option("--a", pred_dir)->required();
  compare_cmd->add_option("--b", pred_b_dir)->required();
  compare_cmd->add_option("--shuffles", shuffles);
  compare_cmd->add_option("--seed", seed_flag);

  auto* redact_cmd = app.add_subcommand("redact", "rewrite text without PII");
  redact_cmd->add_option("--checkpoint", checkpoint)->required();
  redact_cmd->add_option("--input", input_dir)->required();
  redact_cmd->add_option("--output", output_dir)->required();
  redact_cmd->add_option("--style", style, "placeholder|mask");

  auto* generate_cmd =
      app.add_subcommand("generate", "write a synthetic standoff corpus");
  generate_cmd->add_option("--output", output_dir)->required();
  generate_cmd->add_option("--docs", n_docs);
  generate_cmd->add_option("--seed", seed_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (train_cmd->parsed()) {
      RunConfig config = parse_config_file(config_path);
      if (seed_flag) config.model.seed = *seed_flag;
      return cmd_train(config, quiet);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(checkpoint, input_dir, output_dir, quiet);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(gold_dir, pred_dir, mode, machine, std::cout);
    }
    if (compare_cmd->parsed()) {
      return cmd_compare(gold_dir, pred_dir, pred_b_dir, shuffles,
                         seed_flag.value_or(1), std::cout);
    }
    if (redact_cmd->parsed()) {
      return cmd_redact(checkpoint, input_dir, output_dir, style, quiet);
    }
    if (generate_cmd->parsed()) {
      return cmd_generate(output_dir, n_docs, seed_flag.value_or(7), quiet);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const AnnotationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace cedi::cli
