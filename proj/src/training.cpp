#include "cedi/training.hpp"

#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

namespace cedi::train {

namespace {

constexpr uint64_t kShuffleStream = 0x5F1E;
constexpr uint64_t kDropoutStream = 0xD0D0;
constexpr uint64_t kPretrainedStream = 0x9107;

std::string epoch_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.4f\t%.4f\t%.4f\t%d", r.epoch,
                r.train_loss, r.valid_p, r.valid_r, r.valid_f1,
                r.patience_used);
  return buf;
}

}  // namespace

double train_one_epoch(model::CediModel& model,
                       const std::vector<corpus::Document>& docs,
                       int epoch_index) {
  if (docs.empty()) throw DomainError("train_one_epoch: no documents");
  const uint64_t seed = model.config.seed;
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(Rng::derive(seed, kShuffleStream, epoch_index));
  shuffle_rng.shuffle(order);

  const auto params = model.parameters();
  double total_loss = 0.0;
  num::Tape tape;
  for (size_t slot = 0; slot < order.size(); ++slot) {
    Rng doc_rng(Rng::derive(seed, kDropoutStream,
                            (static_cast<uint64_t>(epoch_index) << 24) | slot));
    auto doc_loss = model::loss(tape, model, docs[order[slot]], true, doc_rng);
    total_loss += doc_loss->item();
    num::backward(tape, doc_loss);
    num::sgd_step(params, model.config.lr, model.config.clip_norm);
    tape.clear();
  }
  return total_loss / static_cast<double>(docs.size());
}

eval::EvalReport evaluate(const model::CediModel& model,
                          const std::vector<corpus::Document>& docs) {
  eval::SpanLists gold, pred;
  gold.reserve(docs.size());
  pred.reserve(docs.size());
  for (const auto& doc : docs) {
    gold.push_back(doc.gold_spans);
    pred.push_back(model::predict(model, doc));
  }
  return eval::entity_prf(gold, pred);
}

TrainResult train(model::CediModel model,
                  const std::vector<corpus::Document>& train_docs,
                  const std::vector<corpus::Document>& valid_docs,
                  std::ostream* log, TrainState resume) {
  if (train_docs.empty() || valid_docs.empty()) {
    throw DomainError("train: training and validation sets must be non-empty");
  }
  // Same id plus same text marks the same document; ids alone can collide
  // across corpora that were generated into different directories.
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& d : train_docs) seen.emplace(d.id, d.text);
  for (const auto& d : valid_docs) {
    if (seen.count({d.id, d.text})) {
      throw DomainError("train: document \"" + d.id +
                        "\" appears in both train and validation sets");
    }
  }

  TrainState state = std::move(resume);
  state.rng_seed = model.config.seed;
  const int patience = model.config.patience;
  model::CediModel best = model.clone();

  while (state.epoch < model.config.max_epochs) {
    const double mean_loss = train_one_epoch(model, train_docs, state.epoch);
    ++state.epoch;
    const auto report = evaluate(model, valid_docs);

    const bool improved = report.f1 >= state.best_valid_f1 + 1e-6;
    if (improved) {
      state.best_valid_f1 = report.f1;
      state.best_epoch = state.epoch;
      state.patience_used = 0;
      best = model.clone();
    }

    EpochRecord record{state.epoch, mean_loss,      report.precision,
                       report.recall, report.f1, state.patience_used};
    if (!improved) {
      record.patience_used = patience == 0 ? 0 : state.patience_used + 1;
    }
    state.history.push_back(record);
    if (log) *log << epoch_line(record) << "\n";

    if (!improved) {
      if (patience == 0) break;
      if (++state.patience_used >= patience) break;
    }
  }
  return TrainResult{std::move(best), std::move(state)};
}

RepeatedReport run_repeated(const std::vector<corpus::Document>& train_docs,
                            const std::vector<corpus::Document>& valid_docs,
                            const std::vector<corpus::Document>& test_docs,
                            const model::CediConfig& base_config,
                            const std::vector<uint64_t>& seeds,
                            const std::string& embeddings_path,
                            std::ostream* log) {
  if (seeds.empty()) throw DomainError("run_repeated: need at least one seed");
  const auto vocab =
      corpus::build_vocab(train_docs, base_config.prefix_threshold,
                          base_config.affix_length, base_config.scheme);
  RepeatedReport report;
  for (uint64_t seed : seeds) {
    model::CediConfig config = base_config;
    config.seed = seed;
    model::CediModel initial = [&] {
      if (embeddings_path.empty()) return model::build(config, vocab);
      Rng rng(Rng::derive(seed, kPretrainedStream));
      const auto pretrained = corpus::load_pretrained(
          embeddings_path, vocab, config.token_dim, rng);
      return model::build(config, vocab, &pretrained.table);
    }();
    auto result = train(std::move(initial), train_docs, valid_docs, log);
    const auto test_report = evaluate(result.best, test_docs);
    report.rows.push_back(
        SeedRun{seed, test_report.precision, test_report.recall,
                test_report.f1});
  }
  for (const SeedRun& row : report.rows) {
    report.mean.precision += row.precision;
    report.mean.recall += row.recall;
    report.mean.f1 += row.f1;
  }
  const auto n = static_cast<double>(report.rows.size());
  report.mean.precision /= n;
  report.mean.recall /= n;
  report.mean.f1 /= n;
  return report;
}

std::string RepeatedReport::to_string() const {
  char buf[120];
  std::ostringstream out;
  for (const SeedRun& row : rows) {
    std::snprintf(buf, sizeof buf, "seed %llu\t%.4f\t%.4f\t%.4f\n",
                  static_cast<unsigned long long>(row.seed), row.precision,
                  row.recall, row.f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean\t%.4f\t%.4f\t%.4f\n", mean.precision,
                mean.recall, mean.f1);
  out << buf;
  return out.str();
}

}  // namespace cedi::train
