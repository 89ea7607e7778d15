#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cedi/evaluation.hpp"
#include "cedi/model.hpp"

namespace cedi::train {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_p = 0.0;
  double valid_r = 0.0;
  double valid_f1 = 0.0;
  int patience_used = 0;
};

struct TrainState {
  int epoch = 0;  // epochs completed
  double best_valid_f1 = -1.0;
  int best_epoch = 0;
  int patience_used = 0;
  std::vector<EpochRecord> history;
  uint64_t rng_seed = 0;
};

struct TrainResult {
  model::CediModel best;
  TrainState state;
};

// One seeded pass: shuffle, then one SGD update per document. Shuffle order
// and dropout streams derive from (model.config.seed, epoch_index, slot), so
// a resumed run replays the identical epoch. Returns the mean document loss.
double train_one_epoch(model::CediModel& model,
                       const std::vector<corpus::Document>& docs,
                       int epoch_index);

eval::EvalReport evaluate(const model::CediModel& model,
                          const std::vector<corpus::Document>& docs);

// Epochs until patience exhaustion or max_epochs, checkpointing on validation
// entity-F1 improvements of at least 1e-6. Returns the best checkpoint, never
// the final state. `log` receives one line per epoch:
// "epoch<TAB>train_loss<TAB>valid_P<TAB>valid_R<TAB>valid_F1<TAB>patience_used".
TrainResult train(model::CediModel model,
                  const std::vector<corpus::Document>& train_docs,
                  const std::vector<corpus::Document>& valid_docs,
                  std::ostream* log = nullptr, TrainState resume = {});

struct SeedRun {
  uint64_t seed = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RepeatedReport {
  std::vector<SeedRun> rows;
  SeedRun mean;  // arithmetic mean of the per-seed rows, seed field unused
  std::string to_string() const;
};

// Trains one model per seed and evaluates each on the test split.
RepeatedReport run_repeated(const std::vector<corpus::Document>& train_docs,
                            const std::vector<corpus::Document>& valid_docs,
                            const std::vector<corpus::Document>& test_docs,
                            const model::CediConfig& base_config,
                            const std::vector<uint64_t>& seeds,
                            const std::string& embeddings_path = "",
                            std::ostream* log = nullptr);

}  // namespace cedi::train
