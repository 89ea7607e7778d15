#pragma once

#include <optional>
#include <string>

#include "cedi/model.hpp"

namespace cedi::cli {

// Exit code contract, stable for scripting.
constexpr int kOk = 0;
constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kInternalError = 4;

struct RunConfig {
  model::CediConfig model;
  std::string train_dir;
  std::string valid_dir;
  std::string test_dir;
  std::string embeddings_path;
  std::string checkpoint_path;
  std::string output_dir = ".";
};

// Line-oriented "key = value" file; '#' comments; unknown or repeated keys
// rejected. Missing keys keep their defaults.
RunConfig parse_config_file(const std::string& path);

int cmd_train(const RunConfig& config, bool quiet);
int cmd_predict(const std::string& checkpoint_path,
                const std::string& input_dir, const std::string& output_dir,
                bool quiet);
int cmd_evaluate(const std::string& gold_dir, const std::string& pred_dir,
                 const std::string& mode, bool machine, std::ostream& out);
int cmd_compare(const std::string& gold_dir, const std::string& pred_a_dir,
                const std::string& pred_b_dir, int shuffles, uint64_t seed,
                std::ostream& out);
int cmd_redact(const std::string& checkpoint_path,
               const std::string& input_dir, const std::string& output_dir,
               const std::string& style, bool quiet);
int cmd_generate(const std::string& output_dir, int n_docs, uint64_t seed,
                 bool quiet);

// Parses argv, dispatches, and maps exceptions onto the exit codes above.
int run_cli(int argc, const char* const* argv);

}  // namespace cedi::cli
