#include "cedi/config_io.hpp"

#include <cstdio>
#include <cstdlib>

namespace cedi::model {

namespace {

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got \"" + value + "\"");
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got \"" + value +
                      "\"");
  }
}

}  // namespace

std::string format_double_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool apply_config_key(CediConfig& c, const std::string& key,
                      const std::string& value) {
  if (key == "ngram_size") c.ngram_size = parse_int(key, value);
  else if (key == "char_dim") c.char_dim = parse_int(key, value);
  else if (key == "prefix_dim") c.prefix_dim = parse_int(key, value);
  else if (key == "prefix_threshold") c.prefix_threshold = parse_int(key, value);
  else if (key == "affix_length") c.affix_length = parse_int(key, value);
  else if (key == "token_dim") c.token_dim = parse_int(key, value);
  else if (key == "char_hidden") c.char_hidden = parse_int(key, value);
  else if (key == "prefix_hidden") c.prefix_hidden = parse_int(key, value);
  else if (key == "context_hidden") c.context_hidden = parse_int(key, value);
  else if (key == "main_hidden") c.main_hidden = parse_int(key, value);
  else if (key == "attention_dim") c.attention_dim = parse_int(key, value);
  else if (key == "attention_window") c.attention_window = parse_int(key, value);
  else if (key == "chunk_length") c.chunk_length = parse_int(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_int(key, value);
  else if (key == "patience") c.patience = parse_int(key, value);
  else if (key == "dropout") c.dropout = parse_double(key, value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "clip_norm") c.clip_norm = parse_double(key, value);
  else if (key == "tag_scheme") c.scheme = corpus::tag_scheme_from_string(value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "use_char") c.features.chars = parse_bool(key, value);
  else if (key == "use_token") c.features.token = parse_bool(key, value);
  else if (key == "use_prefix") c.features.prefix = parse_bool(key, value);
  else if (key == "use_suffix") c.features.suffix = parse_bool(key, value);
  else if (key == "use_context") c.features.context = parse_bool(key, value);
  else if (key == "use_attention") c.features.attention = parse_bool(key, value);
  else if (key == "attention_over_chars") c.attention_over_chars = parse_bool(key, value);
  else if (key == "attention_over_ngrams") c.attention_over_ngrams = parse_bool(key, value);
  else return false;
  return true;
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const CediConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"ngram_size", std::to_string(c.ngram_size)},
      {"char_dim", std::to_string(c.char_dim)},
      {"prefix_dim", std::to_string(c.prefix_dim)},
      {"prefix_threshold", std::to_string(c.prefix_threshold)},
      {"affix_length", std::to_string(c.affix_length)},
      {"token_dim", std::to_string(c.token_dim)},
      {"char_hidden", std::to_string(c.char_hidden)},
      {"prefix_hidden", std::to_string(c.prefix_hidden)},
      {"context_hidden", std::to_string(c.context_hidden)},
      {"main_hidden", std::to_string(c.main_hidden)},
      {"attention_dim", std::to_string(c.attention_dim)},
      {"attention_window", std::to_string(c.attention_window)},
      {"chunk_length", std::to_string(c.chunk_length)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"patience", std::to_string(c.patience)},
      {"dropout", format_double_exact(c.dropout)},
      {"lr", format_double_exact(c.lr)},
      {"clip_norm", format_double_exact(c.clip_norm)},
      {"tag_scheme", corpus::to_string(c.scheme)},
      {"seed", std::to_string(c.seed)},
      {"use_char", b(c.features.chars)},
      {"use_token", b(c.features.token)},
      {"use_prefix", b(c.features.prefix)},
      {"use_suffix", b(c.features.suffix)},
      {"use_context", b(c.features.context)},
      {"use_attention", b(c.features.attention)},
      {"attention_over_chars", b(c.attention_over_chars)},
      {"attention_over_ngrams", b(c.attention_over_ngrams)},
  };
}

}  // namespace cedi::model
