#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cedi/common.hpp"
#include "cedi/tensor.hpp"

namespace cedi::corpus {

// One surface unit of the boundary-free token stream. `surface` always
// equals the document text slice [start, end).
struct Token {
  std::string surface;
  std::string lower;
  int start = 0;
  int end = 0;  // exclusive

  int length() const { return end - start; }
};

// A typed PII mention over an inclusive token range. Gold and predicted
// annotations share this type. char offsets are -1 when the span was built
// from a bare tag sequence without a document.
struct EntitySpan {
  int first_token = 0;
  int last_token = 0;  // inclusive
  std::string label;
  int char_start = -1;
  int char_end = -1;

  bool same_mention(const EntitySpan& o) const {
    return first_token == o.first_token && last_token == o.last_token &&
           label == o.label;
  }
};

// line_breaks is display metadata only; no model input is ever derived from
// it (the redaction formatter is the single consumer, and it works off the
// raw text anyway).
struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<EntitySpan> gold_spans;
  std::vector<int> line_breaks;
};

enum class TagScheme { kBio, kBioes };

TagScheme tag_scheme_from_string(const std::string& s);
std::string to_string(TagScheme s);

// Bidirectional string<->id map with PAD=0, UNK=1 reserved.
struct StringIndex {
  std::unordered_map<std::string, int> to_id;
  std::vector<std::string> to_str;

  static StringIndex with_reserved();

  int add(const std::string& s);
  // UNK for strings that were never added.
  int id_of(const std::string& s) const;
  const std::string& str_of(int id) const;
  int size() const { return static_cast<int>(to_str.size()); }
};

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadStr = "<pad>";
  static constexpr const char* kUnkStr = "<unk>";

  StringIndex tokens;    // lowercased surface forms
  StringIndex chars;     // single bytes, case preserved
  StringIndex prefixes;  // lowercase, frequency-thresholded
  StringIndex suffixes;
  StringIndex tags;

  int char_id(unsigned char c) const { return char_lut[c]; }
  int token_id(const std::string& lower) const { return tokens.id_of(lower); }
  void rebuild_char_lut();

  std::array<int, 256> char_lut{};
};

struct EmbeddingTable {
  num::TensorPtr weights;  // [V x dim]
  int dim = 0;
  bool trainable = true;
  std::vector<uint8_t> frozen_rows;  // 1 = gradient never accumulates

  int rows() const { return weights ? weights->shape[0] : 0; }

  // Row id as a fresh vector tensor; gradient scatters back into the table
  // unless the row is frozen or the table is not trainable.
  num::TensorPtr lookup(num::Tape& tape, int id) const;

  // PAD row zeroed and frozen; the rest uniform in [-bound, bound].
  static EmbeddingTable random(int rows, int dim, double bound, Rng& rng,
                               bool trainable = true);
  EmbeddingTable clone() const;
};

// ---- operations -----------------------------------------------------------

// Maximal runs of letters/digits are tokens; every other non-whitespace
// character is a token of its own. Bytes >= 0x80 count as letters so UTF-8
// sequences stay in one token.
std::vector<Token> tokenize(const std::string& text);

// Tokenizes and records line-break offsets.
Document make_document(std::string id, std::string text);

// Reads a UTF-8 .txt / brat-style .ann pair. Annotation lines look like
// "T1<TAB>LABEL start end<TAB>surface". Spans that split a token are snapped
// outward to full tokens with a warning.
Document load_standoff(const std::string& text_path,
                       const std::string& ann_path,
                       std::vector<std::string>* warnings = nullptr);

void write_standoff_ann(std::ostream& out, const Document& doc,
                        const std::vector<EntitySpan>& spans);

std::vector<std::string> spans_to_tags(const Document& doc, TagScheme scheme);

// Inverse of spans_to_tags on well-formed input; an I-L or E-L without a
// compatible open span starts a new span, unknown tag strings count as O.
std::vector<EntitySpan> tags_to_spans(const std::vector<std::string>& tags,
                                      TagScheme scheme,
                                      const Document* doc = nullptr);

// Lowercased prefix/suffix of length n_affix; tokens shorter than n_affix
// yield the empty-string sentinel, which maps to UNK.
std::pair<std::string, std::string> extract_affixes(const Token& token,
                                                    int n_affix);

// Deterministic id assignment: frequency desc, then lexicographic. Affix
// entries require corpus frequency >= affix_threshold.
Vocabulary build_vocab(const std::vector<Document>& docs, int affix_threshold,
                       int n_affix, TagScheme scheme);

struct PretrainedResult {
  EmbeddingTable table;
  double coverage = 0.0;  // fraction of non-reserved vocab rows found in file
};

// Plain-text "word v1 ... v_dim" lines; lookup by lowercased form. Missing
// rows are drawn uniformly from [-sqrt(3/dim), sqrt(3/dim)].
PretrainedResult load_pretrained(const std::string& path,
                                 const Vocabulary& vocab, int dim, Rng& rng);

// Seeded shuffle then split with |train| = round(2/3 * N).
std::pair<std::vector<Document>, std::vector<Document>> split_train_valid(
    std::vector<Document> docs, uint64_t seed);

// Column format: "surface<TAB>start<TAB>end<TAB>tag" lines, blank line
// between documents.
void write_column(std::ostream& out, const std::vector<Document>& docs,
                  const std::vector<std::vector<std::string>>& tags);
std::pair<std::vector<Document>, std::vector<std::vector<std::string>>>
read_column(std::istream& in);

}  // namespace cedi::corpus
