#include "cedi/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace cedi::corpus {

namespace {

bool is_word_byte(unsigned char c) {
  // Multibyte UTF-8 units stay inside one token.
  return std::isalnum(c) || c >= 0x80;
}

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// brat surfaces carry line breaks as spaces; normalize both sides the same
// way before comparing.
std::string normalize_ws(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

struct ParsedTag {
  char kind = 'O';  // one of O B I E S
  std::string label;
};

ParsedTag parse_tag(const std::string& tag, TagScheme scheme) {
  if (tag.size() >= 3 && tag[1] == '-') {
    const char k = tag[0];
    const bool known = (k == 'B' || k == 'I') ||
                       (scheme == TagScheme::kBioes && (k == 'E' || k == 'S'));
    if (known) return {k, tag.substr(2)};
  }
  return {'O', ""};  // "O", <unk>, or anything else ill-formed
}

}  // namespace

TagScheme tag_scheme_from_string(const std::string& s) {
  if (s == "bio" || s == "BIO") return TagScheme::kBio;
  if (s == "bioes" || s == "BIOES") return TagScheme::kBioes;
  throw ConfigError("unknown tag scheme: " + s);
}

std::string to_string(TagScheme s) {
  return s == TagScheme::kBio ? "bio" : "bioes";
}

// ---- StringIndex / Vocabulary ---------------------------------------------

StringIndex StringIndex::with_reserved() {
  StringIndex idx;
  idx.add(Vocabulary::kPadStr);
  idx.add(Vocabulary::kUnkStr);
  return idx;
}

int StringIndex::add(const std::string& s) {
  auto it = to_id.find(s);
  if (it != to_id.end()) return it->second;
  const int id = static_cast<int>(to_str.size());
  to_id.emplace(s, id);
  to_str.push_back(s);
  return id;
}

int StringIndex::id_of(const std::string& s) const {
  auto it = to_id.find(s);
  return it == to_id.end() ? Vocabulary::kUnk : it->second;
}

const std::string& StringIndex::str_of(int id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("StringIndex: id " + std::to_string(id) + " out of range");
  }
  return to_str[id];
}

void Vocabulary::rebuild_char_lut() {
  char_lut.fill(kUnk);
  for (int id = 2; id < chars.size(); ++id) {
    const std::string& s = chars.to_str[id];
    if (s.size() == 1) char_lut[static_cast<unsigned char>(s[0])] = id;
  }
}

// ---- EmbeddingTable ---------------------------------------------------------

num::TensorPtr EmbeddingTable::lookup(num::Tape& tape, int id) const {
  if (id < 0 || id >= rows()) {
    throw IndexError("EmbeddingTable: row " + std::to_string(id) +
                     " out of range");
  }
  const bool skip = !trainable || frozen_rows[static_cast<size_t>(id)];
  return num::row(tape, weights, id, skip);
}

EmbeddingTable EmbeddingTable::random(int rows, int dim, double bound,
                                      Rng& rng, bool trainable) {
  EmbeddingTable t;
  t.dim = dim;
  t.trainable = trainable;
  t.weights = num::Tensor::zeros({rows, dim}, trainable);
  t.frozen_rows.assign(static_cast<size_t>(rows), 0);
  t.frozen_rows[Vocabulary::kPad] = 1;
  for (int r = 0; r < rows; ++r) {
    if (r == Vocabulary::kPad) continue;  // stays all-zero
    for (int c = 0; c < dim; ++c) {
      t.weights->values[static_cast<size_t>(r) * dim + c] =
          rng.uniform(-bound, bound);
    }
  }
  return t;
}

EmbeddingTable EmbeddingTable::clone() const {
  EmbeddingTable t = *this;
  t.weights = weights->clone();
  return t;
}

// ---- tokenize ----------------------------------------------------------------

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  const int n = static_cast<int>(text.size());
  int i = 0;
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    int j = i + 1;
    if (is_word_byte(c)) {
      while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    }
    Token t;
    t.surface = text.substr(i, j - i);
    t.lower = lowercase(t.surface);
    t.start = i;
    t.end = j;
    tokens.push_back(std::move(t));
    i = j;
  }
  return tokens;
}

Document make_document(std::string id, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.tokens = tokenize(text);
  for (int i = 0; i < static_cast<int>(text.size()); ++i) {
    if (text[i] == '\n') doc.line_breaks.push_back(i);
  }
  doc.text = std::move(text);
  return doc;
}

// ---- standoff ------------------------------------------------------------------

Document load_standoff(const std::string& text_path,
                       const std::string& ann_path,
                       std::vector<std::string>* warnings) {
  std::string text = read_file(text_path);
  std::string stem = text_path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) {
    stem = stem.substr(slash + 1);
  }
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".txt") {
    stem = stem.substr(0, stem.size() - 4);
  }
  Document doc = make_document(stem, std::move(text));

  std::ifstream ann(ann_path, std::ios::binary);
  if (!ann) throw DataError("cannot open file: " + ann_path);
  std::string line;
  int lineno = 0;
  while (std::getline(ann, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = ann_path + ":" + std::to_string(lineno);

    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (line[0] != 'T' || tab1 == std::string::npos ||
        tab2 == std::string::npos) {
      throw FormatError(where + ": expected T<id>\\t<LABEL> <start> <end>\\t<surface>");
    }
    std::istringstream mid(line.substr(tab1 + 1, tab2 - tab1 - 1));
    std::string label;
    long start = -1, end = -1;
    if (!(mid >> label >> start >> end) || start < 0 || end <= start ||
        end > static_cast<long>(doc.text.size())) {
      throw FormatError(where + ": bad label/offsets");
    }
    const std::string surface = line.substr(tab2 + 1);
    const std::string slice = doc.text.substr(start, end - start);
    if (normalize_ws(slice) != normalize_ws(surface)) {
      throw IntegrityError(where + ": surface \"" + surface +
                           "\" does not match document slice \"" + slice + "\"");
    }

    // Snap to full tokens.
    int first = -1, last = -1;
    for (int t = 0; t < static_cast<int>(doc.tokens.size()); ++t) {
      const Token& tok = doc.tokens[t];
      if (tok.start < end && tok.end > start) {
        if (first < 0) first = t;
        last = t;
      }
    }
    if (first < 0) {
      throw IntegrityError(where + ": span covers no tokens");
    }
    EntitySpan span;
    span.first_token = first;
    span.last_token = last;
    span.label = label;
    span.char_start = doc.tokens[first].start;
    span.char_end = doc.tokens[last].end;
    if ((span.char_start != start || span.char_end != end) && warnings) {
      warnings->push_back(where + ": span [" + std::to_string(start) + "," +
                          std::to_string(end) + ") snapped to [" +
                          std::to_string(span.char_start) + "," +
                          std::to_string(span.char_end) + ")");
    }
    doc.gold_spans.push_back(std::move(span));
  }
  std::sort(doc.gold_spans.begin(), doc.gold_spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.first_token < b.first_token;
            });
  return doc;
}

void write_standoff_ann(std::ostream& out, const Document& doc,
                        const std::vector<EntitySpan>& spans) {
  int id = 1;
  for (const EntitySpan& s : spans) {
    const int cs = s.char_start >= 0 ? s.char_start
                                     : doc.tokens[s.first_token].start;
    const int ce = s.char_end >= 0 ? s.char_end : doc.tokens[s.last_token].end;
    out << "T" << id++ << "\t" << s.label << " " << cs << " " << ce << "\t"
        << normalize_ws(doc.text.substr(cs, ce - cs)) << "\n";
  }
}

// ---- tag schemes ----------------------------------------------------------------

std::vector<std::string> spans_to_tags(const Document& doc, TagScheme scheme) {
  const int n = static_cast<int>(doc.tokens.size());
  std::vector<std::string> tags(static_cast<size_t>(n), "O");
  std::vector<EntitySpan> spans = doc.gold_spans;
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.first_token < b.first_token;
            });
  int prev_end = -1;
  for (const EntitySpan& s : spans) {
    if (s.first_token > s.last_token || s.first_token < 0 || s.last_token >= n) {
      throw AnnotationError("span token range [" +
                            std::to_string(s.first_token) + "," +
                            std::to_string(s.last_token) + "] invalid for " +
                            std::to_string(n) + " tokens");
    }
    if (s.first_token <= prev_end) {
      throw AnnotationError("overlapping gold spans at token " +
                            std::to_string(s.first_token));
    }
    prev_end = s.last_token;
    if (scheme == TagScheme::kBioes && s.first_token == s.last_token) {
      tags[s.first_token] = "S-" + s.label;
      continue;
    }
    tags[s.first_token] = "B-" + s.label;
    for (int t = s.first_token + 1; t <= s.last_token; ++t) {
      tags[t] = "I-" + s.label;
    }
    if (scheme == TagScheme::kBioes) tags[s.last_token] = "E-" + s.label;
  }
  return tags;
}

std::vector<EntitySpan> tags_to_spans(const std::vector<std::string>& tags,
                                      TagScheme scheme, const Document* doc) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  std::string open_label;

  auto emit = [&](int first, int last, const std::string& label) {
    EntitySpan s;
    s.first_token = first;
    s.last_token = last;
    s.label = label;
    if (doc) {
      s.char_start = doc->tokens[first].start;
      s.char_end = doc->tokens[last].end;
    }
    spans.push_back(std::move(s));
  };
  auto close_open = [&](int last) {
    if (open_start >= 0) emit(open_start, last, open_label);
    open_start = -1;
  };

  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const ParsedTag t = parse_tag(tags[i], scheme);
    switch (t.kind) {
      case 'O':
        close_open(i - 1);
        break;
      case 'B':
        close_open(i - 1);
        open_start = i;
        open_label = t.label;
        break;
      case 'S':
        close_open(i - 1);
        emit(i, i, t.label);
        break;
      case 'I':
        if (open_start < 0 || open_label != t.label) {
          close_open(i - 1);
          open_start = i;  // repair: treat as B
          open_label = t.label;
        }
        break;
      case 'E':
        if (open_start >= 0 && open_label == t.label) {
          close_open(i);
        } else {
          close_open(i - 1);
          emit(i, i, t.label);  // repair: lone E is a singleton
        }
        break;
    }
  }
  close_open(static_cast<int>(tags.size()) - 1);
  return spans;
}

// ---- affixes / vocabulary ----------------------------------------------------

std::pair<std::string, std::string> extract_affixes(const Token& token,
                                                    int n_affix) {
  if (n_affix < 1) throw DomainError("extract_affixes: n_affix must be >= 1");
  if (static_cast<int>(token.surface.size()) < n_affix) return {"", ""};
  const std::string low = lowercase(token.surface);
  return {low.substr(0, n_affix), low.substr(low.size() - n_affix)};
}

namespace {

// frequency desc, then lexicographic.
std::vector<std::string> ordered_by_count(
    const std::map<std::string, long>& counts, long min_count) {
  std::vector<std::pair<std::string, long>> items;
  for (const auto& [s, c] : counts) {
    if (c >= min_count) items.emplace_back(s, c);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [s, c] : items) out.push_back(std::move(s));
  return out;
}

}  // namespace

Vocabulary build_vocab(const std::vector<Document>& docs, int affix_threshold,
                       int n_affix, TagScheme scheme) {
  if (docs.empty()) throw DomainError("build_vocab: empty corpus");
  std::map<std::string, long> token_counts, char_counts, prefix_counts,
      suffix_counts, tag_counts;
  for (const Document& doc : docs) {
    for (const Token& tok : doc.tokens) {
      ++token_counts[tok.lower];
      for (char c : tok.surface) ++char_counts[std::string(1, c)];
      auto [pre, suf] = extract_affixes(tok, n_affix);
      if (!pre.empty()) ++prefix_counts[pre];
      if (!suf.empty()) ++suffix_counts[suf];
    }
    for (const std::string& tag : spans_to_tags(doc, scheme)) {
      ++tag_counts[tag];
    }
  }
  tag_counts["O"];  // decodable even if every training token is inside a span

  Vocabulary v;
  v.tokens = StringIndex::with_reserved();
  v.chars = StringIndex::with_reserved();
  v.prefixes = StringIndex::with_reserved();
  v.suffixes = StringIndex::with_reserved();
  v.tags = StringIndex::with_reserved();
  for (const auto& s : ordered_by_count(token_counts, 1)) v.tokens.add(s);
  for (const auto& s : ordered_by_count(char_counts, 1)) v.chars.add(s);
  for (const auto& s : ordered_by_count(prefix_counts, affix_threshold)) {
    v.prefixes.add(s);
  }
  for (const auto& s : ordered_by_count(suffix_counts, affix_threshold)) {
    v.suffixes.add(s);
  }
  for (const auto& s : ordered_by_count(tag_counts, 0)) v.tags.add(s);
  v.rebuild_char_lut();
  return v;
}

// ---- pretrained embeddings -----------------------------------------------------

PretrainedResult load_pretrained(const std::string& path,
                                 const Vocabulary& vocab, int dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file: " + path);

  std::unordered_map<std::string, std::vector<double>> file_rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    double x;
    while (ss >> x) vals.push_back(x);
    if (static_cast<int>(vals.size()) != dim) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " values, got " +
                        std::to_string(vals.size()));
    }
    if (vocab.tokens.to_id.count(word)) file_rows[word] = std::move(vals);
  }

  const int rows = vocab.tokens.size();
  PretrainedResult result;
  result.table.dim = dim;
  result.table.trainable = true;
  result.table.weights = num::Tensor::zeros({rows, dim}, true);
  result.table.frozen_rows.assign(static_cast<size_t>(rows), 0);
  result.table.frozen_rows[Vocabulary::kPad] = 1;

  const double bound = std::sqrt(3.0 / dim);
  long found = 0;
  for (int r = 1; r < rows; ++r) {  // PAD row stays zero
    double* dst = &result.table.weights->values[static_cast<size_t>(r) * dim];
    auto it = r >= 2 ? file_rows.find(vocab.tokens.to_str[r]) : file_rows.end();
    if (it != file_rows.end()) {
      std::copy(it->second.begin(), it->second.end(), dst);
      ++found;
    } else {
      for (int c = 0; c < dim; ++c) dst[c] = rng.uniform(-bound, bound);
    }
  }
  result.coverage =
      rows > 2 ? static_cast<double>(found) / (rows - 2) : 0.0;
  return result;
}

// ---- split ---------------------------------------------------------------------

std::pair<std::vector<Document>, std::vector<Document>> split_train_valid(
    std::vector<Document> docs, uint64_t seed) {
  if (docs.size() < 3) {
    throw DomainError("split_train_valid: need at least 3 documents, got " +
                      std::to_string(docs.size()));
  }
  Rng rng(Rng::derive(seed, 0x5317));
  rng.shuffle(docs);
  const auto n_train = static_cast<size_t>(
      std::llround(2.0 / 3.0 * static_cast<double>(docs.size())));
  std::vector<Document> train(docs.begin(), docs.begin() + n_train);
  std::vector<Document> valid(docs.begin() + n_train, docs.end());
  return {std::move(train), std::move(valid)};
}

// ---- column format --------------------------------------------------------------

void write_column(std::ostream& out, const std::vector<Document>& docs,
                  const std::vector<std::vector<std::string>>& tags) {
  if (docs.size() != tags.size()) {
    throw DomainError("write_column: docs/tags length mismatch");
  }
  for (size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].tokens.size() != tags[d].size()) {
      throw DomainError("write_column: token/tag length mismatch in doc " +
                        docs[d].id);
    }
    for (size_t t = 0; t < docs[d].tokens.size(); ++t) {
      const Token& tok = docs[d].tokens[t];
      out << tok.surface << "\t" << tok.start << "\t" << tok.end << "\t"
          << tags[d][t] << "\n";
    }
    out << "\n";
  }
}

std::pair<std::vector<Document>, std::vector<std::vector<std::string>>>
read_column(std::istream& in) {
  std::vector<Document> docs;
  std::vector<std::vector<std::string>> all_tags;
  std::vector<Token> tokens;
  std::vector<std::string> tags;
  std::string line;
  int lineno = 0;

  auto flush = [&] {
    if (tokens.empty()) return;
    Document doc;
    doc.id = "doc_" + std::to_string(docs.size());
    int total = tokens.back().end;
    doc.text.assign(static_cast<size_t>(total), ' ');
    for (const Token& t : tokens) {
      std::copy(t.surface.begin(), t.surface.end(), doc.text.begin() + t.start);
    }
    doc.tokens = std::move(tokens);
    docs.push_back(std::move(doc));
    all_tags.push_back(std::move(tags));
    tokens = {};
    tags = {};
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 4) {
      throw FormatError("column line " + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
    }
    Token t;
    t.surface = fields[0];
    try {
      t.start = std::stoi(fields[1]);
      t.end = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw FormatError("column line " + std::to_string(lineno) +
                        ": bad offsets");
    }
    if (t.end - t.start != static_cast<int>(t.surface.size()) ||
        (!tokens.empty() && t.start < tokens.back().end)) {
      throw FormatError("column line " + std::to_string(lineno) +
                        ": inconsistent offsets");
    }
    t.lower = lowercase(t.surface);
    tokens.push_back(std::move(t));
    tags.push_back(fields[3]);
  }
  flush();
  return {std::move(docs), std::move(all_tags)};
}

}  // namespace cedi::corpus
