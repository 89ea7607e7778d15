#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cedi/corpus.hpp"
#include "cedi/synthetic.hpp"

using namespace cedi;
using namespace cedi::corpus;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  auto dir = fs::temp_directory_path() /
             ("cedi_corpus_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

void put_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

Document doc_with_spans(const std::string& text,
                        std::vector<EntitySpan> spans) {
  Document doc = make_document("t", text);
  doc.gold_spans = std::move(spans);
  return doc;
}

EntitySpan span(int first, int last, const std::string& label) {
  EntitySpan s;
  s.first_token = first;
  s.last_token = last;
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("tokenize splits words, digits, and punctuation with exact offsets") {
  auto tokens = tokenize("Dr. Smith");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0].surface == "Dr");
  CHECK(tokens[0].start == 0);
  CHECK(tokens[0].end == 2);
  CHECK(tokens[1].surface == ".");
  CHECK(tokens[1].start == 2);
  CHECK(tokens[1].end == 3);
  CHECK(tokens[2].surface == "Smith");
  CHECK(tokens[2].start == 4);
  CHECK(tokens[2].end == 9);

  auto nums = tokenize("123/456");
  REQUIRE(nums.size() == 3);
  CHECK(nums[0].surface == "123");
  CHECK(nums[1].surface == "/");
  CHECK(nums[2].surface == "456");

  CHECK(tokenize("").empty());
}

TEST_CASE("tokenize offsets reconstruct the surface; newlines are never tokens") {
  const std::string text = "Seen 03/14\nBP: 120/80 mmHg\n\tnote  x9 ";
  for (const Token& t : tokenize(text)) {
    CHECK(text.substr(t.start, t.end - t.start) == t.surface);
    CHECK(t.surface.find('\n') == std::string::npos);
    CHECK(t.end > t.start);
  }
}

TEST_CASE("load_standoff aligns, snaps outward, and checks integrity") {
  auto dir = temp_dir();
  put_file(dir / "a.txt", "John saw");
  put_file(dir / "a.ann", "T1\tPATIENT 0 4\tJohn");
  auto doc = load_standoff((dir / "a.txt").string(), (dir / "a.ann").string());
  REQUIRE(doc.gold_spans.size() == 1);
  CHECK(doc.gold_spans[0].first_token == 0);
  CHECK(doc.gold_spans[0].last_token == 0);
  CHECK(doc.gold_spans[0].label == "PATIENT");

  // offsets 0..3 split the token "John": snapped to 0..4 with a warning
  put_file(dir / "b.txt", "John saw");
  put_file(dir / "b.ann", "T1\tPATIENT 0 3\tJoh");
  std::vector<std::string> warnings;
  auto snapped = load_standoff((dir / "b.txt").string(),
                               (dir / "b.ann").string(), &warnings);
  REQUIRE(snapped.gold_spans.size() == 1);
  CHECK(snapped.gold_spans[0].char_start == 0);
  CHECK(snapped.gold_spans[0].char_end == 4);
  CHECK(warnings.size() == 1);

  put_file(dir / "c.txt", "John saw");
  put_file(dir / "c.ann", "T1\tPATIENT 0 4\tJane");
  CHECK_THROWS_AS(
      load_standoff((dir / "c.txt").string(), (dir / "c.ann").string()),
      IntegrityError);

  put_file(dir / "d.txt", "John saw");
  put_file(dir / "d.ann", "T1\tPATIENT 0 4\tJohn\nnot an annotation line");
  try {
    load_standoff((dir / "d.txt").string(), (dir / "d.ann").string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("standoff writer round-trips through the loader") {
  auto dir = temp_dir();
  const std::string text = "Seen by Dr. Connor on 03/14\n";
  Document doc = make_document("r", text);
  std::vector<EntitySpan> spans = {span(3, 3, "DOCTOR"), span(5, 7, "DATE")};
  for (auto& s : spans) {
    s.char_start = doc.tokens[s.first_token].start;
    s.char_end = doc.tokens[s.last_token].end;
  }
  put_file(dir / "r.txt", text);
  std::ostringstream ann;
  write_standoff_ann(ann, doc, spans);
  put_file(dir / "r.ann", ann.str());
  std::vector<std::string> warnings;
  auto loaded =
      load_standoff((dir / "r.txt").string(), (dir / "r.ann").string(),
                    &warnings);
  CHECK(warnings.empty());
  REQUIRE(loaded.gold_spans.size() == 2);
  CHECK(loaded.gold_spans[0].same_mention(spans[0]));
  CHECK(loaded.gold_spans[1].same_mention(spans[1]));
}

TEST_CASE("spans_to_tags under both schemes") {
  auto doc = doc_with_spans("John Smith visited", {span(0, 1, "PATIENT")});
  CHECK(spans_to_tags(doc, TagScheme::kBio) ==
        std::vector<std::string>{"B-PATIENT", "I-PATIENT", "O"});
  CHECK(spans_to_tags(doc, TagScheme::kBioes) ==
        std::vector<std::string>{"B-PATIENT", "E-PATIENT", "O"});

  auto empty = doc_with_spans("John Smith visited", {});
  CHECK(spans_to_tags(empty, TagScheme::kBioes) ==
        std::vector<std::string>{"O", "O", "O"});

  auto singleton = doc_with_spans("John Smith visited", {span(1, 1, "DATE")});
  CHECK(spans_to_tags(singleton, TagScheme::kBioes)[1] == "S-DATE");

  auto overlapping = doc_with_spans(
      "John Smith visited", {span(0, 1, "PATIENT"), span(1, 2, "DATE")});
  CHECK_THROWS_AS(spans_to_tags(overlapping, TagScheme::kBio), AnnotationError);
}

TEST_CASE("tags_to_spans inverts and repairs") {
  auto got = tags_to_spans({"B-DATE", "I-DATE", "O"}, TagScheme::kBio);
  REQUIRE(got.size() == 1);
  CHECK(got[0].same_mention(span(0, 1, "DATE")));

  auto repaired = tags_to_spans({"O", "I-DATE", "O"}, TagScheme::kBio);
  REQUIRE(repaired.size() == 1);
  CHECK(repaired[0].same_mention(span(1, 1, "DATE")));

  auto lone_e = tags_to_spans({"O", "E-DATE", "I-DATE"}, TagScheme::kBioes);
  REQUIRE(lone_e.size() == 2);
  CHECK(lone_e[0].same_mention(span(1, 1, "DATE")));
  CHECK(lone_e[1].same_mention(span(2, 2, "DATE")));
}

TEST_CASE("spans -> tags -> spans is the identity on random valid span sets") {
  Rng rng(404);
  const std::vector<std::string> labels = {"A", "B", "C"};
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_tokens = 1 + static_cast<int>(rng.below(14));
    std::string text;
    for (int i = 0; i < n_tokens; ++i) text += (i ? " tok" : "tok");
    std::vector<EntitySpan> spans;
    int cursor = 0;
    while (cursor < n_tokens) {
      if (rng.bernoulli(0.4)) {
        const int len = 1 + static_cast<int>(
                                rng.below(std::min(3, n_tokens - cursor)));
        spans.push_back(span(cursor, cursor + len - 1,
                             labels[rng.below(labels.size())]));
        cursor += len;
      }
      ++cursor;
    }
    auto doc = doc_with_spans(text, spans);
    for (auto scheme : {TagScheme::kBio, TagScheme::kBioes}) {
      auto round = tags_to_spans(spans_to_tags(doc, scheme), scheme);
      REQUIRE(round.size() == spans.size());
      for (size_t i = 0; i < spans.size(); ++i) {
        CHECK(round[i].same_mention(spans[i]));
      }
    }
  }
}

TEST_CASE("extract_affixes slices lowercased affixes with a short-token sentinel") {
  Token heparin{"heparin", "heparin", 0, 7};
  auto [pre, suf] = extract_affixes(heparin, 3);
  CHECK(pre == "hep");
  CHECK(suf == "rin");

  Token at{"at", "at", 0, 2};
  auto [p2, s2] = extract_affixes(at, 3);
  CHECK(p2.empty());
  CHECK(s2.empty());

  Token enox{"Enoxaparin", "enoxaparin", 0, 10};
  auto [p3, s3] = extract_affixes(enox, 3);
  CHECK(p3 == "eno");
  CHECK(s3 == "rin");
}

TEST_CASE("build_vocab applies the affix threshold exactly") {
  std::vector<Document> docs;
  std::string text;
  for (int i = 0; i < 19; ++i) text += "abcde ";
  docs.push_back(doc_with_spans(text, {}));
  auto vocab = build_vocab(docs, 20, 3, TagScheme::kBioes);
  CHECK(vocab.prefixes.id_of("abc") == Vocabulary::kUnk);

  auto vocab2 = build_vocab(docs, 19, 3, TagScheme::kBioes);
  CHECK(vocab2.prefixes.id_of("abc") != Vocabulary::kUnk);

  auto vocab3 = build_vocab(docs, 1, 3, TagScheme::kBioes);
  CHECK(vocab3.prefixes.id_of("abc") != Vocabulary::kUnk);
  CHECK(vocab3.suffixes.id_of("cde") != Vocabulary::kUnk);

  CHECK_THROWS_AS(build_vocab({}, 1, 3, TagScheme::kBioes), DomainError);
}

TEST_CASE("build_vocab is deterministic and reserves PAD=0 / UNK=1 everywhere") {
  auto docs = generate_synthetic_corpus(5, 12);
  auto a = build_vocab(docs, 2, 3, TagScheme::kBioes);
  auto b = build_vocab(docs, 2, 3, TagScheme::kBioes);
  CHECK(a.tokens.to_str == b.tokens.to_str);
  CHECK(a.chars.to_str == b.chars.to_str);
  CHECK(a.prefixes.to_str == b.prefixes.to_str);
  CHECK(a.suffixes.to_str == b.suffixes.to_str);
  CHECK(a.tags.to_str == b.tags.to_str);

  for (const StringIndex* idx :
       {&a.tokens, &a.chars, &a.prefixes, &a.suffixes, &a.tags}) {
    CHECK(idx->to_str[0] == Vocabulary::kPadStr);
    CHECK(idx->to_str[1] == Vocabulary::kUnkStr);
    CHECK(idx->id_of(Vocabulary::kPadStr) == 0);
    // bijective over the non-reserved range
    std::set<std::string> seen(idx->to_str.begin(), idx->to_str.end());
    CHECK(static_cast<int>(seen.size()) == idx->size());
  }
  CHECK(a.tags.id_of("O") != Vocabulary::kUnk);
}

TEST_CASE("load_pretrained reads rows, draws OoV within bounds, reports coverage") {
  auto dir = temp_dir();
  put_file(dir / "emb.txt", "the 0.1 0.2\nof 0.3 0.4\n");

  std::vector<Document> docs = {doc_with_spans("the zzyzx", {})};
  auto vocab = build_vocab(docs, 1, 3, TagScheme::kBioes);

  Rng rng(9);
  auto result = load_pretrained((dir / "emb.txt").string(), vocab, 2, rng);
  const int the_id = vocab.tokens.id_of("the");
  CHECK(result.table.weights->values[the_id * 2] == doctest::Approx(0.1));
  CHECK(result.table.weights->values[the_id * 2 + 1] == doctest::Approx(0.2));
  CHECK(result.coverage == doctest::Approx(0.5));

  const int oov_id = vocab.tokens.id_of("zzyzx");
  const double bound = std::sqrt(3.0 / 2.0);
  for (int c = 0; c < 2; ++c) {
    const double v = result.table.weights->values[oov_id * 2 + c];
    CHECK(std::fabs(v) <= bound);
    CHECK(v != 0.0);
  }
  // PAD row all-zero
  CHECK(result.table.weights->values[0] == 0.0);
  CHECK(result.table.weights->values[1] == 0.0);

  Rng rng2(9);
  auto again = load_pretrained((dir / "emb.txt").string(), vocab, 2, rng2);
  CHECK(again.table.weights->values == result.table.weights->values);

  put_file(dir / "bad.txt", "the 0.1 0.2\nof 0.3\n");
  Rng rng3(9);
  try {
    load_pretrained((dir / "bad.txt").string(), vocab, 2, rng3);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("split_train_valid honors the 2:1 ratio and the seed") {
  std::vector<Document> docs;
  for (int i = 0; i < 9; ++i) {
    docs.push_back(make_document("d" + std::to_string(i), "text here"));
  }
  auto [train9, valid9] = split_train_valid(docs, 3);
  CHECK(train9.size() == 6);
  CHECK(valid9.size() == 3);

  docs.push_back(make_document("d9", "text here"));
  auto [train10, valid10] = split_train_valid(docs, 3);
  CHECK(train10.size() == 7);
  CHECK(valid10.size() == 3);

  auto [train_b, valid_b] = split_train_valid(docs, 3);
  for (size_t i = 0; i < train10.size(); ++i) {
    CHECK(train10[i].id == train_b[i].id);
  }

  std::set<std::string> ids;
  for (const auto& d : train10) ids.insert(d.id);
  for (const auto& d : valid10) ids.insert(d.id);
  CHECK(ids.size() == 10);

  CHECK_THROWS_AS(
      split_train_valid({make_document("a", "x"), make_document("b", "y")}, 1),
      DomainError);
}

TEST_CASE("synthetic corpus is deterministic and well-formed") {
  auto a = generate_synthetic_corpus(7, 2);
  auto b = generate_synthetic_corpus(7, 2);
  REQUIRE(a.size() == 2);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].gold_spans.size() == b[i].gold_spans.size());
  }

  for (const auto& doc : generate_synthetic_corpus(11, 25)) {
    int prev_end = -1;
    for (const auto& s : doc.gold_spans) {
      REQUIRE(s.first_token >= 0);
      REQUIRE(s.last_token < static_cast<int>(doc.tokens.size()));
      CHECK(s.first_token > prev_end);
      prev_end = s.last_token;
      // aligned to token boundaries
      CHECK(doc.tokens[s.first_token].start == s.char_start);
      CHECK(doc.tokens[s.last_token].end == s.char_end);
    }
  }
}

TEST_CASE("synthetic label histogram covers every label over 500 documents") {
  std::map<std::string, long> histogram;
  for (const auto& doc : generate_synthetic_corpus(3, 500)) {
    for (const auto& s : doc.gold_spans) ++histogram[s.label];
  }
  for (const auto& label : synthetic_labels()) {
    INFO(label);
    CHECK(histogram[label] >= 50);
  }
}

TEST_CASE("column format round-trips bit-exactly") {
  auto docs = generate_synthetic_corpus(21, 3);
  std::vector<std::vector<std::string>> tags;
  for (const auto& d : docs) tags.push_back(spans_to_tags(d, TagScheme::kBioes));

  std::ostringstream first;
  write_column(first, docs, tags);

  std::istringstream in(first.str());
  auto [read_docs, read_tags] = read_column(in);
  REQUIRE(read_docs.size() == docs.size());
  CHECK(read_tags == tags);
  for (size_t d = 0; d < docs.size(); ++d) {
    REQUIRE(read_docs[d].tokens.size() == docs[d].tokens.size());
    for (size_t t = 0; t < docs[d].tokens.size(); ++t) {
      CHECK(read_docs[d].tokens[t].surface == docs[d].tokens[t].surface);
      CHECK(read_docs[d].tokens[t].start == docs[d].tokens[t].start);
      // reconstructed text slices match the surfaces
      const Token& tok = read_docs[d].tokens[t];
      CHECK(read_docs[d].text.substr(tok.start, tok.end - tok.start) ==
            tok.surface);
    }
  }

  std::ostringstream second;
  write_column(second, read_docs, read_tags);
  CHECK(second.str() == first.str());
}
