#include "cedi/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace cedi::corpus {

namespace {

const std::array<const char*, 24> kFirstNames = {
    "John",   "Mary",    "Robert", "Linda",  "Michael", "Susan",
    "David",  "Karen",   "James",  "Nancy",  "Daniel",  "Laura",
    "Thomas", "Sandra",  "Brian",  "Helen",  "Kevin",   "Diane",
    "Paul",   "Gloria",  "Mark",   "Teresa", "Steven",  "Alice"};

const std::array<const char*, 24> kLastNames = {
    "Smith",  "Johnson",  "Miller",  "Davis",   "Garcia",   "Wilson",
    "Connor", "Anderson", "Taylor",  "Moore",   "Jackson",  "Martin",
    "Reyes",  "Brown",    "Nguyen",  "Clark",   "Lewis",    "Walker",
    "Hall",   "Young",    "Allen",   "King",    "Wright",   "Lopez"};

const std::array<const char*, 8> kHospitalFirst = {
    "Mercy",  "Riverside", "Lakeview",   "Oakdale",
    "Summit", "Harborview", "Pinecrest", "Westbrook"};

const std::array<const char*, 4> kHospitalRest = {
    "General Hospital", "Medical Center", "Clinic", "Community Hospital"};

const std::array<const char*, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

const std::array<const char*, 10> kDrugs = {
    "heparin",  "enoxaparin", "lisinopril", "metformin", "insulin",
    "warfarin", "aspirin",    "tinzaparin", "albuterol", "prednisone"};

const std::array<const char*, 8> kFiller = {
    "No acute distress noted today .",
    "The patient tolerated the procedure well .",
    "Breath sounds clear on both sides .",
    "Reports mild fatigue but denies chest pain .",
    "Diet advanced as tolerated without nausea .",
    "Wound edges clean and dry on inspection .",
    "Gait steady , no assistance required .",
    "Sleep improved since the previous visit ."};

std::string two_digits(uint64_t v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

struct RawSpan {
  int start = 0;
  int end = 0;
  std::string label;
};

// Accumulates one document as space-separated words; entities record their
// character range as they are written.
struct Writer {
  std::string text;
  std::vector<RawSpan> spans;
  bool line_start = true;

  void word(const std::string& w) {
    if (!line_start) text += ' ';
    text += w;
    line_start = false;
  }

  void words(const std::string& phrase) {
    std::string current;
    for (char c : phrase) {
      if (c == ' ') {
        if (!current.empty()) word(current);
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) word(current);
  }

  void entity(const std::string& phrase, const std::string& label) {
    const int start = static_cast<int>(text.size()) + (line_start ? 0 : 1);
    words(phrase);
    spans.push_back(RawSpan{start, static_cast<int>(text.size()), label});
  }

  void end_line() {
    text += '\n';
    line_start = true;
  }
};

struct Entities {
  Rng& rng;

  std::string first_name() { return kFirstNames[rng.below(kFirstNames.size())]; }
  std::string last_name() { return kLastNames[rng.below(kLastNames.size())]; }

  std::string full_name() { return first_name() + " " + last_name(); }

  std::string hospital() {
    return std::string(kHospitalFirst[rng.below(kHospitalFirst.size())]) + " " +
           kHospitalRest[rng.below(kHospitalRest.size())];
  }

  std::string date() {
    const uint64_t month = 1 + rng.below(12);
    const uint64_t day = 1 + rng.below(28);
    const uint64_t year = 2010 + rng.below(10);
    switch (rng.below(4)) {
      case 0:
        return std::to_string(year) + "-" + two_digits(month) + "-" +
               two_digits(day);
      case 1:
        return two_digits(month) + "/" + two_digits(day) + "/" +
               std::to_string(year);
      case 2:
        return std::string(kMonthNames[month - 1]) + " " + std::to_string(day);
      default:
        return two_digits(month) + "/" + two_digits(day);
    }
  }

  // Six digits; ids and plain lab codes share this distribution, so only
  // context separates them.
  std::string six_digit() { return std::to_string(100000 + rng.below(900000)); }

  std::string username() {
    std::string first = first_name(), last = last_name();
    std::string u;
    u += static_cast<char>(std::tolower(static_cast<unsigned char>(first[0])));
    for (char c : last) {
      u += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    u += std::to_string(10 + rng.below(90));
    return u;
  }

  std::string phone() {
    return std::to_string(200 + rng.below(790)) + "-" +
           std::to_string(200 + rng.below(790)) + "-" +
           std::to_string(1000 + rng.below(9000));
  }

  std::string bp() {
    return std::to_string(90 + rng.below(96)) + "/" +
           std::to_string(55 + rng.below(56));
  }

  std::string drug() { return kDrugs[rng.below(kDrugs.size())]; }
};

}  // namespace

const std::vector<std::string>& synthetic_labels() {
  static const std::vector<std::string> kLabels = {
      "PATIENT", "DOCTOR", "DATE", "IDNUM", "USERNAME", "HOSPITAL", "PHONE"};
  return kLabels;
}

std::vector<Document> generate_synthetic_corpus(uint64_t seed, int n_docs) {
  if (n_docs < 1) {
    throw DomainError("generate_synthetic_corpus: n_docs must be >= 1");
  }
  std::vector<Document> docs;
  docs.reserve(static_cast<size_t>(n_docs));

  for (int i = 0; i < n_docs; ++i) {
    Rng rng(Rng::derive(seed, 0xD0C5, static_cast<uint64_t>(i)));
    Entities e{rng};
    Writer w;

    // Header block.
    w.words("Record ID :");
    w.entity(e.six_digit(), "IDNUM");
    w.end_line();
    w.words("Date :");
    w.entity(e.date(), "DATE");
    w.end_line();
    w.words("Patient :");
    w.entity(e.full_name(), "PATIENT");
    if (rng.bernoulli(0.5)) {
      w.words("MRN :");
      w.entity(e.six_digit(), "IDNUM");
    }
    w.end_line();
    w.words("Attending : Dr.");
    w.entity(e.full_name(), "DOCTOR");
    w.end_line();
    if (rng.bernoulli(0.8)) {
      w.words("Facility :");
      w.entity(e.hospital(), "HOSPITAL");
      w.end_line();
    }
    if (rng.bernoulli(0.7)) {
      w.words("Contact :");
      w.entity(e.phone(), "PHONE");
      w.end_line();
    }
    if (rng.bernoulli(0.8)) {
      // The value sits alone on the following line; only the tokens across
      // the break identify it.
      w.words("Entered by :");
      w.end_line();
      w.entity(e.username(), "USERNAME");
      w.end_line();
    }

    const uint64_t body_lines = 3 + rng.below(6);
    for (uint64_t line = 0; line < body_lines; ++line) {
      switch (rng.below(12)) {
        case 0:
          w.words("Mr.");
          w.entity(e.last_name(), "PATIENT");
          w.words("was admitted to");
          w.entity(e.hospital(), "HOSPITAL");
          w.words("on");
          w.entity(e.date(), "DATE");
          w.words(".");
          break;
        case 1:
          w.words("Dr.");
          w.entity(e.last_name(), "DOCTOR");
          w.words("reviewed the labs with the patient .");
          break;
        case 2:
          w.words("BP");
          w.words(e.bp());
          w.words("HR");
          w.words(std::to_string(55 + rng.below(56)));
          w.words("Temp 98.6");
          break;
        case 3:
          w.words(rng.bernoulli(0.5) ? "Result code :" : "Lab ref :");
          w.words(e.six_digit());
          break;
        case 4:
          w.words("Glucose");
          w.words(std::to_string(70 + rng.below(120)));
          w.words("mg / dL sodium");
          w.words(std::to_string(130 + rng.below(18)));
          break;
        case 5:
          w.words("Follow up on");
          w.entity(e.date(), "DATE");
          w.words("with Dr.");
          w.entity(e.last_name(), "DOCTOR");
          w.words(".");
          break;
        case 6:
          w.words(rng.bernoulli(0.5) ? "device id :" : "protocol :");
          w.words(e.username());
          break;
        case 7:
          w.words("Plan : continue");
          w.words(e.drug());
          w.words("and");
          w.words(e.drug());
          w.words(", monitor closely .");
          break;
        case 8:
          w.words("Seen at");
          w.entity(e.hospital(), "HOSPITAL");
          w.words("for evaluation .");
          break;
        case 9:
          w.words("call");
          w.entity(e.phone(), "PHONE");
          w.words("with questions .");
          break;
        case 10:
          // Single-token line holding the id.
          w.words("Verification :");
          w.end_line();
          w.entity(e.six_digit(), "IDNUM");
          break;
        default:
          w.words(kFiller[rng.below(kFiller.size())]);
          break;
      }
      w.end_line();
    }
    if (rng.bernoulli(0.5)) {
      w.words("signed");
      w.entity(e.username(), "USERNAME");
      w.end_line();
    }

    char id[32];
    std::snprintf(id, sizeof id, "synth_%05d", i);
    Document doc = make_document(id, std::move(w.text));
    for (const RawSpan& raw : w.spans) {
      EntitySpan span;
      span.label = raw.label;
      span.char_start = raw.start;
      span.char_end = raw.end;
      span.first_token = -1;
      for (int t = 0; t < static_cast<int>(doc.tokens.size()); ++t) {
        const Token& tok = doc.tokens[t];
        if (tok.start < raw.end && tok.end > raw.start) {
          if (span.first_token < 0) span.first_token = t;
          span.last_token = t;
        }
      }
      doc.gold_spans.push_back(std::move(span));
    }
    std::sort(doc.gold_spans.begin(), doc.gold_spans.end(),
              [](const EntitySpan& a, const EntitySpan& b) {
                return a.first_token < b.first_token;
              });
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace cedi::corpus
