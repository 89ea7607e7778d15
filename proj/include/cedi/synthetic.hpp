#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cedi/corpus.hpp"

namespace cedi::corpus {

// Labels the generator annotates.
const std::vector<std::string>& synthetic_labels();

// Templated clinical-style documents with gold spans. Deliberately includes
// entities adjacent to line breaks, values alone on their own line, tabulated
// numerics like "118/76", and id/code strings whose label depends only on the
// surrounding tokens. Deterministic per seed; document i is stable under
// changes to n_docs.
std::vector<Document> generate_synthetic_corpus(uint64_t seed, int n_docs);

}  // namespace cedi::corpus
