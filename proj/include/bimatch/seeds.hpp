#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bimatch/embeddings.hpp"

namespace bimatch {

enum class SeedProvenance { tsv, numerals, identical };

std::string_view to_string(SeedProvenance p);

struct SeedPair {
  Index source;
  Index target;

  friend bool operator==(const SeedPair&, const SeedPair&) = default;
  friend auto operator<=>(const SeedPair&, const SeedPair&) = default;
};

struct SeedDictionary {
  std::vector<SeedPair> pairs;  // unique, in first-seen order
  SeedProvenance provenance = SeedProvenance::tsv;
  // TSV only: non-empty entries read and entries with a word outside
  // either lexicon.
  std::size_t entries_read = 0;
  std::size_t out_of_vocabulary = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  double coverage() const;
};

struct SeedOptions {
  // ASCII case folding when matching words; the first (most frequent)
  // lexicon entry wins among case variants.
  bool casefold = false;
};

// "src<TAB>trg" per line. Out-of-vocabulary entries are skipped and
// counted; throws if the file is unreadable, malformed or yields no pair.
SeedDictionary seed_from_tsv(const std::filesystem::path& path, const Lexicon& source,
                             const Lexicon& target, const SeedOptions& options = {});

// (w, w) for every word fully matching [0-9]+ in both lexicons.
SeedDictionary seed_numerals(const Lexicon& source, const Lexicon& target,
                             const SeedOptions& options = {});

// (w, w) for every word present in both lexicons.
SeedDictionary seed_identical(const Lexicon& source, const Lexicon& target,
                              const SeedOptions& options = {});

// Keeps the pairs whose indices fall inside the given prefix sizes.
SeedDictionary restrict_seed(const SeedDictionary& seed, Index n_src, Index n_trg);

// Reads "a<TAB>b[<TAB>...]" lines; shared by seed, evaluation and word
// similarity files. Blank lines are skipped, "\r\n" is accepted.
std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path,
                                               std::size_t min_fields, std::size_t max_fields);

}  // namespace bimatch
