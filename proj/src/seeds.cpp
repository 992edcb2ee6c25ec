#include "bimatch/seeds.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

namespace bimatch {

namespace {

std::string fold(std::string_view w, bool casefold) {
  std::string out(w);
  if (casefold)
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
  return out;
}

// Folded word -> first (most frequent) index.
class WordIndex {
 public:
  WordIndex(const Lexicon& lex, bool casefold) : lex_(lex), casefold_(casefold) {
    if (!casefold) return;
    for (Index i = 0; i < static_cast<Index>(lex.size()); ++i) folded_.emplace(fold(lex.word(i), true), i);
  }
  std::optional<Index> find(std::string_view w) const {
    if (!casefold_) return lex_.find(w);
    auto it = folded_.find(fold(w, true));
    if (it == folded_.end()) return std::nullopt;
    return it->second;
  }

 private:
  const Lexicon& lex_;
  bool casefold_;
  std::unordered_map<std::string, Index> folded_;
};

class PairCollector {
 public:
  void add(Index s, Index t) {
    if (seen_.insert({s, t}).second) pairs_.push_back({s, t});
  }
  std::vector<SeedPair> take() { return std::move(pairs_); }

 private:
  std::set<SeedPair> seen_;
  std::vector<SeedPair> pairs_;
};

bool all_digits(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; });
}

template <class Keep>
SeedDictionary identical_where(const Lexicon& source, const Lexicon& target, const SeedOptions& options,
                               SeedProvenance provenance, Keep keep) {
  WordIndex trg(target, options.casefold);
  PairCollector pairs;
  for (Index s = 0; s < static_cast<Index>(source.size()); ++s) {
    const auto& w = source.word(s);
    if (!keep(w)) continue;
    if (auto t = trg.find(w)) pairs.add(s, *t);
  }
  SeedDictionary d;
  d.pairs = pairs.take();
  d.provenance = provenance;
  d.entries_read = d.pairs.size();
  if (d.pairs.empty())
    throw Error(std::string("empty ") + std::string(to_string(provenance)) + " seed dictionary: no shared words");
  return d;
}

}  // namespace

std::string_view to_string(SeedProvenance p) {
  switch (p) {
    case SeedProvenance::tsv: return "tsv";
    case SeedProvenance::numerals: return "numerals";
    case SeedProvenance::identical: return "identical";
  }
  return "unknown";
}

double SeedDictionary::coverage() const {
  if (entries_read == 0) return 0.0;
  return static_cast<double>(entries_read - out_of_vocabulary) / static_cast<double>(entries_read);
}

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path, std::size_t min_fields,
                                               std::size_t max_fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < min_fields || fields.size() > max_fields)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(min_fields) +
                       (min_fields == max_fields ? "" : "-" + std::to_string(max_fields)) +
                       " tab-separated fields, got " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

SeedDictionary seed_from_tsv(const std::filesystem::path& path, const Lexicon& source, const Lexicon& target,
                             const SeedOptions& options) {
  const auto rows = read_tsv(path, 2, 2);
  WordIndex src(source, options.casefold);
  WordIndex trg(target, options.casefold);
  PairCollector pairs;
  SeedDictionary d;
  d.provenance = SeedProvenance::tsv;
  std::set<std::pair<std::string, std::string>> distinct;
  for (const auto& row : rows) {
    if (!distinct.insert({row[0], row[1]}).second) continue;
    ++d.entries_read;
    auto s = src.find(row[0]);
    auto t = trg.find(row[1]);
    if (!s || !t) {
      ++d.out_of_vocabulary;
      continue;
    }
    pairs.add(*s, *t);
  }
  d.pairs = pairs.take();
  if (d.pairs.empty()) throw Error("seed dictionary " + path.string() + " has no in-vocabulary pair");
  return d;
}

SeedDictionary seed_numerals(const Lexicon& source, const Lexicon& target, const SeedOptions& options) {
  return identical_where(source, target, options, SeedProvenance::numerals, all_digits);
}

SeedDictionary seed_identical(const Lexicon& source, const Lexicon& target, const SeedOptions& options) {
  return identical_where(source, target, options, SeedProvenance::identical, [](const std::string&) { return true; });
}

SeedDictionary restrict_seed(const SeedDictionary& seed, Index n_src, Index n_trg) {
  SeedDictionary out = seed;
  out.pairs.clear();
  for (const auto& p : seed.pairs)
    if (p.source < n_src && p.target < n_trg) out.pairs.push_back(p);
  return out;
}

}  // namespace bimatch
