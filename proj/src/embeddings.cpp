#include "bimatch/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace bimatch {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Splits on runs of blanks; views into line.
void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_blank(line[i])) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_blank(line[j])) ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

double column_norm_or_throw(const EmbeddingMatrix& m, Index col, const Lexicon* lexicon) {
  const double norm = m.col(col).norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    std::string who = lexicon ? "word '" + lexicon->word(col) + "'" : "column " + std::to_string(col);
    throw Error("cannot normalize zero-norm vector of " + who);
  }
  return norm;
}

void unit_normalize_in_place(EmbeddingMatrix& m, const Lexicon* lexicon) {
  for (Index c = 0; c < m.cols(); ++c) m.col(c) /= column_norm_or_throw(m, c, lexicon);
}

EmbeddingMatrix apply_scheme(const EmbeddingMatrix& m, NormalizationScheme scheme,
                             const Lexicon* lexicon) {
  EmbeddingMatrix out = m;
  switch (scheme) {
    case NormalizationScheme::none:
      break;
    case NormalizationScheme::unit:
      unit_normalize_in_place(out, lexicon);
      break;
    case NormalizationScheme::unit_center_unit: {
      unit_normalize_in_place(out, lexicon);
      if (out.cols() > 0) {
        const Eigen::VectorXd mean = out.rowwise().mean();
        out.colwise() -= mean;
      }
      unit_normalize_in_place(out, lexicon);
      break;
    }
  }
  return out;
}

}  // namespace

Lexicon::Lexicon(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = index_.emplace(words_[i], static_cast<Index>(i));
    if (!inserted) throw Error("duplicate word '" + words_[i] + "' in lexicon");
  }
}

std::optional<Index> Lexicon::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Lexicon Lexicon::prefix(std::size_t n) const {
  n = std::min(n, words_.size());
  return Lexicon(std::vector<std::string>(words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(n)));
}

EmbeddingSet EmbeddingSet::prefix(std::size_t n) const {
  n = std::min(n, lexicon.size());
  return EmbeddingSet{lexicon.prefix(n), vectors.leftCols(static_cast<Index>(n))};
}

std::string_view to_string(NormalizationScheme scheme) {
  switch (scheme) {
    case NormalizationScheme::none: return "none";
    case NormalizationScheme::unit: return "unit";
    case NormalizationScheme::unit_center_unit: return "unit_center_unit";
  }
  return "unknown";
}

NormalizationScheme parse_normalization(std::string_view text) {
  if (text == "none") return NormalizationScheme::none;
  if (text == "unit") return NormalizationScheme::unit;
  if (text == "unit_center_unit") return NormalizationScheme::unit_center_unit;
  throw Error("unknown normalization scheme '" + std::string(text) + "'");
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> max_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embeddings file " + path.string());

  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(path, line_no, "missing header");
  split_fields(line, fields);
  long long n = 0;
  long long d = 0;
  if (fields.size() != 2 || !parse_number(fields[0], n) || !parse_number(fields[1], d) || n < 0 || d <= 0)
    fail(path, line_no, "malformed header, expected \"<count> <dim>\"");

  std::size_t rows = static_cast<std::size_t>(n);
  if (max_vocab) rows = std::min(rows, *max_vocab);

  std::vector<std::string> words;
  words.reserve(rows);
  std::unordered_map<std::string, std::size_t> first_line;
  first_line.reserve(rows);
  EmbeddingMatrix vectors(d, static_cast<Index>(rows));

  for (std::size_t r = 0; r < rows; ++r) {
    ++line_no;
    if (!std::getline(in, line)) fail(path, line_no, "expected " + std::to_string(n) + " rows, found " + std::to_string(r));
    split_fields(line, fields);
    if (fields.empty()) fail(path, line_no, "empty row");
    if (fields.size() != static_cast<std::size_t>(d) + 1)
      fail(path, line_no, "row has " + std::to_string(fields.size() - 1) + " values, expected " + std::to_string(d));
    std::string word(fields[0]);
    auto [it, inserted] = first_line.emplace(word, line_no);
    if (!inserted)
      fail(path, line_no, "duplicate word '" + word + "' (first seen on line " + std::to_string(it->second) + ")");
    for (long long c = 0; c < d; ++c) {
      double value = 0.0;
      if (!parse_number(fields[static_cast<std::size_t>(c) + 1], value))
        fail(path, line_no, "cannot parse value '" + std::string(fields[static_cast<std::size_t>(c) + 1]) + "'");
      if (!std::isfinite(value)) fail(path, line_no, "non-finite value for word '" + word + "'");
      vectors(static_cast<Index>(c), static_cast<Index>(r)) = value;
    }
    words.push_back(std::move(word));
  }
  return EmbeddingSet{Lexicon(std::move(words)), std::move(vectors)};
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  if (static_cast<Index>(set.lexicon.size()) != set.vectors.cols())
    throw Error("lexicon size does not match matrix column count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embeddings file " + path.string());
  out << set.vectors.cols() << ' ' << set.vectors.rows() << '\n';
  char buf[64];
  std::string row;
  for (Index c = 0; c < set.vectors.cols(); ++c) {
    row = set.lexicon.word(c);
    for (Index r = 0; r < set.vectors.rows(); ++r) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, set.vectors(r, c));
      row.push_back(' ');
      row.append(buf, ptr);
    }
    row.push_back('\n');
    out << row;
  }
  if (!out) throw Error("write failed for " + path.string());
}

EmbeddingMatrix normalize(const EmbeddingMatrix& m, NormalizationScheme scheme) {
  return apply_scheme(m, scheme, nullptr);
}

EmbeddingSet normalize(const EmbeddingSet& set, NormalizationScheme scheme, ZeroNormPolicy policy) {
  if (scheme == NormalizationScheme::none) return set;
  if (policy == ZeroNormPolicy::drop) {
    std::vector<Index> keep;
    for (Index c = 0; c < set.vectors.cols(); ++c)
      if (set.vectors.col(c).norm() > 0.0) keep.push_back(c);
    if (static_cast<Index>(keep.size()) != set.vectors.cols()) {
      std::vector<std::string> words;
      EmbeddingMatrix kept(set.vectors.rows(), static_cast<Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i) {
        words.push_back(set.lexicon.word(keep[i]));
        kept.col(static_cast<Index>(i)) = set.vectors.col(keep[i]);
      }
      EmbeddingSet filtered{Lexicon(std::move(words)), std::move(kept)};
      filtered.vectors = apply_scheme(filtered.vectors, scheme, &filtered.lexicon);
      return filtered;
    }
  }
  EmbeddingMatrix normalized = apply_scheme(set.vectors, scheme, &set.lexicon);
  return EmbeddingSet{set.lexicon, std::move(normalized)};
}

}  // namespace bimatch
