#include "bimatch/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "bimatch/seeds.hpp"
#include "blocked.hpp"

namespace bimatch {

namespace {

Eigen::MatrixXd unit_columns(Eigen::MatrixXd m) {
  for (Index c = 0; c < m.cols(); ++c) {
    const double n = m.col(c).norm();
    if (n > 0.0) m.col(c) /= n;
  }
  return m;
}

void check_model(const ModelParams& params, const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
  params.validate_shape();
  if (source.rows() != params.dim() || target.rows() != params.dim())
    throw Error("embedding dimension does not match model dimension");
}

double cosine(const Eigen::VectorXd& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t r = i; r <= j; ++r) ranks[order[r]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::vector<std::vector<Neighbor>> nearest_targets(const ModelParams& params, const Eigen::MatrixXd& source,
                                                   const Eigen::MatrixXd& target, std::span<const Index> queries,
                                                   Index n, int threads) {
  check_model(params, source, target);
  if (n < 1) throw Error("number of neighbors must be at least 1");
  n = std::min(n, target.cols());
  Eigen::MatrixXd mapped(source.rows(), static_cast<Index>(queries.size()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (queries[q] < 0 || queries[q] >= source.cols())
      throw Error("query index " + std::to_string(queries[q]) + " out of range");
    mapped.col(static_cast<Index>(q)) = params.omega * source.col(queries[q]);
  }
  mapped = unit_columns(std::move(mapped));
  const Eigen::MatrixXd targets = unit_columns(target);

  std::vector<std::vector<Neighbor>> out(queries.size());
  if (n == 0) return out;
  detail::TopKTable table(static_cast<Index>(queries.size()), n);
  detail::for_each_block(mapped, targets, threads,
                         [&](Index q0, Index q1, Index c0, Index c1, const Eigen::MatrixXd& g) {
                           for (Index q = q0; q < q1; ++q) {
                             auto slot = table.slot(q);
                             const auto col = g.col(q - q0);
                             for (Index i = c0; i < c1; ++i) slot.offer(col[i - c0], i);
                           }
                         });
  for (std::size_t q = 0; q < queries.size(); ++q)
    for (const auto& s : table.row(static_cast<Index>(q))) out[q].push_back({s.index, s.score});
  return out;
}

Index translate_top1(const ModelParams& params, const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                     Index source_index) {
  if (target.cols() == 0) throw Error("no target words to translate into");
  const Index q[] = {source_index};
  return nearest_targets(params, source, target, q, 1).front().front().target;
}

EvalDictionary load_eval_dictionary(const std::filesystem::path& path) {
  EvalDictionary d;
  for (auto& row : read_tsv(path, 2, 2)) d.entries[row[0]].insert(row[1]);
  if (d.entries.empty()) throw Error("evaluation dictionary " + path.string() + " is empty");
  return d;
}

PrecisionResult precision_at_1(const ModelParams& params, const EmbeddingSet& source, const EmbeddingSet& target,
                               const EvalDictionary& gold, int threads) {
  std::vector<Index> queries;
  std::vector<const std::set<std::string>*> answers;
  for (const auto& [word, refs] : gold.entries) {
    if (auto s = source.lexicon.find(word)) {
      queries.push_back(*s);
      answers.push_back(&refs);
    }
  }
  PrecisionResult r;
  r.total = gold.size();
  r.evaluated = queries.size();
  if (queries.empty()) throw Error("no evaluation entry has its source word in vocabulary");
  const auto top = nearest_targets(params, source.vectors, target.vectors, queries, 1, threads);
  for (std::size_t q = 0; q < queries.size(); ++q)
    if (!top[q].empty() && answers[q]->count(target.lexicon.word(top[q].front().target))) ++r.correct;
  r.precision = static_cast<double>(r.correct) / static_cast<double>(r.evaluated);
  r.coverage = static_cast<double>(r.evaluated) / static_cast<double>(r.total);
  return r;
}

std::vector<SimilarityTriple> load_word_similarity(const std::filesystem::path& path) {
  std::vector<SimilarityTriple> out;
  std::size_t row_no = 0;
  for (auto& row : read_tsv(path, 3, 3)) {
    ++row_no;
    double score = 0.0;
    const auto& text = row[2];
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), score);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(score))
      throw ParseError(path.string() + ": entry " + std::to_string(row_no) + ": cannot parse score '" + text + "'");
    out.push_back({row[0], row[1], score});
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: inputs differ in length");
  if (x.size() < 2) throw Error("spearman: need at least two values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("spearman: constant input has no rank correlation");
  return sxy / std::sqrt(sxx * syy);
}

SimilarityResult word_similarity(const ModelParams& params, const EmbeddingSet& source, const EmbeddingSet& target,
                                 std::span<const SimilarityTriple> triples) {
  check_model(params, source.vectors, target.vectors);
  std::vector<double> gold;
  std::vector<double> model;
  for (const auto& t : triples) {
    auto s = source.lexicon.find(t.source_word);
    auto g = target.lexicon.find(t.target_word);
    if (!s || !g) continue;
    gold.push_back(t.score);
    model.push_back(cosine(params.omega * source.vectors.col(*s), target.vectors.col(*g)));
  }
  if (gold.size() < 2) throw Error("word similarity needs at least two in-vocabulary pairs");
  SimilarityResult r;
  r.used = gold.size();
  r.coverage = static_cast<double>(gold.size()) / static_cast<double>(triples.size());
  r.spearman = spearman(gold, model);
  return r;
}

std::size_t HubnessReport::max_count() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

std::size_t HubnessReport::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

HubnessReport hubness(const ModelParams& params, const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                      std::span<const Index> queries, Index k, int threads) {
  if (queries.empty()) throw Error("hubness needs at least one query");
  if (k < 1 || k > target.cols())
    throw Error("hubness k must be in [1, " + std::to_string(target.cols()) + "], got " + std::to_string(k));
  const auto neighbors = nearest_targets(params, source, target, queries, k, threads);
  HubnessReport r;
  r.k = k;
  r.query_count = queries.size();
  r.counts.assign(static_cast<std::size_t>(target.cols()), 0);
  for (const auto& list : neighbors)
    for (const auto& nb : list) ++r.counts[static_cast<std::size_t>(nb.target)];
  r.ranking.reserve(r.counts.size());
  for (std::size_t i = 0; i < r.counts.size(); ++i) r.ranking.push_back({static_cast<Index>(i), r.counts[i]});
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [](const HubnessEntry& a, const HubnessEntry& b) { return a.count > b.count; });
  return r;
}

}  // namespace bimatch
