#include "bimatch/synthetic.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace bimatch {

namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

}  // namespace

Eigen::MatrixXd random_orthogonal(Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(dim, dim, rng));
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < dim; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

Eigen::MatrixXd random_unit_columns(Index dim, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd m = gaussian(dim, n, rng);
  m.colwise().normalize();
  return m;
}

PlantedFixture make_planted_rotation(const PlantedSpec& spec) {
  if (spec.n < 1 || spec.dim < 1) throw Error("planted fixture needs n >= 1 and dim >= 1");
  if (spec.numerals < 0 || spec.numerals > spec.n) throw Error("numeral count out of range");
  std::mt19937_64 rng(spec.seed);
  const std::uint64_t rotation_seed = rng();
  const std::uint64_t source_seed = rng();

  PlantedFixture f;
  f.rotation = random_orthogonal(spec.dim, rotation_seed);
  const Eigen::MatrixXd s = random_unit_columns(spec.dim, spec.n, source_seed);

  f.target_of_source.resize(static_cast<std::size_t>(spec.n));
  std::iota(f.target_of_source.begin(), f.target_of_source.end(), Index{0});
  std::shuffle(f.target_of_source.begin(), f.target_of_source.end(), rng);

  Eigen::MatrixXd t = f.rotation * s;
  if (spec.noise > 0.0) t += gaussian(spec.dim, spec.n, rng, spec.noise);
  t.colwise().normalize();

  Eigen::MatrixXd t_perm(spec.dim, spec.n);
  std::vector<std::string> src_words(static_cast<std::size_t>(spec.n));
  std::vector<std::string> trg_words(static_cast<std::size_t>(spec.n));
  for (Index j = 0; j < spec.n; ++j) {
    const Index i = f.target_of_source[static_cast<std::size_t>(j)];
    t_perm.col(i) = t.col(j);
    if (j < spec.numerals) {
      src_words[static_cast<std::size_t>(j)] = std::to_string(1000 + j);
      trg_words[static_cast<std::size_t>(i)] = std::to_string(1000 + j);
    } else {
      src_words[static_cast<std::size_t>(j)] = "s" + std::to_string(j);
      trg_words[static_cast<std::size_t>(i)] = "t" + std::to_string(j);
    }
  }
  f.source = EmbeddingSet{Lexicon(std::move(src_words)), s};
  f.target = EmbeddingSet{Lexicon(std::move(trg_words)), std::move(t_perm)};
  return f;
}

}  // namespace bimatch
