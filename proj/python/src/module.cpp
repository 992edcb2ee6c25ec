#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bimatch/assignment.hpp"
#include "bimatch/candidates.hpp"
#include "bimatch/em.hpp"
#include "bimatch/embeddings.hpp"
#include "bimatch/eval.hpp"
#include "bimatch/model_io.hpp"
#include "bimatch/seeds.hpp"
#include "bimatch/synthetic.hpp"

namespace py = pybind11;
using namespace bimatch;

namespace {

std::optional<RankRestriction> to_restriction(std::optional<std::pair<Index, Index>> r) {
  if (!r) return std::nullopt;
  return RankRestriction{r->first, r->second};
}

SeedDictionary to_seed(const std::vector<std::pair<Index, Index>>& pairs) {
  SeedDictionary d;
  for (const auto& [s, t] : pairs) d.pairs.push_back({s, t});
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bilingual dictionary induction with a matching-based latent-variable model";

  // Module-lifetime exception types; the module is never unloaded.
  static PyObject* error = PyErr_NewException("bimatch.Error", PyExc_RuntimeError, nullptr);
  static PyObject* collapse = PyErr_NewException("bimatch.EmCollapse", error, nullptr);
  m.attr("Error") = py::handle(error);
  m.attr("EmCollapse") = py::handle(collapse);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const EmCollapse& e) {
      py::object exc = py::handle(collapse)(e.what());
      exc.attr("iteration") = e.iteration();
      PyErr_SetObject(collapse, exc.ptr());
    } catch (const Error& e) {
      PyErr_SetString(error, e.what());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](const Eigen::MatrixXd& omega, const Eigen::VectorXd& mu) {
             ModelParams p{omega, mu};
             p.validate_shape();
             return p;
           }),
           py::arg("omega"), py::arg("mu"))
      .def_static("identity", &ModelParams::identity, py::arg("dim"))
      .def_readwrite("omega", &ModelParams::omega)
      .def_readwrite("mu", &ModelParams::mu)
      .def_property_readonly("dim", &ModelParams::dim)
      .def("orthogonality_error", &ModelParams::orthogonality_error);

  py::class_<EmbeddingSet>(m, "EmbeddingSet")
      .def_property_readonly("words", [](const EmbeddingSet& e) { return e.lexicon.words(); })
      .def_readonly("vectors", &EmbeddingSet::vectors)
      .def_property_readonly("dim", &EmbeddingSet::dim)
      .def("__len__", [](const EmbeddingSet& e) { return e.size(); })
      .def("index", [](const EmbeddingSet& e, const std::string& w) { return e.lexicon.find(w); });

  m.def("load_embeddings", &load_embeddings, py::arg("path"), py::arg("max_vocab") = std::nullopt,
        "Read a word2vec text file; columns of .vectors are words in file order.");
  m.def(
      "normalize",
      [](const Eigen::MatrixXd& v, const std::string& scheme) { return normalize(v, parse_normalization(scheme)); },
      py::arg("vectors"), py::arg("scheme") = "unit");
  m.def("edge_weight", &edge_weight, py::arg("t"), py::arg("s"), py::arg("params"));

  py::class_<CandidateGraph>(m, "CandidateGraph")
      .def(py::init([](Index n_src, Index n_trg, const std::vector<std::vector<std::pair<Index, double>>>& lists) {
             std::vector<std::vector<CandidateEdge>> by_source;
             for (const auto& l : lists) {
               auto& out = by_source.emplace_back();
               for (const auto& [t, w] : l) out.push_back({t, w});
             }
             return CandidateGraph(n_src, n_trg, std::move(by_source));
           }),
           py::arg("n_src"), py::arg("n_trg"), py::arg("edges"))
      .def_static("from_dense", &CandidateGraph::from_dense, py::arg("weights"))
      .def_property_readonly("source_count", &CandidateGraph::source_count)
      .def_property_readonly("target_count", &CandidateGraph::target_count)
      .def_property_readonly("edge_count", &CandidateGraph::edge_count)
      .def("edges_of", [](const CandidateGraph& g, Index j) {
        std::vector<std::pair<Index, double>> out;
        for (const auto& e : g.edges_of(j)) out.emplace_back(e.target, e.weight);
        return out;
      });

  m.def(
      "build_candidates",
      [](const Eigen::MatrixXd& s, const Eigen::MatrixXd& t, const ModelParams& p, Index k,
         std::optional<std::pair<Index, Index>> restrict, bool prune_negative, int threads) {
        CandidateOptions o;
        o.k = k;
        o.restrict = to_restriction(restrict);
        o.prune_negative = prune_negative;
        o.threads = threads;
        return build_candidates(s, t, p, o);
      },
      py::arg("source"), py::arg("target"), py::arg("params"), py::arg("k") = 3, py::arg("restrict") = std::nullopt,
      py::arg("prune_negative") = true, py::arg("threads") = 1);

  py::class_<Matching>(m, "Matching")
      .def_property_readonly("pairs",
                             [](const Matching& mt) {
                               std::vector<std::tuple<Index, Index, double>> out;
                               for (const auto& p : mt.pairs) out.emplace_back(p.target, p.source, p.weight);
                               return out;
                             })
      .def_readonly("total_weight", &Matching::total_weight)
      .def("__len__", &Matching::size);

  m.def("solve_sparse_lap", &solve_sparse_lap, py::arg("graph"));
  m.def("hungarian_dense", &hungarian_dense, py::arg("weights"));
  m.def("brute_force_matching", &brute_force_matching, py::arg("graph"));
  m.def(
      "procrustes",
      [](const Eigen::MatrixXd& s, const Eigen::MatrixXd& t) { return procrustes(s, t); },
      py::arg("source_matched"), py::arg("target_matched"));

  py::class_<EmConfig>(m, "EmConfig")
      .def(py::init<>())
      .def_readwrite("k", &EmConfig::k)
      .def_property(
          "rank_restrict",
          [](const EmConfig& c) -> std::optional<std::pair<Index, Index>> {
            if (!c.rank_restrict) return std::nullopt;
            return std::pair(c.rank_restrict->source_top, c.rank_restrict->target_top);
          },
          [](EmConfig& c, std::optional<std::pair<Index, Index>> r) { c.rank_restrict = to_restriction(r); })
      .def_readwrite("convergence_eps", &EmConfig::convergence_eps)
      .def_readwrite("max_iters", &EmConfig::max_iters)
      .def_readwrite("min_iters", &EmConfig::min_iters)
      .def_property(
          "prior", [](const EmConfig& c) { return std::string(to_string(c.prior)); },
          [](EmConfig& c, const std::string& p) { c.prior = parse_prior(p); })
      .def_readwrite("update_mu", &EmConfig::update_mu)
      .def_readwrite("pin_seed", &EmConfig::pin_seed)
      .def_readwrite("threads", &EmConfig::threads);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration", &IterationRecord::iteration)
      .def_readonly("matching_size", &IterationRecord::matching_size)
      .def_readonly("total_weight", &IterationRecord::total_weight)
      .def_readonly("mean_cosine", &IterationRecord::mean_cosine);

  py::class_<EmResult>(m, "EmResult")
      .def_readonly("params", &EmResult::params)
      .def_readonly("matching", &EmResult::matching)
      .def_readonly("trace", &EmResult::trace)
      .def_readonly("converged", &EmResult::converged);

  m.def(
      "run_em",
      [](const Eigen::MatrixXd& s, const Eigen::MatrixXd& t, const std::vector<std::pair<Index, Index>>& seed,
         const EmConfig& config) {
        py::gil_scoped_release release;
        return run_em(s, t, to_seed(seed), config);
      },
      py::arg("source"), py::arg("target"), py::arg("seed"), py::arg("config") = EmConfig{},
      "Viterbi EM from (source index, target index) seed pairs.");

  m.def(
      "e_step_one_to_many",
      [](const Eigen::MatrixXd& s, const Eigen::MatrixXd& t, const ModelParams& p, const EmConfig& c) {
        return e_step_one_to_many(s, t, p, c).source_of;
      },
      py::arg("source"), py::arg("target"), py::arg("params"), py::arg("config") = EmConfig{},
      "Best source per target, -1 for unaligned targets.");

  m.def(
      "nearest_targets",
      [](const ModelParams& p, const Eigen::MatrixXd& s, const Eigen::MatrixXd& t, const std::vector<Index>& q,
         Index n, int threads) {
        std::vector<std::vector<std::pair<Index, double>>> out;
        for (const auto& list : nearest_targets(p, s, t, q, n, threads)) {
          auto& row = out.emplace_back();
          for (const auto& nb : list) row.emplace_back(nb.target, nb.cosine);
        }
        return out;
      },
      py::arg("params"), py::arg("source"), py::arg("target"), py::arg("queries"), py::arg("n") = 1,
      py::arg("threads") = 1);
  m.def("translate_top1", &translate_top1, py::arg("params"), py::arg("source"), py::arg("target"),
        py::arg("source_index"));
  m.def(
      "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "hubness",
      [](const ModelParams& p, const Eigen::MatrixXd& s, const Eigen::MatrixXd& t, const std::vector<Index>& q,
         Index k, int threads) { return hubness(p, s, t, q, k, threads).counts; },
      py::arg("params"), py::arg("source"), py::arg("target"), py::arg("queries"), py::arg("k") = 20,
      py::arg("threads") = 1, "N_k(y) for every target y.");

  m.def(
      "make_planted_rotation",
      [](Index n, Index dim, double noise, std::uint64_t seed) {
        const auto f = make_planted_rotation({n, dim, noise, seed, 0});
        return py::dict(py::arg("source") = f.source.vectors, py::arg("target") = f.target.vectors,
                        py::arg("rotation") = f.rotation, py::arg("target_of_source") = f.target_of_source);
      },
      py::arg("n") = 1000, py::arg("dim") = 50, py::arg("noise") = 0.01, py::arg("seed") = 1);
  m.def("random_orthogonal", &random_orthogonal, py::arg("dim"), py::arg("seed"));

  m.def(
      "save_model",
      [](const std::filesystem::path& path, const ModelParams& p, const std::string& normalization) {
        save_model(path, SavedModel{p, parse_normalization(normalization), std::nullopt});
      },
      py::arg("path"), py::arg("params"), py::arg("normalization") = "unit");
  m.def(
      "load_model", [](const std::filesystem::path& path) { return load_model(path).params; }, py::arg("path"));
}
