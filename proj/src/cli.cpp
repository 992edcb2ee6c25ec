#include "bimatch/cli.hpp"

#include <chrono>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bimatch/em.hpp"
#include "bimatch/embeddings.hpp"
#include "bimatch/eval.hpp"
#include "bimatch/model_io.hpp"
#include "bimatch/seeds.hpp"
#include "bimatch/synthetic.hpp"

namespace bimatch {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

struct InduceOptions {
  std::string src_emb;
  std::string trg_emb;
  std::string seed;
  std::string prior = "1:1";
  long long k = 3;
  long long rank_restrict = 0;  // 0: off
  long long vocab_size = 0;     // 0: whole file
  std::string normalize = "unit";
  std::string out_dict;
  std::string report;
  std::string model_out;
  std::string trace;
  int max_iters = 500;
  double eps = 1e-6;
  int threads = 1;
  long long seed_rng = 0;
  bool pin_seed = false;
  bool casefold = false;
  bool drop_zero = false;
  bool fix_mu = false;
  bool verbose = false;
};

json config_json(const InduceOptions& o) {
  return json{{"src_emb", o.src_emb},
              {"trg_emb", o.trg_emb},
              {"seed", o.seed},
              {"prior", o.prior},
              {"k", o.k},
              {"rank_restrict", o.rank_restrict > 0 ? json(o.rank_restrict) : json(nullptr)},
              {"vocab_size", o.vocab_size > 0 ? json(o.vocab_size) : json(nullptr)},
              {"normalize", o.normalize},
              {"max_iters", o.max_iters},
              {"eps", o.eps},
              {"threads", o.threads},
              {"seed_rng", o.seed_rng},
              {"pin_seed", o.pin_seed},
              {"casefold", o.casefold},
              {"drop_zero", o.drop_zero},
              {"fix_mu", o.fix_mu},
              {"out_dict", o.out_dict},
              {"model_out", o.model_out},
              {"trace", o.trace}};
}

// Restores the options recorded in a run report's "config" section.
InduceOptions options_from_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report " + path);
  json report;
  try {
    report = json::parse(in);
    const json& c = report.at("config");
    InduceOptions o;
    o.src_emb = c.at("src_emb").get<std::string>();
    o.trg_emb = c.at("trg_emb").get<std::string>();
    o.seed = c.at("seed").get<std::string>();
    o.prior = c.at("prior").get<std::string>();
    o.k = c.at("k").get<long long>();
    o.rank_restrict = c.at("rank_restrict").is_null() ? 0 : c["rank_restrict"].get<long long>();
    o.vocab_size = c.at("vocab_size").is_null() ? 0 : c["vocab_size"].get<long long>();
    o.normalize = c.at("normalize").get<std::string>();
    o.max_iters = c.at("max_iters").get<int>();
    o.eps = c.at("eps").get<double>();
    o.threads = c.at("threads").get<int>();
    o.seed_rng = c.at("seed_rng").get<long long>();
    o.pin_seed = c.at("pin_seed").get<bool>();
    o.casefold = c.at("casefold").get<bool>();
    o.drop_zero = c.at("drop_zero").get<bool>();
    o.fix_mu = c.value("fix_mu", false);
    o.out_dict = c.at("out_dict").get<std::string>();
    o.model_out = c.at("model_out").get<std::string>();
    o.trace = c.at("trace").get<std::string>();
    return o;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

EmbeddingSet load_normalized(const std::string& path, long long vocab_size, NormalizationScheme scheme,
                             bool drop_zero) {
  std::optional<std::size_t> cap;
  if (vocab_size > 0) cap = static_cast<std::size_t>(vocab_size);
  return normalize(load_embeddings(path, cap), scheme, drop_zero ? ZeroNormPolicy::drop : ZeroNormPolicy::error);
}

SeedDictionary make_seed(const std::string& spec, const Lexicon& src, const Lexicon& trg, bool casefold) {
  SeedOptions options{casefold};
  if (spec == "numerals") return seed_numerals(src, trg, options);
  if (spec == "identical") return seed_identical(src, trg, options);
  if (spec.rfind("tsv:", 0) == 0) return seed_from_tsv(spec.substr(4), src, trg, options);
  throw Error("unknown seed '" + spec + "' (expected tsv:PATH, numerals or identical)");
}

json record_json(const IterationRecord& r) {
  return json{{"iteration", r.iteration},
              {"matching_size", r.matching_size},
              {"total_weight", r.total_weight},
              {"mean_cosine", r.mean_cosine}};
}

int cmd_induce(const InduceOptions& o, std::ostream& err) {
  const auto t_total = Clock::now();
  json timings;

  const NormalizationScheme scheme = parse_normalization(o.normalize);
  EmConfig config;
  config.prior = parse_prior(o.prior);
  config.k = o.k;
  if (o.rank_restrict > 0) config.rank_restrict = RankRestriction{o.rank_restrict, o.rank_restrict};
  config.convergence_eps = o.eps;
  config.max_iters = o.max_iters;
  config.normalization = scheme;
  config.update_mu = !o.fix_mu;
  config.pin_seed = o.pin_seed;
  config.threads = o.threads;
  config.validate();

  auto t = Clock::now();
  EmbeddingSet src = load_embeddings(o.src_emb, o.vocab_size > 0 ? std::optional<std::size_t>(o.vocab_size) : std::nullopt);
  EmbeddingSet trg = load_embeddings(o.trg_emb, o.vocab_size > 0 ? std::optional<std::size_t>(o.vocab_size) : std::nullopt);
  timings["load_seconds"] = seconds_since(t);
  if (src.dim() != trg.dim())
    throw Error("source and target embeddings differ in dimension (" + std::to_string(src.dim()) + " vs " +
                std::to_string(trg.dim()) + ")");

  t = Clock::now();
  const auto policy = o.drop_zero ? ZeroNormPolicy::drop : ZeroNormPolicy::error;
  src = normalize(src, scheme, policy);
  trg = normalize(trg, scheme, policy);
  timings["normalize_seconds"] = seconds_since(t);

  t = Clock::now();
  const SeedDictionary seed = make_seed(o.seed, src.lexicon, trg.lexicon, o.casefold);
  timings["seed_seconds"] = seconds_since(t);
  if (o.verbose)
    err << "seed: " << seed.size() << " pairs (" << to_string(seed.provenance) << ")\n";

  std::ofstream trace_out;
  if (!o.trace.empty()) trace_out = open_output(o.trace);
  auto observer = [&](const IterationRecord& r) {
    const std::string line = record_json(r).dump();
    if (trace_out.is_open()) trace_out << line << '\n' << std::flush;
    if (o.verbose) err << line << '\n';
  };
  const EmResult result = run_em(src.vectors, trg.vectors, seed, config, observer);
  timings["e_step_seconds"] = result.e_step_seconds;
  timings["m_step_seconds"] = result.m_step_seconds;

  t = Clock::now();
  {
    std::ofstream dict = open_output(o.out_dict);
    for (const auto& p : result.matching.pairs)
      dict << src.lexicon.word(p.source) << '\t' << trg.lexicon.word(p.target) << '\t' << shortest(p.weight) << '\n';
    if (!dict) throw Error("write failed for " + o.out_dict);
  }
  if (!o.model_out.empty()) {
    SavedModel model{result.params, scheme,
                     o.vocab_size > 0 ? std::optional<std::size_t>(o.vocab_size) : std::nullopt};
    save_model(o.model_out, model);
  }
  timings["write_seconds"] = seconds_since(t);

  if (!o.report.empty()) {
    json trace = json::array();
    for (const auto& r : result.trace) trace.push_back(record_json(r));
    json report{
        {"tool", "bimatch"},
        {"command", "induce"},
        {"report_version", 1},
        {"config", config_json(o)},
        {"seed", {{"provenance", std::string(to_string(seed.provenance))},
                  {"pairs", seed.size()},
                  {"entries_read", seed.entries_read},
                  {"out_of_vocabulary", seed.out_of_vocabulary},
                  {"coverage", seed.coverage()}}},
        {"vocabulary", {{"source", src.size()}, {"target", trg.size()}, {"dim", src.dim()}}},
        {"trace", trace},
        {"result", {{"iterations", result.trace.size()},
                    {"converged", result.converged},
                    {"dictionary_size", result.matching.size()},
                    {"total_weight", result.matching.total_weight},
                    {"mean_cosine", result.trace.empty() ? json(nullptr) : json(result.trace.back().mean_cosine)},
                    {"orthogonality_error", result.params.orthogonality_error()}}},
    };
    timings["total_seconds"] = seconds_since(t_total);
    report["timings"] = timings;
    std::ofstream out = open_output(o.report);
    out << report.dump(2) << '\n';
  }
  return 0;
}

struct ApplyOptions {
  std::string model;
  std::string src_emb;
  std::string trg_emb;
  long long vocab_size = 0;
  int threads = 1;
};

struct LoadedModel {
  SavedModel model;
  EmbeddingSet src;
  EmbeddingSet trg;
};

LoadedModel load_for_apply(const ApplyOptions& o) {
  LoadedModel m;
  m.model = load_model(o.model);
  long long vocab = o.vocab_size;
  if (vocab == 0 && m.model.vocab_size) vocab = static_cast<long long>(*m.model.vocab_size);
  m.src = load_normalized(o.src_emb, vocab, m.model.normalization, false);
  m.trg = load_normalized(o.trg_emb, vocab, m.model.normalization, false);
  if (m.src.dim() != m.model.params.dim() || m.trg.dim() != m.model.params.dim())
    throw Error("embedding dimension does not match the model (dim " + std::to_string(m.model.params.dim()) + ")");
  return m;
}

void add_apply_flags(CLI::App* cmd, ApplyOptions& o) {
  cmd->add_option("--model", o.model, "Model file written by induce --model-out")->required();
  cmd->add_option("--src-emb", o.src_emb, "Source embeddings (word2vec text)")->required();
  cmd->add_option("--trg-emb", o.trg_emb, "Target embeddings (word2vec text)")->required();
  cmd->add_option("--vocab-size", o.vocab_size, "Read only the first N words (default: as at training)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

struct EvaluateOptions {
  ApplyOptions apply;
  std::string eval_dict;
  std::string wordsim;
  bool json_output = false;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  if (o.eval_dict.empty() && o.wordsim.empty()) throw Error("evaluate needs --eval-dict or --wordsim");
  const LoadedModel m = load_for_apply(o.apply);
  json result;
  if (!o.eval_dict.empty()) {
    const auto gold = load_eval_dictionary(o.eval_dict);
    const auto r = precision_at_1(m.model.params, m.src, m.trg, gold, o.apply.threads);
    result["precision_at_1"] = r.precision;
    result["coverage"] = r.coverage;
    result["evaluated"] = r.evaluated;
    result["correct"] = r.correct;
    result["total"] = r.total;
    if (!o.json_output)
      out << "P@1\t" << fixed6(r.precision) << "\tcoverage\t" << fixed6(r.coverage) << "\t(" << r.correct << "/"
          << r.evaluated << " correct, " << r.evaluated << "/" << r.total << " in vocabulary)\n";
  }
  if (!o.wordsim.empty()) {
    const auto triples = load_word_similarity(o.wordsim);
    const auto r = word_similarity(m.model.params, m.src, m.trg, triples);
    result["spearman"] = r.spearman;
    result["wordsim_coverage"] = r.coverage;
    result["wordsim_used"] = r.used;
    if (!o.json_output)
      out << "spearman\t" << fixed6(r.spearman) << "\tcoverage\t" << fixed6(r.coverage) << "\t(" << r.used << "/"
          << triples.size() << " pairs)\n";
  }
  if (o.json_output) out << result.dump() << '\n';
  return 0;
}

struct HubnessOptions {
  ApplyOptions apply;
  std::string queries;
  long long k = 20;
  std::string out;
  bool all = false;
};

int cmd_hubness(const HubnessOptions& o, std::ostream& out) {
  const LoadedModel m = load_for_apply(o.apply);
  const auto gold = load_eval_dictionary(o.queries);
  std::vector<Index> queries;
  for (const auto& [word, refs] : gold.entries)
    if (auto s = m.src.lexicon.find(word)) queries.push_back(*s);
  if (queries.empty()) throw Error("no query word of " + o.queries + " is in the source vocabulary");
  const auto report = hubness(m.model.params, m.src.vectors, m.trg.vectors, queries, o.k, o.apply.threads);

  std::ofstream file;
  if (!o.out.empty()) file = open_output(o.out);
  std::ostream& sink = o.out.empty() ? out : file;
  for (const auto& e : report.ranking) {
    if (e.count == 0 && !o.all) break;
    sink << m.trg.lexicon.word(e.target) << '\t' << e.count << '\n';
  }
  return 0;
}

struct QueryOptions {
  ApplyOptions apply;
  std::vector<std::string> words;
  bool from_stdin = false;
  long long topn = 10;
};

int cmd_query(const QueryOptions& o, std::istream& in, std::ostream& out) {
  std::vector<std::string> words = o.words;
  if (o.from_stdin) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) words.push_back(line);
    }
  }
  if (words.empty()) throw Error("query needs --word or --stdin input");
  const LoadedModel m = load_for_apply(o.apply);
  std::vector<Index> queries;
  for (const auto& w : words)
    if (auto s = m.src.lexicon.find(w)) queries.push_back(*s);
  const auto neighbors = nearest_targets(m.model.params, m.src.vectors, m.trg.vectors, queries, o.topn, o.apply.threads);
  std::size_t next = 0;
  for (const auto& w : words) {
    if (!m.src.lexicon.contains(w)) {
      out << w << "\tOOV\n";
      continue;
    }
    out << w;
    for (const auto& nb : neighbors[next]) out << '\t' << m.trg.lexicon.word(nb.target) << '\t' << fixed6(nb.cosine);
    out << '\n';
    ++next;
  }
  return 0;
}

struct SynthOptions {
  long long n = 1000;
  long long dim = 50;
  double noise = 0.01;
  long long numerals = 25;
  long long seed_size = 25;
  long long seed_rng = 1;
  std::string out_dir;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  PlantedSpec spec;
  spec.n = o.n;
  spec.dim = o.dim;
  spec.noise = o.noise;
  spec.numerals = o.numerals;
  spec.seed = static_cast<std::uint64_t>(o.seed_rng);
  const PlantedFixture f = make_planted_rotation(spec);
  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  write_embeddings(dir / "src.vec", f.source);
  write_embeddings(dir / "trg.vec", f.target);
  {
    std::ofstream gold = open_output((dir / "gold.tsv").string());
    std::ofstream seed = open_output((dir / "seed.tsv").string());
    for (Index j = 0; j < spec.n; ++j) {
      const auto& s = f.source.lexicon.word(j);
      const auto& t = f.target.lexicon.word(f.target_of_source[static_cast<std::size_t>(j)]);
      gold << s << '\t' << t << '\n';
      if (j < o.seed_size) seed << s << '\t' << t << '\n';
    }
  }
  out << "wrote " << (dir / "src.vec").string() << ", " << (dir / "trg.vec").string() << ", "
      << (dir / "gold.tsv").string() << ", " << (dir / "seed.tsv").string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bilingual dictionary induction from monolingual embeddings via Viterbi EM over bipartite matchings",
               "bimatch"};
  app.require_subcommand(1);

  InduceOptions induce;
  std::string rerun;
  auto* induce_cmd = app.add_subcommand("induce", "Train a mapping and write the induced dictionary");
  induce_cmd->add_option("--src-emb", induce.src_emb, "Source embeddings (word2vec text)");
  induce_cmd->add_option("--trg-emb", induce.trg_emb, "Target embeddings (word2vec text)");
  induce_cmd->add_option("--seed", induce.seed, "tsv:PATH | numerals | identical");
  induce_cmd->add_option("--prior", induce.prior, "Edge-set prior")
      ->check(CLI::IsMember({"1:1", "1:2", "2:2", "1:many"}));
  induce_cmd->add_option("--k", induce.k, "Candidate targets per source word")->check(CLI::PositiveNumber);
  induce_cmd->add_option("--rank-restrict", induce.rank_restrict,
                         "Match only the N most frequent words of each language (0: off)")
      ->check(CLI::NonNegativeNumber);
  induce_cmd->add_option("--vocab-size", induce.vocab_size, "Read only the first N words of each file (0: all)")
      ->check(CLI::NonNegativeNumber);
  induce_cmd->add_option("--normalize", induce.normalize, "Embedding normalization")
      ->check(CLI::IsMember({"none", "unit", "unit_center_unit"}));
  induce_cmd->add_option("--out-dict", induce.out_dict, "Induced dictionary TSV");
  induce_cmd->add_option("--report", induce.report, "Run report (JSON)");
  induce_cmd->add_option("--model-out", induce.model_out, "Trained model file");
  induce_cmd->add_option("--trace", induce.trace, "Per-iteration trace (JSON lines)");
  induce_cmd->add_option("--max-iters", induce.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  induce_cmd->add_option("--eps", induce.eps, "Stop when mean cosine improves by less than this")
      ->check(CLI::NonNegativeNumber);
  induce_cmd->add_option("--threads", induce.threads, "Worker threads")->check(CLI::PositiveNumber);
  induce_cmd->add_option("--seed-rng", induce.seed_rng, "Random seed (recorded; the algorithm is deterministic)");
  induce_cmd->add_flag("--pin-seed", induce.pin_seed, "Keep seed pairs in every E-step");
  induce_cmd->add_flag("--casefold", induce.casefold, "ASCII case folding when building the seed");
  induce_cmd->add_flag("--drop-zero", induce.drop_zero, "Drop zero vectors instead of failing");
  induce_cmd->add_flag("--fix-mu", induce.fix_mu, "Keep mu at zero");
  induce_cmd->add_flag("-v,--verbose", induce.verbose, "Log progress to stderr");
  induce_cmd->add_option("--rerun", rerun, "Repeat the run recorded in a report (other flags are ignored)");

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "P@1 on a dictionary or Spearman on word similarity");
  add_apply_flags(evaluate_cmd, evaluate.apply);
  evaluate_cmd->add_option("--eval-dict", evaluate.eval_dict, "Evaluation dictionary TSV");
  evaluate_cmd->add_option("--wordsim", evaluate.wordsim, "Cross-lingual word similarity TSV (src, trg, score)");
  evaluate_cmd->add_flag("--json", evaluate.json_output, "Machine-readable output");

  HubnessOptions hub;
  auto* hubness_cmd = app.add_subcommand("hubness", "Count how often each target is among the k nearest neighbors");
  add_apply_flags(hubness_cmd, hub.apply);
  hubness_cmd->add_option("--queries", hub.queries, "Dictionary TSV whose source words are the queries")->required();
  hubness_cmd->add_option("--k", hub.k, "Neighborhood size")->check(CLI::PositiveNumber);
  hubness_cmd->add_option("--out", hub.out, "Output TSV (default: stdout)");
  hubness_cmd->add_flag("--all", hub.all, "Also list targets with zero count");

  QueryOptions query;
  auto* query_cmd = app.add_subcommand("query", "Nearest target words of source words");
  add_apply_flags(query_cmd, query.apply);
  query_cmd->add_option("--word", query.words, "Query word (repeatable)");
  query_cmd->add_flag("--stdin", query.from_stdin, "Read query words from stdin, one per line");
  query_cmd->add_option("--topn", query.topn, "Neighbors per query")->check(CLI::PositiveNumber);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a planted-rotation toy fixture");
  synth_cmd->add_option("--n", synth.n, "Words per language")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth.noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--numerals", synth.numerals, "Pairs named by shared numerals")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed-size", synth.seed_size, "Pairs written to seed.tsv")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed-rng", synth.seed_rng, "Random seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "bimatch: usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*induce_cmd) {
      InduceOptions o = rerun.empty() ? induce : options_from_report(rerun);
      if (rerun.empty()) {
        std::vector<std::string> missing;
        if (o.src_emb.empty()) missing.push_back("--src-emb");
        if (o.trg_emb.empty()) missing.push_back("--trg-emb");
        if (o.seed.empty()) missing.push_back("--seed");
        if (o.out_dict.empty()) missing.push_back("--out-dict");
        if (!missing.empty()) {
          std::string names;
          for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
          err << "bimatch: usage error: induce requires " << names << '\n';
          return 2;
        }
      } else {
        o.verbose = induce.verbose;
        if (!induce.report.empty()) o.report = induce.report;
      }
      return cmd_induce(o, err);
    }
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out);
    if (*hubness_cmd) return cmd_hubness(hub, out);
    if (*query_cmd) return cmd_query(query, std::cin, out);
    if (*synth_cmd) return cmd_synth(synth, out);
  } catch (const std::exception& e) {
    err << "bimatch: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bimatch
