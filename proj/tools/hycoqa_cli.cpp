// hycoqa: ingest corpora, build triples, train, evaluate, search and export
// visualization data.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hycoqa/data.hpp"
#include "hycoqa/error.hpp"
#include "hycoqa/eval.hpp"
#include "hycoqa/model.hpp"
#include "hycoqa/train.hpp"
#include "hycoqa/viz.hpp"

namespace fs = std::filesystem;
using namespace hycoqa;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageFailure = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void require_same_dim(const model::ModelParams& params, const data::EmbeddingStore& store,
                      const std::string& what) {
  if (store.dim() != params.input_dim()) {
    throw ShapeError("dimension mismatch: " + what + " has n = " + std::to_string(store.dim()) +
                     " but the checkpoint expects n = " + std::to_string(params.input_dim()));
  }
}

struct IngestArgs {
  std::string corpus, out_desc, out_code;
  std::size_t embed_dim = 1024;
  std::uint64_t seed = 0;
};

void cmd_ingest(const IngestArgs& a) {
  const auto corpus = data::load_corpus(a.corpus);
  data::EmbeddingStore desc(static_cast<std::uint32_t>(a.embed_dim));
  data::EmbeddingStore code(static_cast<std::uint32_t>(a.embed_dim));
  for (const auto& item : corpus) {
    desc.add(item.id, data::pseudo_embed(item.description, a.embed_dim, a.seed));
    code.add(item.id, data::pseudo_embed(item.code, a.embed_dim, a.seed));
  }
  data::write_embeddings(desc, a.out_desc);
  data::write_embeddings(code, a.out_code);
  std::cout << "wrote " << corpus.size() << " descriptions to " << a.out_desc << " and " << corpus.size()
            << " code snippets to " << a.out_code << "\n";
}

struct TriplesArgs {
  std::string corpus, out_dir;
  std::vector<double> splits{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

void cmd_make_triples(const TriplesArgs& a) {
  if (a.splits.size() != 3) throw UsageError("--splits needs three ratios: train,valid,test");
  const auto corpus = data::load_corpus(a.corpus);
  const auto splits = data::make_triples(corpus, {a.splits[0], a.splits[1], a.splits[2]}, a.seed);
  fs::create_directories(a.out_dir);
  for (const auto* ds : {&splits.train, &splits.valid, &splits.test}) {
    const fs::path path = fs::path(a.out_dir) / (std::string(data::split_name(ds->split)) + ".jsonl");
    data::write_triples(*ds, path);
    std::cout << data::split_name(ds->split) << ": " << ds->triples.size() << " triples -> " << path.string()
              << "\n";
  }
}

struct TrainArgs {
  std::string desc_store, code_store, triples, checkpoint, loss_csv;
  train::TrainConfig cfg;
  bool euclidean = false;
};

void cmd_train(TrainArgs a) {
  a.cfg.riemannian = !a.euclidean;
  a.cfg.validate();
  const auto desc = data::read_embeddings(a.desc_store);
  const auto code = data::read_embeddings(a.code_store);
  if (desc.dim() != code.dim()) {
    throw ShapeError("dimension mismatch: description store n = " + std::to_string(desc.dim()) +
                     ", code store n = " + std::to_string(code.dim()));
  }
  train::TrainingData td{desc, code, data::read_triples(a.triples)};
  const auto result = train::train(td, a.cfg);
  model::write_checkpoint(result.params, a.checkpoint);
  if (!a.loss_csv.empty()) write_text(a.loss_csv, train::loss_trace_csv(result.epoch_loss));
  if (!result.epoch_loss.empty()) {
    std::cout << "epochs " << result.epoch_loss.size() << ", first loss " << result.epoch_loss.front()
              << ", final loss " << result.epoch_loss.back() << "\n";
  }
  std::cout << "checkpoint written to " << a.checkpoint << "\n";
}

struct EvalArgs {
  std::string checkpoint, desc_store, code_store, triples;
  model::SequenceLimits limits;
  bool table = false;
};

void cmd_eval(const EvalArgs& a) {
  const auto params = model::read_checkpoint(a.checkpoint);
  const auto desc = data::read_embeddings(a.desc_store);
  const auto code = data::read_embeddings(a.code_store);
  require_same_dim(params, desc, "description store");
  require_same_dim(params, code, "code store");
  const auto ev = eval::evaluate(params, data::read_triples(a.triples, data::Split::test), desc, code, a.limits);
  std::cout << ev.report.to_json() << "\n";
  if (a.table) std::cout << ev.report.to_table();
}

struct SearchArgs {
  std::string checkpoint, code_store, desc_store, query, query_id;
  std::size_t topk = 10;
  std::uint64_t seed = 0;
  model::SequenceLimits limits;
};

void cmd_search(const SearchArgs& a) {
  if (a.query.empty() == a.query_id.empty()) throw UsageError("give exactly one of --query or --query-id");
  const auto params = model::read_checkpoint(a.checkpoint);
  const auto code = data::read_embeddings(a.code_store);
  require_same_dim(params, code, "code store");

  Matrix query_rows;
  if (!a.query_id.empty()) {
    if (a.desc_store.empty()) throw UsageError("--query-id needs --desc-store");
    const auto desc = data::read_embeddings(a.desc_store);
    require_same_dim(params, desc, "description store");
    if (!desc.contains(a.query_id)) throw UsageError("unknown query id \"" + a.query_id + "\"");
    query_rows = desc.matrix(a.query_id);
  } else {
    query_rows = data::pseudo_embed(a.query, params.input_dim(), a.seed);
  }
  if (code.size() == 0) throw UsageError("code store is empty");

  const auto q = model::pool_and_normalize(
      params, model::TokenSequence(std::move(query_rows), model::Role::question, a.limits), params.eps_ball);
  std::vector<model::QAEmbedding> cands;
  cands.reserve(code.size());
  for (const auto& e : code.entries()) {
    cands.push_back(eval::embed_stored(params, code, e.id, model::Role::answer, a.limits));
  }
  const auto ranked = eval::rank_candidates(params, q, cands);
  const std::size_t k = std::min(a.topk, ranked.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::printf("%zu\t%s\t%.17g\n", i + 1, code.entries()[ranked[i].index].id.c_str(), ranked[i].score);
  }
}

struct VizArgs {
  std::string checkpoint, desc_store, code_store, triples, out, features_out;
  model::SequenceLimits limits;
  std::uint64_t seed = 0;
};

void cmd_export_viz(const VizArgs& a) {
  const auto params = model::read_checkpoint(a.checkpoint);
  const auto desc = data::read_embeddings(a.desc_store);
  const auto code = data::read_embeddings(a.code_store);
  require_same_dim(params, desc, "description store");
  require_same_dim(params, code, "code store");
  const auto features = viz::extract_pair_features(params, data::read_triples(a.triples), desc, code, a.limits);
  std::vector<geom::Vec> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.push_back(f.feature);
  const auto proj = viz::pca_2d(rows, a.seed);
  write_text(a.out, viz::points_csv(features, proj));
  if (!a.features_out.empty()) write_text(a.features_out, viz::features_csv(features));
  std::cout << features.size() << " pair points written to " << a.out << " (explained variance "
            << proj.explained_variance_ratio << ")\n";
}

void add_limits(CLI::App* cmd, model::SequenceLimits& limits) {
  cmd->add_option("--max-q-len", limits.max_question, "Maximum description tokens")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-a-len", limits.max_answer, "Maximum code tokens")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic description-to-code matching"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Pseudo-embed a JSON-lines corpus into two stores");
  c_ingest->add_option("--corpus", ingest.corpus, "Corpus JSON-lines file")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--out-desc", ingest.out_desc, "Output description store")->required();
  c_ingest->add_option("--out-code", ingest.out_code, "Output code store")->required();
  c_ingest->add_option("--embed-dim", ingest.embed_dim, "Token embedding width n")->check(CLI::PositiveNumber);
  c_ingest->add_option("--seed", ingest.seed, "Pseudo-embedding key");

  TriplesArgs triples;
  auto* c_triples = app.add_subcommand("make-triples", "Split a corpus and sample negatives");
  c_triples->add_option("--corpus", triples.corpus, "Corpus JSON-lines file")->required()->check(CLI::ExistingFile);
  c_triples->add_option("--out-dir", triples.out_dir, "Directory for train/valid/test.jsonl")->required();
  c_triples->add_option("--splits", triples.splits, "train,valid,test ratios")->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  c_triples->add_option("--seed", triples.seed, "Shuffle and sampling seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model on triples");
  c_train->add_option("--desc-store", tr.desc_store)->required()->check(CLI::ExistingFile);
  c_train->add_option("--code-store", tr.code_store)->required()->check(CLI::ExistingFile);
  c_train->add_option("--triples", tr.triples, "Training triples JSON-lines")->required()->check(CLI::ExistingFile);
  c_train->add_option("--checkpoint", tr.checkpoint, "Output checkpoint")->required();
  c_train->add_option("--loss-csv", tr.loss_csv, "Optional epoch,mean_loss CSV");
  c_train->add_option("--dim", tr.cfg.output_dim, "Embedding dimension d")->check(CLI::PositiveNumber);
  c_train->add_option("--margin", tr.cfg.margin, "Hinge margin")->check(CLI::PositiveNumber);
  c_train->add_option("--lr", tr.cfg.lr, "Learning rate")->check(CLI::PositiveNumber);
  c_train->add_option("--epochs", tr.cfg.epochs)->check(CLI::NonNegativeNumber);
  c_train->add_option("--batch", tr.cfg.batch_size)->check(CLI::PositiveNumber);
  c_train->add_option("--seed", tr.cfg.seed);
  c_train->add_option("--eps-ball", tr.cfg.eps_ball, "Boundary clearance")->check(CLI::PositiveNumber);
  c_train->add_flag("--euclidean", tr.euclidean, "Skip the Riemannian rescaling of embedding gradients");
  add_limits(c_train, tr.cfg.limits);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Rank every query of a split against the split's codes");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--desc-store", ev.desc_store)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--code-store", ev.code_store)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--triples", ev.triples, "Evaluation triples")->required()->check(CLI::ExistingFile);
  c_eval->add_flag("--table", ev.table, "Also print a plain-text table");
  add_limits(c_eval, ev.limits);

  SearchArgs se;
  auto* c_search = app.add_subcommand("search", "Rank all stored codes for one query");
  c_search->add_option("--checkpoint", se.checkpoint)->required()->check(CLI::ExistingFile);
  c_search->add_option("--code-store", se.code_store)->required()->check(CLI::ExistingFile);
  c_search->add_option("--desc-store", se.desc_store)->check(CLI::ExistingFile);
  c_search->add_option("--query", se.query, "Query text (pseudo-embedded)");
  c_search->add_option("--query-id", se.query_id, "Id of a stored description");
  c_search->add_option("--topk", se.topk)->check(CLI::PositiveNumber);
  c_search->add_option("--seed", se.seed, "Pseudo-embedding key used at ingest");
  add_limits(c_search, se.limits);

  VizArgs vz;
  auto* c_viz = app.add_subcommand("export-viz", "Write 2-D PCA points of positive/negative pairs");
  c_viz->add_option("--checkpoint", vz.checkpoint)->required()->check(CLI::ExistingFile);
  c_viz->add_option("--desc-store", vz.desc_store)->required()->check(CLI::ExistingFile);
  c_viz->add_option("--code-store", vz.code_store)->required()->check(CLI::ExistingFile);
  c_viz->add_option("--triples", vz.triples)->required()->check(CLI::ExistingFile);
  c_viz->add_option("--out", vz.out, "label,x,y CSV")->required();
  c_viz->add_option("--features-out", vz.features_out, "Optional full-feature CSV");
  c_viz->add_option("--seed", vz.seed, "PCA start-vector seed");
  add_limits(c_viz, vz.limits);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageFailure;
  }

  try {
    if (*c_ingest) cmd_ingest(ingest);
    if (*c_triples) cmd_make_triples(triples);
    if (*c_train) cmd_train(tr);
    if (*c_eval) cmd_eval(ev);
    if (*c_search) cmd_search(se);
    if (*c_viz) cmd_export_viz(vz);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return 0;
}
