//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end pipeline: molecule preprocessing (graphs + self-supervision
// targets), the binary preprocessing cache, batched loss assembly, the
// pretraining and finetuning loops, evaluation, and embedding export.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "chg/checkpoint.hpp"
#include "chg/chgraph.hpp"
#include "chg/config.hpp"
#include "chg/dataset.hpp"
#include "chg/encoder.hpp"
#include "chg/labels.hpp"
#include "chg/metrics.hpp"
#include "chg/objectives.hpp"
#include "chg/vocab.hpp"

namespace chg {

// One preprocessed molecule: its graph plus every pretraining target.
struct MoleculeData {
  CHGraph graph;
  // Functional-group bits, one row per fragment with at least two atoms, in
  // fragment order. Rows align with the views make_batch builds.
  Tensor frag_labels;
  std::vector<std::uint8_t> fp;  // fp_bits 0/1 entries
  ScaffoldTargets scaffold;
};

// The functional-group library the config selects (built-in by default,
// loaded from cfg.fg_file when set).
FunctionalGroupSet functional_groups_for(const RunConfig& cfg);

MoleculeData preprocess_molecule(const std::string& smiles,
                                 const FragmentVocab& vocab,
                                 const FunctionalGroupSet& fgs,
                                 const RunConfig& cfg);

// Preprocesses every record. cfg.threads caps worker threads; the output
// order always matches the dataset order.
std::vector<MoleculeData> preprocess(const Dataset& ds,
                                     const FragmentVocab& vocab,
                                     const RunConfig& cfg);

// Binary preprocessing cache, versioned header CHGCACHE1. Stores the three
// key hashes, the vocabulary, and the preprocessed molecules.
void save_cache(const std::string& path, std::uint64_t corpus_hash,
                std::uint64_t vocab_hash, std::uint64_t preprocess_hash,
                const FragmentVocab& vocab,
                const std::vector<MoleculeData>& mols);

struct CacheContents {
  std::uint64_t corpus_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::uint64_t preprocess_hash = 0;
  FragmentVocab vocab;
  std::vector<MoleculeData> mols;
};

// Throws IoError on a missing file, bad magic, or truncation.
CacheContents load_cache(const std::string& path);

// Batched graphs with stacked supervision targets.
struct TrainBatch {
  CHGBatch graphs;
  Tensor frag_labels;  // rows align with graphs.views
  Tensor fp_bits;      // n_graphs x D; empty when the variant lacks it
  std::vector<ScaffoldTargets> scaffolds;
};

TrainBatch assemble_batch(const std::vector<const MoleculeData*>& mols);

// Loss values of one batch. Unweighted components; `total` is weighted.
// A component that is inactive (zero weight, structurally impossible, or
// without examples in this batch) is NaN.
struct LossReport {
  double ab = 0.0, frag = 0.0, topo = 0.0, scaf = 0.0, total = 0.0;
};

// Builds every active loss for the batch and returns the weighted total as
// a tape Value (so callers can run backward). Fills `report` when non-null.
Value batch_losses(Tape& tape, const TrainBatch& batch, EncoderParams& params,
                   const RunConfig& cfg, bool train, Rng& rng,
                   LossReport* report);

struct EpochLosses {
  int epoch = 0;  // 1-based
  LossReport mean;
};

struct PretrainResult {
  std::vector<EpochLosses> epochs;
  int best_epoch = 0;  // lowest mean total, tie -> earlier
  std::string csv;     // "epoch,loss_ab,...,loss_total" rows
};

// Full pretraining loop. Writes the final checkpoint to `out_path` and the
// best-epoch checkpoint to `out_path + ".best"`. `resume_from` continues an
// earlier run bit-exactly (same config required). `log` receives one line
// per epoch when non-null.
PretrainResult pretrain(const std::vector<MoleculeData>& mols,
                        const FragmentVocab& vocab, const RunConfig& cfg,
                        const std::string& out_path,
                        const std::string& resume_from = "",
                        std::ostream* log = nullptr);

// Pooled per-graph representation for property prediction: the mean of each
// node level present in the variant plus the graph-node row, concatenated.
// chg: atoms|bonds|frags|graph (4*hidden); hier: atoms|frags|graph
// (3*hidden); atom: atoms (hidden).
Value readout(Tape& tape, Value emb, const CHGBatch& batch);
int readout_dim(const RunConfig& cfg);

struct FinetuneResult {
  int best_epoch = 0;       // 1-based, validation-selected
  double val_metric = 0.0;  // at the best epoch
  double test_metric = 0.0;
  std::string metric_name;  // "roc_auc" or "rmse"
  int used_tasks = 0;
  int skipped_tasks = 0;
  std::vector<double> per_task;  // test split; NaN for skipped tasks
};

// Supervised finetuning with a fresh linear head on the readout. `init`
// warm-starts the encoder when non-null; the head is always fresh. `seed`
// drives the split, initialization, shuffling, and dropout. When `out_ckpt`
// is non-empty the best-validation model is saved there.
FinetuneResult finetune(const Dataset& ds, const RunConfig& cfg,
                        const FragmentVocab& vocab, const Checkpoint* init,
                        std::uint64_t seed, const std::string& out_ckpt = "",
                        std::ostream* log = nullptr);

// Metrics of a finetuned checkpoint on a labeled dataset. The checkpoint
// must carry a head whose arity matches the dataset's label columns; throws
// DataError otherwise.
FinetuneResult evaluate(const Dataset& ds, const RunConfig& cfg,
                        const Checkpoint& ckpt);

// CSV of embeddings with grouping keys, eval mode. Level selects the rows:
//   graph:    one row per molecule, key = scaffold canonical form or "acyclic"
//   fragment: one row per (fragment, matched functional group)
//   bond:     one row per bond node, key = single|double|triple|aromatic
// Header: id,key,c0..c{hidden-1}. Bond level requires the full variant.
std::string export_embeddings(const Dataset& ds, const RunConfig& cfg,
                              const FragmentVocab& vocab,
                              EncoderParams& params, const std::string& level);

// Murcko-style scaffold: iteratively strips degree-one atoms, canonicalizes
// the remainder. Empty string for acyclic molecules.
std::string scaffold_frame(const Molecule& m);

// Packs params (+ optional head and optimizer state) into a checkpoint that
// embeds the config and vocabulary texts.
Checkpoint make_checkpoint(const RunConfig& cfg, const FragmentVocab& vocab,
                           EncoderParams& params);

}  // namespace chg
