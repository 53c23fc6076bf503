//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a flat key=value text format shared by config files and
// command-line overrides. One struct drives vocabulary building, graph
// construction, pretraining, and finetuning so a single hash can identify a
// run.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chg/chgraph.hpp"
#include "chg/encoder.hpp"
#include "chg/objectives.hpp"
#include "chg/tensor.hpp"

namespace chg {

// Named presets that zero one or more loss weights. Keeping them as presets
// (rather than asking callers to zero lambdas by hand) makes each study
// variant launchable from a single flag.
enum class Ablation {
  kNone,
  kNoAb,          // lambda_ab = 0
  kNoFrag,        // lambda_frag = 0
  kNoTopo,        // lambda_topo = 0
  kNoScaf,        // lambda_scaf = 0
  kNoGraphLevel,  // lambda_topo = lambda_scaf = 0
  kNoNodeLevel,   // lambda_ab = lambda_frag = 0
};

enum class TaskKind { kClassify, kRegress };

struct RunConfig {
  std::uint64_t seed = 0;

  int pretrain_epochs = 100;
  int finetune_epochs = 100;
  int pretrain_batch = 256;
  int finetune_batch = 32;

  double lr = 1e-3;
  double weight_decay = 1e-5;
  bool coupled_weight_decay = false;

  double lambda_ab = 0.2;
  double lambda_frag = 0.4;
  double lambda_topo = 0.4;
  double lambda_scaf = 0.4;
  double tau = 0.1;

  int vocab_size = 800;
  int fp_bits = 2048;
  int frag_classes = 16;

  int hidden = 300;
  int layers = 5;
  double dropout = 0.5;
  int proj_dim = 128;

  GraphVariant graph_variant = GraphVariant::kChg;
  Ablation ablation = Ablation::kNone;
  bool affine_norm = false;
  bool separate_view_heads = false;

  TaskKind task = TaskKind::kClassify;
  int threads = 1;
  // Optional custom functional-group library; empty selects the built-in set.
  std::string fg_file;

  // Throws DataError when any field is out of range.
  void validate() const;

  // Loss weights after applying the ablation preset.
  LossWeights effective_weights() const;

  EncoderConfig encoder_config() const;
  AdamConfig adam_config() const;

  // Subset of {"ab","frag","topo","scaf"} with a positive effective weight
  // that the selected graph variant can actually compute. The atom variant
  // has no fragment or graph nodes; the hierarchical variant has no bond
  // nodes and therefore no bond view for the contrastive term.
  std::vector<std::string> active_losses() const;

  // Hash of the full canonical serialization.
  std::uint64_t hash() const;

  // Hash of only the fields that determine preprocessed graphs and targets,
  // so optimizer changes do not invalidate a preprocessing cache.
  std::uint64_t preprocess_hash() const;
};

// Canonical serialization: every key on its own line, fixed order, suitable
// for hashing and for re-parsing.
std::string serialize_config(const RunConfig& cfg);

// Applies one key=value override. Throws DataError for an unknown key or an
// unparseable value.
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);

// Applies config text onto an existing config: one key=value per line, '#'
// to end of line is a comment, blank lines ignored. Does not validate.
void apply_config_text(RunConfig& cfg, const std::string& text);

// Parses config text starting from defaults; does not validate.
RunConfig parse_config(const std::string& text);

// Reads and parses a config file. Throws IoError when unreadable.
RunConfig load_config(const std::string& path);

const char* to_string(GraphVariant v);
const char* to_string(Ablation a);
const char* to_string(TaskKind t);

}  // namespace chg
