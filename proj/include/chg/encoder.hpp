//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_ENCODER_HPP
#define CHG_ENCODER_HPP

#include <string>
#include <vector>

#include "chg/chgraph.hpp"
#include "chg/checkpoint.hpp"
#include "chg/rng.hpp"
#include "chg/tensor.hpp"

namespace chg {

struct EncoderConfig {
  int layers = 5;
  int hidden = 300;
  double dropout = 0.5;
  int input_dim = kFeatureDim;
  // Contrastive projection output width.
  int proj_dim = 128;
  // Functional-group classes (fragment head width).
  int frag_classes = 16;
  // Fingerprint width (graph topology head width).
  int fp_bits = 2048;
  // Optional per-layer affine normalization after each update MLP.
  bool affine_norm = false;
  // Give the bond view its own projection head instead of sharing.
  bool separate_view_heads = false;

  // Throws TensorError when any dimension is out of range.
  void validate() const;
};

// Several graphs packed into one node matrix for a single forward pass.
// Row layout is the concatenation of each graph's own node order; edges are
// stored in both directions. All graphs in a batch share one variant.
struct CHGBatch {
  GraphVariant variant = GraphVariant::kChg;
  int n_graphs = 0;
  int total_nodes = 0;
  Tensor features;  // total_nodes x input_dim
  std::vector<int> edge_src, edge_dst;

  // Global row ids per node type, with the owning graph of each row.
  std::vector<int> atom_rows, atom_graph;
  std::vector<int> bond_rows, bond_graph;
  std::vector<int> frag_rows, frag_graph;
  // Graph-node row per graph; -1 when the variant has no graph node.
  std::vector<int> graph_rows;

  // One entry per valid fragment (at least two atoms). `bond_rows` is empty
  // in variants without bond nodes.
  struct FragmentView {
    int graph = 0;
    int frag_row = -1;
    std::vector<int> atom_rows;
    std::vector<int> bond_rows;
  };
  std::vector<FragmentView> views;
};

// Throws GraphError on an empty list or mixed variants.
CHGBatch make_batch(const std::vector<const CHGraph*>& graphs);

// Trainable state for the encoder and all heads. Parameter storage is
// stable after construction; Tapes hold raw pointers during a pass.
class EncoderParams {
public:
  // Deterministic init: weights are Xavier-uniform draws from `rng` in
  // registration order, biases and epsilons zero, norm scales one.
  EncoderParams(const EncoderConfig& cfg, Rng& rng);
  EncoderParams(const EncoderParams&) = delete;
  EncoderParams& operator=(const EncoderParams&) = delete;

  // Every trainable parameter in registration order.
  std::vector<Parameter*> all();

  const EncoderConfig& config() const { return cfg_; }

  struct GinLayer {
    Parameter w1, b1, w2, b2, eps;
    Parameter gamma, beta;  // used only under affine_norm
  };

  Parameter embed_w, embed_b;
  std::vector<GinLayer> gin;
  Parameter proj_w1, proj_b1, proj_w2, proj_b2;
  // Bond-view projection when separate_view_heads is set.
  Parameter projb_w1, projb_b1, projb_w2, projb_b2;
  Parameter frag_w, frag_b;
  Parameter topo_w, topo_b;
  Parameter scaf_w, scaf_b;

private:
  EncoderConfig cfg_;
};

// Full forward pass: h0 = Linear(features); per layer
// h = MLP2((1+eps)h + neighbor sum), dropout in train mode; returns the sum
// of the per-layer outputs h1..hL (jumping knowledge), total_nodes x hidden.
// Eval mode never touches `rng`.
Value encode(Tape& tape, const CHGBatch& batch, EncoderParams& params,
             bool train, Rng& rng);

// Mean embedding per graph over the given member rows (one segment id per
// row). Graphs with no members of the type get a zero row.
Value pool_rows(Tape& tape, Value emb, const std::vector<int>& rows,
                const std::vector<int>& row_graph, int n_graphs);

// Contrastive projection head: Linear -> ReLU -> Linear. The bond view
// shares the head unless separate_view_heads is configured.
Value project_view(Tape& tape, EncoderParams& params, Value x,
                   bool bond_view);
// Single-linear prediction heads.
Value predict_frag(Tape& tape, EncoderParams& params, Value x);
Value predict_topo(Tape& tape, EncoderParams& params, Value x);
// 21 columns: ring-count logits [0,9), aromatic-count logits [9,18),
// binary-flag logits [18,21).
Value predict_scaffold(Tape& tape, EncoderParams& params, Value x);

// Checkpoint packing. load_params throws IoError when a tensor is missing
// and TensorError when a shape differs.
void save_params(EncoderParams& params, Checkpoint& ckpt);
void load_params(EncoderParams& params, const Checkpoint& ckpt);

}  // namespace chg

#endif  // CHG_ENCODER_HPP
