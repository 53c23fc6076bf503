//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_OBJECTIVES_HPP
#define CHG_OBJECTIVES_HPP

#include <optional>
#include <vector>

#include "chg/encoder.hpp"
#include "chg/labels.hpp"
#include "chg/tensor.hpp"

namespace chg {

struct LossWeights {
  double lambda_ab = 0.2;
  double lambda_frag = 0.4;
  double lambda_topo = 0.4;
  double lambda_scaf = 0.4;
  double tau = 0.1;

  // Throws TensorError on a negative weight or non-positive temperature.
  void validate() const;
};

// Projected per-fragment summaries for the cross-view contrastive task.
// Row k of `za` and `zb` describe the same fragment from the atom side and
// the bond side. Only fragments with both views qualify: at least two atoms
// and at least one intra-fragment bond node.
struct FragmentViewVectors {
  int count = 0;
  Value za;  // count x proj_dim
  Value zb;  // count x proj_dim
};

// Pools each eligible fragment's member atom rows and member bond rows of
// `emb` separately and passes both through the projection head.
FragmentViewVectors fragment_views(Tape& tape, Value emb,
                                   const CHGBatch& batch,
                                   EncoderParams& params);

// Symmetric NT-Xent over cosine similarities: softmax rows of the NxN
// cross-view similarity matrix at temperature tau, averaged over both
// directions and all fragments. Same-key fragments from other molecules are
// ordinary negatives. Throws TensorError when N = 0.
Value loss_ab(Tape& tape, Value za, Value zb, double tau);

// Mean over fragments of the summed per-class binary cross-entropy between
// fragment logits (N x C) and 0/1 labels.
Value loss_frag(Tape& tape, Value logits, const Tensor& labels);

// Mean binary cross-entropy over every bit of the batch (B x D logits
// against 0/1 fingerprint bits).
Value loss_topo(Tape& tape, Value logits, const Tensor& bits);

// Scaffold heads on 21 logit columns per graph: cross-entropy over the ring
// count classes [0,9), cross-entropy over the aromatic ring count classes
// [9,18), and mean binary cross-entropy over the three indicator columns
// [18,21), each averaged over the batch and summed.
Value loss_scaf(Tape& tape, Value logits21,
                const std::vector<ScaffoldTargets>& targets);

// Weighted sum of whichever components ran this step; absent terms
// contribute zero, which is how the loss-removal variants are realized.
struct LossTerms {
  std::optional<Value> ab;
  std::optional<Value> frag;
  std::optional<Value> topo;
  std::optional<Value> scaf;
};
Value loss_total(Tape& tape, const LossTerms& terms, const LossWeights& w);

}  // namespace chg

#endif  // CHG_OBJECTIVES_HPP
