//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/objectives.hpp"

#include <algorithm>

#include "chg/error.hpp"

namespace chg {

void LossWeights::validate() const {
  if (lambda_ab < 0 || lambda_frag < 0 || lambda_topo < 0 || lambda_scaf < 0)
    throw TensorError("loss weights must be non-negative");
  if (tau <= 0) throw TensorError("temperature must be positive");
}

FragmentViewVectors fragment_views(Tape& tape, Value emb,
                                   const CHGBatch& batch,
                                   EncoderParams& params) {
  std::vector<int> atom_rows, atom_seg, bond_rows, bond_seg;
  int n = 0;
  for (const auto& view : batch.views) {
    if (view.atom_rows.size() < 2 || view.bond_rows.empty()) continue;
    for (int r : view.atom_rows) {
      atom_rows.push_back(r);
      atom_seg.push_back(n);
    }
    for (int r : view.bond_rows) {
      bond_rows.push_back(r);
      bond_seg.push_back(n);
    }
    ++n;
  }
  FragmentViewVectors out;
  out.count = n;
  if (n == 0) return out;
  Value atom_mean =
      tape.segment_mean(tape.gather_rows(emb, atom_rows), atom_seg, n);
  Value bond_mean =
      tape.segment_mean(tape.gather_rows(emb, bond_rows), bond_seg, n);
  out.za = project_view(tape, params, atom_mean, false);
  out.zb = project_view(tape, params, bond_mean, true);
  return out;
}

Value loss_ab(Tape& tape, Value za, Value zb, double tau) {
  const int n = tape.value(za).rows;
  if (n < 1) throw TensorError("contrastive loss needs at least one fragment");
  if (tau <= 0) throw TensorError("temperature must be positive");
  Value a = tape.l2_normalize_rows(za);
  Value b = tape.l2_normalize_rows(zb);
  Value sim = tape.scale(tape.matmul(a, tape.transpose(b)), 1.0 / tau);
  Value pos = tape.diag(sim);
  // Row k softmaxes over all bond views; column k over all atom views.
  Value a2b = tape.sum(tape.sub(tape.row_log_sum_exp(sim), pos));
  Value b2a =
      tape.sum(tape.sub(tape.row_log_sum_exp(tape.transpose(sim)), pos));
  return tape.scale(tape.add(a2b, b2a), 1.0 / (2.0 * n));
}

namespace {

// BCE with logits, elementwise: softplus(x) - x*y for y in {0,1}.
Value bce_sum(Tape& tape, Value logits, const Tensor& labels) {
  if (tape.value(logits).rows != labels.rows ||
      tape.value(logits).cols != labels.cols)
    throw TensorError("labels do not match the logit shape");
  Value y = tape.input(labels);
  return tape.sum(tape.sub(tape.softplus(logits), tape.mul(logits, y)));
}

}  // namespace

Value loss_frag(Tape& tape, Value logits, const Tensor& labels) {
  const int n = tape.value(logits).rows;
  if (n < 1) throw TensorError("fragment loss needs at least one fragment");
  return tape.scale(bce_sum(tape, logits, labels), 1.0 / n);
}

Value loss_topo(Tape& tape, Value logits, const Tensor& bits) {
  const Tensor& L = tape.value(logits);
  if (L.size() < 1) throw TensorError("topology loss needs at least one bit");
  return tape.scale(bce_sum(tape, logits, bits), 1.0 / L.size());
}

Value loss_scaf(Tape& tape, Value logits21,
                const std::vector<ScaffoldTargets>& targets) {
  const Tensor& L = tape.value(logits21);
  if (L.cols != 21)
    throw TensorError("scaffold head must produce 21 logit columns");
  const int b = L.rows;
  if (b < 1 || static_cast<int>(targets.size()) != b)
    throw TensorError("scaffold targets do not match the batch");

  Tensor ring_onehot(b, 9), aro_onehot(b, 9), flags(b, 3);
  for (int i = 0; i < b; ++i) {
    ring_onehot.at(i, std::min(targets[i].ring_class, 8)) = 1.0;
    aro_onehot.at(i, std::min(targets[i].aromatic_ring_class, 8)) = 1.0;
    flags.at(i, 0) = targets[i].fused ? 1.0 : 0.0;
    flags.at(i, 1) = targets[i].heterocyclic ? 1.0 : 0.0;
    flags.at(i, 2) = targets[i].bridged ? 1.0 : 0.0;
  }

  auto count_ce = [&](Value slice, const Tensor& onehot) {
    Value lse = tape.row_log_sum_exp(slice);
    Value picked = tape.sum(tape.mul(slice, tape.input(onehot)));
    return tape.scale(tape.sub(tape.sum(lse), picked), 1.0 / b);
  };
  Value ring = count_ce(tape.slice_cols(logits21, 0, 9), ring_onehot);
  Value aro = count_ce(tape.slice_cols(logits21, 9, 18), aro_onehot);
  Value bin = tape.scale(
      bce_sum(tape, tape.slice_cols(logits21, 18, 21), flags),
      1.0 / (3.0 * b));
  return tape.add(tape.add(ring, aro), bin);
}

Value loss_total(Tape& tape, const LossTerms& terms, const LossWeights& w) {
  w.validate();
  Value acc = tape.input(Tensor::zeros(1, 1));
  if (terms.ab) acc = tape.add(acc, tape.scale(*terms.ab, w.lambda_ab));
  if (terms.frag) acc = tape.add(acc, tape.scale(*terms.frag, w.lambda_frag));
  if (terms.topo) acc = tape.add(acc, tape.scale(*terms.topo, w.lambda_topo));
  if (terms.scaf) acc = tape.add(acc, tape.scale(*terms.scaf, w.lambda_scaf));
  return acc;
}

}  // namespace chg
