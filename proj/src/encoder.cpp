//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/encoder.hpp"

#include <cmath>
#include <utility>

#include "chg/error.hpp"

namespace chg {

namespace {

Tensor xavier(int in_dim, int out_dim, Rng& rng) {
  Tensor t(in_dim, out_dim);
  const double limit = std::sqrt(6.0 / (in_dim + out_dim));
  for (auto& x : t.data) x = (2.0 * rng.next_double() - 1.0) * limit;
  return t;
}

Parameter linear_w(const std::string& name, int in_dim, int out_dim,
                   Rng& rng) {
  return Parameter(name, xavier(in_dim, out_dim, rng));
}

Parameter zeros_p(const std::string& name, int r, int c) {
  return Parameter(name, Tensor::zeros(r, c));
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers < 1) throw TensorError("encoder needs at least one layer");
  if (hidden < 8) throw TensorError("encoder hidden width must be >= 8");
  if (dropout < 0.0 || dropout >= 1.0)
    throw TensorError("dropout rate must be in [0, 1)");
  if (input_dim < 1) throw TensorError("input feature width must be >= 1");
  if (proj_dim < 1) throw TensorError("projection width must be >= 1");
  if (frag_classes < 1) throw TensorError("fragment class count must be >= 1");
  if (fp_bits < 1) throw TensorError("fingerprint width must be >= 1");
}

CHGBatch make_batch(const std::vector<const CHGraph*>& graphs) {
  if (graphs.empty()) throw GraphError("cannot batch zero graphs");
  CHGBatch b;
  b.variant = graphs[0]->variant;
  b.n_graphs = static_cast<int>(graphs.size());

  int total = 0;
  for (const CHGraph* g : graphs) {
    if (g->variant != b.variant)
      throw GraphError("cannot batch mixed graph variants");
    total += g->num_nodes();
  }
  b.total_nodes = total;
  b.features = Tensor(total, kFeatureDim);

  int off = 0;
  for (int gi = 0; gi < b.n_graphs; ++gi) {
    const CHGraph& g = *graphs[gi];
    for (int n = 0; n < g.num_nodes(); ++n)
      for (int j = 0; j < kFeatureDim; ++j)
        b.features.at(off + n, j) = g.features[n][j];

    for (const auto& [i, j] : g.all_edges()) {
      b.edge_src.push_back(off + i);
      b.edge_dst.push_back(off + j);
      b.edge_src.push_back(off + j);
      b.edge_dst.push_back(off + i);
    }

    for (int a = 0; a < g.n_atoms; ++a) {
      b.atom_rows.push_back(off + a);
      b.atom_graph.push_back(gi);
    }
    for (int k = 0; k < g.n_bonds; ++k) {
      b.bond_rows.push_back(off + g.bond_offset() + k);
      b.bond_graph.push_back(gi);
    }
    for (int f = 0; f < g.n_frags; ++f) {
      b.frag_rows.push_back(off + g.frag_offset() + f);
      b.frag_graph.push_back(gi);
    }
    b.graph_rows.push_back(g.has_graph_node ? off + g.graph_index() : -1);

    for (int f = 0; f < g.n_frags; ++f) {
      const auto& atoms = g.frag_atom_members[f];
      if (atoms.size() < 2) continue;  // single-atom fragments have no views
      CHGBatch::FragmentView view;
      view.graph = gi;
      view.frag_row = off + g.frag_offset() + f;
      for (int a : atoms) view.atom_rows.push_back(off + a);
      // Bond membership is only addressable when bond nodes exist.
      if (g.n_bonds > 0) {
        for (int k : g.frag_bond_members[f])
          view.bond_rows.push_back(off + g.bond_offset() + k);
      }
      b.views.push_back(std::move(view));
    }
    off += g.num_nodes();
  }
  return b;
}

EncoderParams::EncoderParams(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const int h = cfg_.hidden;
  embed_w = linear_w("embed.w", cfg_.input_dim, h, rng);
  embed_b = zeros_p("embed.b", 1, h);
  gin.resize(static_cast<std::size_t>(cfg_.layers));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = "gin" + std::to_string(l) + ".";
    GinLayer& L = gin[l];
    L.w1 = linear_w(p + "w1", h, h, rng);
    L.b1 = zeros_p(p + "b1", 1, h);
    L.w2 = linear_w(p + "w2", h, h, rng);
    L.b2 = zeros_p(p + "b2", 1, h);
    L.eps = zeros_p(p + "eps", 1, 1);
    if (cfg_.affine_norm) {
      L.gamma = Parameter(p + "gamma", Tensor::full(1, h, 1.0));
      L.beta = zeros_p(p + "beta", 1, h);
    }
  }
  proj_w1 = linear_w("proj.w1", h, h, rng);
  proj_b1 = zeros_p("proj.b1", 1, h);
  proj_w2 = linear_w("proj.w2", h, cfg_.proj_dim, rng);
  proj_b2 = zeros_p("proj.b2", 1, cfg_.proj_dim);
  if (cfg_.separate_view_heads) {
    projb_w1 = linear_w("projb.w1", h, h, rng);
    projb_b1 = zeros_p("projb.b1", 1, h);
    projb_w2 = linear_w("projb.w2", h, cfg_.proj_dim, rng);
    projb_b2 = zeros_p("projb.b2", 1, cfg_.proj_dim);
  }
  frag_w = linear_w("frag.w", h, cfg_.frag_classes, rng);
  frag_b = zeros_p("frag.b", 1, cfg_.frag_classes);
  topo_w = linear_w("topo.w", h, cfg_.fp_bits, rng);
  topo_b = zeros_p("topo.b", 1, cfg_.fp_bits);
  scaf_w = linear_w("scaf.w", h, 21, rng);
  scaf_b = zeros_p("scaf.b", 1, 21);
}

std::vector<Parameter*> EncoderParams::all() {
  std::vector<Parameter*> out{&embed_w, &embed_b};
  for (auto& L : gin) {
    out.push_back(&L.w1);
    out.push_back(&L.b1);
    out.push_back(&L.w2);
    out.push_back(&L.b2);
    out.push_back(&L.eps);
    if (cfg_.affine_norm) {
      out.push_back(&L.gamma);
      out.push_back(&L.beta);
    }
  }
  out.push_back(&proj_w1);
  out.push_back(&proj_b1);
  out.push_back(&proj_w2);
  out.push_back(&proj_b2);
  if (cfg_.separate_view_heads) {
    out.push_back(&projb_w1);
    out.push_back(&projb_b1);
    out.push_back(&projb_w2);
    out.push_back(&projb_b2);
  }
  out.push_back(&frag_w);
  out.push_back(&frag_b);
  out.push_back(&topo_w);
  out.push_back(&topo_b);
  out.push_back(&scaf_w);
  out.push_back(&scaf_b);
  return out;
}

Value encode(Tape& tape, const CHGBatch& batch, EncoderParams& params,
             bool train, Rng& rng) {
  const EncoderConfig& cfg = params.config();
  if (batch.features.cols != cfg.input_dim)
    throw TensorError("batch feature width differs from encoder input width");

  Value h = tape.add_rowvec(
      tape.matmul(tape.input(batch.features), tape.param(params.embed_w)),
      tape.param(params.embed_b));

  Value jk{-1};
  for (int l = 0; l < cfg.layers; ++l) {
    EncoderParams::GinLayer& L = params.gin[l];
    // (1+eps)h + sum of neighbor rows over the union edge set.
    Value self = tape.add(h, tape.mul_scalar(h, tape.param(L.eps)));
    Value z;
    if (batch.edge_src.empty()) {
      z = self;  // no edges anywhere: aggregation contributes zero
    } else {
      Value agg = tape.segment_sum(tape.gather_rows(h, batch.edge_src),
                                   batch.edge_dst, batch.total_nodes);
      z = tape.add(self, agg);
    }
    z = tape.add_rowvec(tape.matmul(z, tape.param(L.w1)), tape.param(L.b1));
    z = tape.relu(z);
    z = tape.add_rowvec(tape.matmul(z, tape.param(L.w2)), tape.param(L.b2));
    if (cfg.affine_norm) {
      // Rows scaled to unit RMS, then a learnable affine map.
      Value unit = tape.scale(tape.l2_normalize_rows(z),
                              std::sqrt(static_cast<double>(cfg.hidden)));
      z = tape.add_rowvec(tape.mul_rowvec(unit, tape.param(L.gamma)),
                          tape.param(L.beta));
    }
    if (train && cfg.dropout > 0.0) z = tape.dropout(z, cfg.dropout, rng);
    h = z;
    jk = l == 0 ? h : tape.add(jk, h);
  }
  return jk;
}

Value pool_rows(Tape& tape, Value emb, const std::vector<int>& rows,
                const std::vector<int>& row_graph, int n_graphs) {
  if (rows.empty()) {
    // No members of this type anywhere in the batch: zero pool per graph.
    return tape.input(Tensor::zeros(n_graphs, tape.value(emb).cols));
  }
  return tape.segment_mean(tape.gather_rows(emb, rows), row_graph, n_graphs);
}

Value project_view(Tape& tape, EncoderParams& params, Value x,
                   bool bond_view) {
  const bool own = bond_view && params.config().separate_view_heads;
  Parameter& w1 = own ? params.projb_w1 : params.proj_w1;
  Parameter& b1 = own ? params.projb_b1 : params.proj_b1;
  Parameter& w2 = own ? params.projb_w2 : params.proj_w2;
  Parameter& b2 = own ? params.projb_b2 : params.proj_b2;
  Value hdn = tape.relu(
      tape.add_rowvec(tape.matmul(x, tape.param(w1)), tape.param(b1)));
  return tape.add_rowvec(tape.matmul(hdn, tape.param(w2)), tape.param(b2));
}

Value predict_frag(Tape& tape, EncoderParams& params, Value x) {
  return tape.add_rowvec(tape.matmul(x, tape.param(params.frag_w)),
                         tape.param(params.frag_b));
}

Value predict_topo(Tape& tape, EncoderParams& params, Value x) {
  return tape.add_rowvec(tape.matmul(x, tape.param(params.topo_w)),
                         tape.param(params.topo_b));
}

Value predict_scaffold(Tape& tape, EncoderParams& params, Value x) {
  return tape.add_rowvec(tape.matmul(x, tape.param(params.scaf_w)),
                         tape.param(params.scaf_b));
}

void save_params(EncoderParams& params, Checkpoint& ckpt) {
  for (Parameter* p : params.all()) ckpt.add_tensor(p->name, p->value);
}

void load_params(EncoderParams& params, const Checkpoint& ckpt) {
  for (Parameter* p : params.all()) {
    const Tensor* t = ckpt.find_tensor(p->name);
    if (t == nullptr)
      throw IoError("checkpoint is missing tensor " + p->name);
    if (t->rows != p->value.rows || t->cols != p->value.cols)
      throw TensorError("checkpoint tensor " + p->name +
                        " has a different shape");
    p->value = *t;
  }
}

}  // namespace chg
