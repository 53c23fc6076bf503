//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "chg/error.hpp"
#include "chg/perception.hpp"
#include "chg/rng.hpp"
#include "chg/smiles.hpp"

namespace chg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

FunctionalGroupSet functional_groups_for(const RunConfig& cfg) {
  if (cfg.fg_file.empty()) return default_functional_groups();
  return load_functional_groups(cfg.fg_file);
}

MoleculeData preprocess_molecule(const std::string& smiles,
                                 const FragmentVocab& vocab,
                                 const FunctionalGroupSet& fgs,
                                 const RunConfig& cfg) {
  const Molecule mol = parse_smiles(smiles);
  const PerceivedMolecule pm = perceive(mol);
  const Decomposition decomp =
      vocab.size() > 0 ? decompose(mol, vocab)
                       : whole_component_decomposition(mol);

  MoleculeData out;
  out.graph = build_chg(pm, decomp, cfg.graph_variant);

  // Label rows must mirror the fragment views the batcher will emit, so they
  // are driven by the fragments the graph actually materialized.
  std::vector<std::vector<int>> rows;
  for (const auto& atoms : out.graph.frag_atom_members) {
    if (atoms.size() < 2) continue;
    rows.push_back(match_groups(pm, atoms, fgs));
  }
  out.frag_labels = Tensor(static_cast<int>(rows.size()), fgs.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < fgs.size(); ++c)
      out.frag_labels.at(static_cast<int>(r), c) = rows[r][static_cast<std::size_t>(c)];

  const std::vector<int> bits = topo_fingerprint(pm, cfg.fp_bits);
  out.fp.assign(bits.begin(), bits.end());
  out.scaffold = scaffold_targets(pm);
  return out;
}

std::vector<MoleculeData> preprocess(const Dataset& ds,
                                     const FragmentVocab& vocab,
                                     const RunConfig& cfg) {
  const FunctionalGroupSet fgs = functional_groups_for(cfg);
  std::vector<MoleculeData> out(ds.size());
  const int workers = std::max(
      1, std::min(cfg.threads, static_cast<int>(ds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < ds.size(); ++i)
      out[i] = preprocess_molecule(ds.records[i].smiles, vocab, fgs, cfg);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < ds.size();
             i += static_cast<std::size_t>(workers))
          out[i] = preprocess_molecule(ds.records[i].smiles, vocab, fgs, cfg);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing cache.

namespace {

void put_u64(std::string& s, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  s.append(b, 8);
}

void put_i32(std::string& s, int v) {
  char b[4];
  std::memcpy(b, &v, 4);
  s.append(b, 4);
}

void put_f64(std::string& s, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  s.append(b, 8);
}

void put_str(std::string& s, const std::string& v) {
  put_u64(s, v.size());
  s.append(v);
}

void put_pairs(std::string& s, const std::vector<std::pair<int, int>>& v) {
  put_u64(s, v.size());
  for (const auto& [a, b] : v) {
    put_i32(s, a);
    put_i32(s, b);
  }
}

void put_ints(std::string& s, const std::vector<int>& v) {
  put_u64(s, v.size());
  for (int x : v) put_i32(s, x);
}

struct CacheReader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw IoError("cache file truncated");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  int i32() {
    need(4);
    int v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string v(buf.data() + pos, n);
    pos += n;
    return v;
  }
  std::vector<std::pair<int, int>> pairs() {
    const std::uint64_t n = u64();
    std::vector<std::pair<int, int>> v;
    v.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const int a = i32();
      const int b = i32();
      v.emplace_back(a, b);
    }
    return v;
  }
  std::vector<int> ints() {
    const std::uint64_t n = u64();
    std::vector<int> v;
    v.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(i32());
    return v;
  }
};

void put_molecule(std::string& s, const MoleculeData& md) {
  const CHGraph& g = md.graph;
  put_i32(s, static_cast<int>(g.variant));
  put_i32(s, g.n_atoms);
  put_i32(s, g.n_bonds);
  put_i32(s, g.n_frags);
  put_i32(s, g.has_graph_node ? 1 : 0);
  put_pairs(s, g.e_a);
  put_pairs(s, g.e_b);
  put_pairs(s, g.e_f);
  put_pairs(s, g.e_af);
  put_pairs(s, g.e_bf);
  put_pairs(s, g.e_fg);
  put_u64(s, g.features.size());
  for (const auto& row : g.features)
    for (double v : row) put_f64(s, v);
  put_u64(s, g.frag_atom_members.size());
  for (const auto& m : g.frag_atom_members) put_ints(s, m);
  put_u64(s, g.frag_bond_members.size());
  for (const auto& m : g.frag_bond_members) put_ints(s, m);

  put_i32(s, md.frag_labels.rows);
  put_i32(s, md.frag_labels.cols);
  for (double v : md.frag_labels.data) put_f64(s, v);
  put_u64(s, md.fp.size());
  for (std::uint8_t b : md.fp) s.push_back(static_cast<char>(b));
  put_i32(s, md.scaffold.ring_class);
  put_i32(s, md.scaffold.aromatic_ring_class);
  put_i32(s, md.scaffold.fused ? 1 : 0);
  put_i32(s, md.scaffold.heterocyclic ? 1 : 0);
  put_i32(s, md.scaffold.bridged ? 1 : 0);
}

MoleculeData read_molecule(CacheReader& r) {
  MoleculeData md;
  CHGraph& g = md.graph;
  g.variant = static_cast<GraphVariant>(r.i32());
  g.n_atoms = r.i32();
  g.n_bonds = r.i32();
  g.n_frags = r.i32();
  g.has_graph_node = r.i32() != 0;
  g.e_a = r.pairs();
  g.e_b = r.pairs();
  g.e_f = r.pairs();
  g.e_af = r.pairs();
  g.e_bf = r.pairs();
  g.e_fg = r.pairs();
  const std::uint64_t n_rows = r.u64();
  g.features.resize(n_rows);
  for (auto& row : g.features)
    for (double& v : row) v = r.f64();
  g.frag_atom_members.resize(r.u64());
  for (auto& m : g.frag_atom_members) m = r.ints();
  g.frag_bond_members.resize(r.u64());
  for (auto& m : g.frag_bond_members) m = r.ints();

  const int lr = r.i32();
  const int lc = r.i32();
  md.frag_labels = Tensor(lr, lc);
  for (double& v : md.frag_labels.data) v = r.f64();
  const std::uint64_t fpn = r.u64();
  r.need(fpn);
  md.fp.resize(fpn);
  for (std::uint64_t i = 0; i < fpn; ++i)
    md.fp[i] = static_cast<std::uint8_t>(r.buf[r.pos++]);
  md.scaffold.ring_class = r.i32();
  md.scaffold.aromatic_ring_class = r.i32();
  md.scaffold.fused = r.i32() != 0;
  md.scaffold.heterocyclic = r.i32() != 0;
  md.scaffold.bridged = r.i32() != 0;
  return md;
}

constexpr char kCacheMagic[] = "CHGCACHE1";

}  // namespace

void save_cache(const std::string& path, std::uint64_t corpus_hash,
                std::uint64_t vocab_hash, std::uint64_t preprocess_hash,
                const FragmentVocab& vocab,
                const std::vector<MoleculeData>& mols) {
  std::string s;
  s.append(kCacheMagic, sizeof(kCacheMagic) - 1);
  put_u64(s, corpus_hash);
  put_u64(s, vocab_hash);
  put_u64(s, preprocess_hash);
  put_str(s, vocab_to_string(vocab));
  put_u64(s, mols.size());
  for (const auto& md : mols) put_molecule(s, md);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache: " + tmp);
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw IoError("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move cache into place: " + path);
}

CacheContents load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  const std::string buf = os.str();
  if (buf.size() < sizeof(kCacheMagic) - 1 ||
      buf.compare(0, sizeof(kCacheMagic) - 1, kCacheMagic) != 0)
    throw IoError("not a cache file: " + path);

  CacheReader r{buf, sizeof(kCacheMagic) - 1};
  CacheContents out;
  out.corpus_hash = r.u64();
  out.vocab_hash = r.u64();
  out.preprocess_hash = r.u64();
  out.vocab = vocab_from_string(r.str());
  const std::uint64_t n = r.u64();
  out.mols.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.mols.push_back(read_molecule(r));
  return out;
}

// ---------------------------------------------------------------------------
// Batch assembly and losses.

TrainBatch assemble_batch(const std::vector<const MoleculeData*>& mols) {
  if (mols.empty()) throw GraphError("empty batch");
  TrainBatch batch;
  std::vector<const CHGraph*> graphs;
  graphs.reserve(mols.size());
  for (const auto* md : mols) graphs.push_back(&md->graph);
  batch.graphs = make_batch(graphs);

  int total_views = 0;
  const int classes = mols[0]->frag_labels.cols;
  for (const auto* md : mols) total_views += md->frag_labels.rows;
  if (total_views != static_cast<int>(batch.graphs.views.size()))
    throw GraphError("fragment label rows do not match batch views");
  batch.frag_labels = Tensor(total_views, classes);
  int row = 0;
  for (const auto* md : mols) {
    if (md->frag_labels.cols != classes)
      throw GraphError("inconsistent functional-group label width in batch");
    for (int r = 0; r < md->frag_labels.rows; ++r, ++row)
      for (int c = 0; c < classes; ++c)
        batch.frag_labels.at(row, c) = md->frag_labels.at(r, c);
  }

  if (!mols[0]->fp.empty()) {
    const int d = static_cast<int>(mols[0]->fp.size());
    batch.fp_bits = Tensor(static_cast<int>(mols.size()), d);
    for (std::size_t g = 0; g < mols.size(); ++g) {
      if (static_cast<int>(mols[g]->fp.size()) != d)
        throw GraphError("inconsistent fingerprint width in batch");
      for (int c = 0; c < d; ++c)
        batch.fp_bits.at(static_cast<int>(g), c) = mols[g]->fp[static_cast<std::size_t>(c)];
    }
  }
  for (const auto* md : mols) batch.scaffolds.push_back(md->scaffold);
  return batch;
}

Value batch_losses(Tape& tape, const TrainBatch& batch, EncoderParams& params,
                   const RunConfig& cfg, bool train, Rng& rng,
                   LossReport* report) {
  const LossWeights w = cfg.effective_weights();
  const Value emb = encode(tape, batch.graphs, params, train, rng);

  LossTerms terms;
  const bool has_graph_node = !batch.graphs.graph_rows.empty() &&
                              batch.graphs.graph_rows[0] >= 0;

  if (w.lambda_ab > 0.0) {
    const FragmentViewVectors views =
        fragment_views(tape, emb, batch.graphs, params);
    if (views.count > 0) terms.ab = loss_ab(tape, views.za, views.zb, w.tau);
  }
  if (w.lambda_frag > 0.0 && !batch.graphs.views.empty()) {
    std::vector<int> frag_rows;
    frag_rows.reserve(batch.graphs.views.size());
    for (const auto& v : batch.graphs.views) frag_rows.push_back(v.frag_row);
    const Value logits =
        predict_frag(tape, params, tape.gather_rows(emb, frag_rows));
    terms.frag = loss_frag(tape, logits, batch.frag_labels);
  }
  if (w.lambda_topo > 0.0 && has_graph_node && batch.fp_bits.size() > 0) {
    const Value logits = predict_topo(
        tape, params, tape.gather_rows(emb, batch.graphs.graph_rows));
    terms.topo = loss_topo(tape, logits, batch.fp_bits);
  }
  if (w.lambda_scaf > 0.0 && has_graph_node) {
    const Value logits = predict_scaffold(
        tape, params, tape.gather_rows(emb, batch.graphs.graph_rows));
    terms.scaf = loss_scaf(tape, logits, batch.scaffolds);
  }

  const Value total = loss_total(tape, terms, w);
  if (report) {
    report->ab = terms.ab ? tape.value(*terms.ab).data[0] : kNaN;
    report->frag = terms.frag ? tape.value(*terms.frag).data[0] : kNaN;
    report->topo = terms.topo ? tape.value(*terms.topo).data[0] : kNaN;
    report->scaf = terms.scaf ? tape.value(*terms.scaf).data[0] : kNaN;
    report->total = tape.value(total).data[0];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Pretraining.

namespace {

void add_optimizer_state(Checkpoint& ckpt, const AdamState& state) {
  ckpt.set_meta("adam_step", state.step);
  for (const auto& [name, t] : state.m) ckpt.add_tensor("adam.m." + name, t);
  for (const auto& [name, t] : state.v) ckpt.add_tensor("adam.v." + name, t);
}

void restore_optimizer_state(const Checkpoint& ckpt, EncoderParams& params,
                             AdamState& state) {
  state.step = ckpt.meta_value("adam_step");
  for (Parameter* p : params.all()) {
    const Tensor* m = ckpt.find_tensor("adam.m." + p->name);
    const Tensor* v = ckpt.find_tensor("adam.v." + p->name);
    if (!m || !v)
      throw IoError("checkpoint lacks optimizer state for " + p->name);
    state.m.emplace_back(p->name, *m);
    state.v.emplace_back(p->name, *v);
  }
}

std::string loss_csv_header() {
  return "epoch,loss_ab,loss_frag,loss_topo,loss_scaf,loss_total";
}

std::string loss_csv_row(const EpochLosses& e) {
  std::ostringstream os;
  os << e.epoch << ',' << fmt(e.mean.ab) << ',' << fmt(e.mean.frag) << ','
     << fmt(e.mean.topo) << ',' << fmt(e.mean.scaf) << ','
     << fmt(e.mean.total);
  return os.str();
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& cfg, const FragmentVocab& vocab,
                           EncoderParams& params) {
  Checkpoint ckpt;
  ckpt.config_hash = cfg.hash();
  ckpt.set_text("config", serialize_config(cfg));
  ckpt.set_text("vocab", vocab_to_string(vocab));
  save_params(params, ckpt);
  return ckpt;
}

PretrainResult pretrain(const std::vector<MoleculeData>& mols,
                        const FragmentVocab& vocab, const RunConfig& cfg,
                        const std::string& out_path,
                        const std::string& resume_from, std::ostream* log) {
  cfg.validate();
  if (mols.empty()) throw DataError("pretrain: no molecules");

  // One RNG stream drives init, shuffling, and dropout; its counter is
  // checkpointed so a resumed run continues the exact same draw sequence.
  Rng rng(cfg.seed);
  EncoderParams params(cfg.encoder_config(), rng);
  AdamState adam;
  int start_epoch = 0;

  if (!resume_from.empty()) {
    const Checkpoint ckpt = load_checkpoint(resume_from);
    if (ckpt.config_hash != cfg.hash())
      throw DataError("resume checkpoint was trained under a different config");
    load_params(params, ckpt);
    restore_optimizer_state(ckpt, params, adam);
    start_epoch = static_cast<int>(ckpt.meta_value("epoch"));
    rng.set_counter(
        static_cast<std::uint64_t>(ckpt.meta_value("rng_counter")));
  }

  PretrainResult result;
  std::ostringstream csv;
  csv << loss_csv_header() << '\n';

  double best_total = std::numeric_limits<double>::infinity();

  const auto parameters = params.all();
  for (int epoch = start_epoch + 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    // Each epoch shuffles a fresh identity order so the permutation depends
    // only on the generator counter, keeping resumed runs bit-exact.
    std::vector<int> order(mols.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    double sums[5] = {0, 0, 0, 0, 0};
    long long counts[5] = {0, 0, 0, 0, 0};
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.pretrain_batch)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(cfg.pretrain_batch));
      std::vector<const MoleculeData*> picks;
      picks.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        picks.push_back(&mols[static_cast<std::size_t>(order[i])]);
      const TrainBatch batch = assemble_batch(picks);

      Tape tape;
      LossReport rep;
      const Value total =
          batch_losses(tape, batch, params, cfg, true, rng, &rep);
      zero_grads(parameters);
      tape.backward(total);
      adam_step(adam, cfg.adam_config(), parameters);

      const double vals[5] = {rep.ab, rep.frag, rep.topo, rep.scaf,
                              rep.total};
      for (int k = 0; k < 5; ++k) {
        if (std::isnan(vals[k])) continue;
        sums[k] += vals[k];
        ++counts[k];
      }
    }

    EpochLosses e;
    e.epoch = epoch;
    double* fields[5] = {&e.mean.ab, &e.mean.frag, &e.mean.topo, &e.mean.scaf,
                         &e.mean.total};
    for (int k = 0; k < 5; ++k)
      *fields[k] = counts[k] > 0 ? sums[k] / static_cast<double>(counts[k])
                                 : kNaN;
    result.epochs.push_back(e);
    csv << loss_csv_row(e) << '\n';
    if (log) *log << loss_csv_row(e) << std::endl;

    Checkpoint ckpt = make_checkpoint(cfg, vocab, params);
    ckpt.set_meta("epoch", epoch);
    ckpt.set_meta("rng_counter", static_cast<long long>(rng.counter()));
    add_optimizer_state(ckpt, adam);
    save_checkpoint(ckpt, out_path);
    if (e.mean.total < best_total) {
      best_total = e.mean.total;
      result.best_epoch = epoch;
      save_checkpoint(ckpt, out_path + ".best");
    }
  }

  result.csv = csv.str();
  if (result.epochs.empty())
    throw DataError("pretrain: no epochs to run (already complete?)");
  return result;
}

// ---------------------------------------------------------------------------
// Readout and finetuning.

Value readout(Tape& tape, Value emb, const CHGBatch& batch) {
  std::vector<Value> parts;
  parts.push_back(pool_rows(tape, emb, batch.atom_rows, batch.atom_graph,
                            batch.n_graphs));
  if (batch.variant == GraphVariant::kChg)
    parts.push_back(pool_rows(tape, emb, batch.bond_rows, batch.bond_graph,
                              batch.n_graphs));
  if (batch.variant != GraphVariant::kAtomGraph) {
    parts.push_back(pool_rows(tape, emb, batch.frag_rows, batch.frag_graph,
                              batch.n_graphs));
    parts.push_back(tape.gather_rows(emb, batch.graph_rows));
  }
  if (parts.size() == 1) return parts[0];
  return tape.concat_cols(parts);
}

int readout_dim(const RunConfig& cfg) {
  switch (cfg.graph_variant) {
    case GraphVariant::kAtomGraph: return cfg.hidden;
    case GraphVariant::kHierGraph: return 3 * cfg.hidden;
    case GraphVariant::kChg: return 4 * cfg.hidden;
  }
  return 4 * cfg.hidden;
}

namespace {

// Labels with NaN replaced by zero, plus the 0/1 presence mask.
void masked_labels(const Dataset& ds, const std::vector<int>& rows,
                   Tensor* labels, Tensor* mask) {
  const int t = ds.n_tasks();
  *labels = Tensor(static_cast<int>(rows.size()), t);
  *mask = Tensor(static_cast<int>(rows.size()), t);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Record& rec = ds.records[static_cast<std::size_t>(rows[r])];
    for (int c = 0; c < t; ++c) {
      const double v = rec.labels[static_cast<std::size_t>(c)];
      if (std::isnan(v)) continue;
      labels->at(static_cast<int>(r), c) = v;
      mask->at(static_cast<int>(r), c) = 1.0;
    }
  }
}

// Masked supervised loss on logits: BCE-with-logits for classification,
// squared error for regression; mean over present labels.
Value supervised_loss(Tape& tape, Value logits, const Tensor& labels,
                      const Tensor& mask, TaskKind task) {
  double present = 0.0;
  for (double m : mask.data) present += m;
  if (present == 0.0)
    throw DataError("batch has no observed labels");
  const Value y = tape.input(labels);
  const Value m = tape.input(mask);
  Value per;
  if (task == TaskKind::kClassify) {
    per = tape.sub(tape.softplus(logits), tape.mul(logits, y));
  } else {
    const Value diff = tape.sub(logits, y);
    per = tape.mul(diff, diff);
  }
  return tape.scale(tape.sum(tape.mul(per, m)), 1.0 / present);
}

struct HeadModel {
  Parameter w, b;
  HeadModel(int in_dim, int tasks, Rng& rng) : w("head.w", Tensor(in_dim, tasks)), b("head.b", Tensor::zeros(1, tasks)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + tasks));
    for (double& v : w.value.data)
      v = (2.0 * rng.next_double() - 1.0) * limit;
  }
};

Value head_forward(Tape& tape, HeadModel& head, Value features) {
  return tape.add_rowvec(tape.matmul(features, tape.param(head.w)),
                         tape.param(head.b));
}

// Eval-mode predictions for the given dataset rows, in row order.
std::vector<std::vector<double>> predict_rows(
    const std::vector<int>& rows,
    const std::vector<MoleculeData>& mols, EncoderParams& params,
    HeadModel& head, int batch_size) {
  std::vector<std::vector<double>> preds;
  preds.reserve(rows.size());
  Rng unused(0);
  for (std::size_t begin = 0; begin < rows.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(rows.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<const MoleculeData*> picks;
    for (std::size_t i = begin; i < end; ++i)
      picks.push_back(&mols[static_cast<std::size_t>(rows[i])]);
    const TrainBatch batch = assemble_batch(picks);
    Tape tape;
    const Value emb = encode(tape, batch.graphs, params, false, unused);
    const Value logits = head_forward(tape, head, readout(tape, emb, batch.graphs));
    const Tensor& out = tape.value(logits);
    for (int r = 0; r < out.rows; ++r) {
      std::vector<double> row(static_cast<std::size_t>(out.cols));
      for (int c = 0; c < out.cols; ++c)
        row[static_cast<std::size_t>(c)] = out.at(r, c);
      preds.push_back(std::move(row));
    }
  }
  return preds;
}

// Validation/test metric for predictions against dataset rows.
FinetuneResult score_predictions(const Dataset& ds,
                                 const std::vector<int>& rows,
                                 const std::vector<std::vector<double>>& preds,
                                 TaskKind task) {
  FinetuneResult out;
  if (task == TaskKind::kClassify) {
    std::vector<std::vector<double>> labels;
    labels.reserve(rows.size());
    for (int r : rows)
      labels.push_back(ds.records[static_cast<std::size_t>(r)].labels);
    const AucReport rep = multi_task_auc(preds, labels);
    out.metric_name = "roc_auc";
    out.test_metric = rep.mean;
    out.used_tasks = rep.used_tasks;
    out.skipped_tasks = rep.skipped_tasks;
    out.per_task = rep.per_task;
  } else {
    std::vector<double> p, y;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Record& rec = ds.records[static_cast<std::size_t>(rows[i])];
      for (std::size_t c = 0; c < rec.labels.size(); ++c) {
        if (std::isnan(rec.labels[c])) continue;
        p.push_back(preds[i][c]);
        y.push_back(rec.labels[c]);
      }
    }
    out.metric_name = "rmse";
    out.test_metric = rmse(p, y);
    out.used_tasks = ds.n_tasks();
  }
  return out;
}

std::vector<Tensor> snapshot(const std::vector<Parameter*>& ps) {
  std::vector<Tensor> out;
  out.reserve(ps.size());
  for (const Parameter* p : ps) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& ps,
             const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = snap[i];
}

}  // namespace

FinetuneResult finetune(const Dataset& ds, const RunConfig& cfg,
                        const FragmentVocab& vocab, const Checkpoint* init,
                        std::uint64_t seed, const std::string& out_ckpt,
                        std::ostream* log) {
  cfg.validate();
  if (ds.n_tasks() < 1)
    throw DataError("finetune: dataset has no label columns");
  if (cfg.task == TaskKind::kRegress && ds.n_tasks() != 1)
    throw DataError("finetune: regression expects exactly one label column");

  SplitSpec spec;
  spec.seed = seed;
  const SplitIndices parts = split(ds.size(), spec);

  RunConfig run = cfg;
  run.seed = seed;

  // Same draw order with and without a warm start: construction always
  // consumes the init draws, then the head takes the next ones, so the two
  // arms share their head initialization for a given seed.
  Rng rng(seed);
  EncoderParams params(run.encoder_config(), rng);
  if (init) load_params(params, *init);
  HeadModel head(readout_dim(run), ds.n_tasks(), rng);

  const std::vector<MoleculeData> mols = preprocess(ds, vocab, run);

  std::vector<Parameter*> parameters = params.all();
  parameters.push_back(&head.w);
  parameters.push_back(&head.b);
  AdamState adam;

  const bool maximize = run.task == TaskKind::kClassify;
  double best_metric = maximize ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  std::vector<Tensor> best_params;

  std::vector<int> order = parts.train;
  for (int epoch = 1; epoch <= run.finetune_epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    long long steps = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(run.finetune_batch)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(run.finetune_batch));
      const std::vector<int> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                  order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<const MoleculeData*> picks;
      for (int r : rows) picks.push_back(&mols[static_cast<std::size_t>(r)]);
      const TrainBatch batch = assemble_batch(picks);
      Tensor labels, mask;
      masked_labels(ds, rows, &labels, &mask);
      bool any = false;
      for (double m : mask.data) any = any || m > 0.0;
      if (!any) continue;  // every label in this batch is missing

      Tape tape;
      const Value emb = encode(tape, batch.graphs, params, true, rng);
      const Value logits =
          head_forward(tape, head, readout(tape, emb, batch.graphs));
      const Value loss =
          supervised_loss(tape, logits, labels, mask, run.task);
      zero_grads(parameters);
      tape.backward(loss);
      adam_step(adam, run.adam_config(), parameters);
      loss_sum += tape.value(loss).data[0];
      ++steps;
    }

    // Validation selection; ties keep the earlier epoch.
    double val;
    try {
      const auto preds = predict_rows(parts.valid, mols, params, head,
                                      run.finetune_batch);
      val = score_predictions(ds, parts.valid, preds, run.task).test_metric;
    } catch (const SingleClassError&) {
      val = maximize ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const bool improved = maximize ? val > best_metric : val < best_metric;
    if (improved) {
      best_metric = val;
      best_epoch = epoch;
      best_params = snapshot(parameters);
    }
    if (log)
      *log << "epoch " << epoch << " train_loss "
           << fmt(steps ? loss_sum / static_cast<double>(steps) : kNaN)
           << " val " << fmt(val) << std::endl;
  }

  if (best_params.empty()) {
    best_params = snapshot(parameters);
    best_epoch = run.finetune_epochs;
  }
  restore(parameters, best_params);

  const auto preds =
      predict_rows(parts.test, mols, params, head, run.finetune_batch);
  FinetuneResult result = score_predictions(ds, parts.test, preds, run.task);
  result.best_epoch = best_epoch;
  result.val_metric = best_metric;

  if (!out_ckpt.empty()) {
    Checkpoint ckpt = make_checkpoint(run, vocab, params);
    ckpt.add_tensor(head.w.name, head.w.value);
    ckpt.add_tensor(head.b.name, head.b.value);
    ckpt.set_meta("best_epoch", best_epoch);
    ckpt.set_meta("n_tasks", ds.n_tasks());
    save_checkpoint(ckpt, out_ckpt);
  }
  return result;
}

FinetuneResult evaluate(const Dataset& ds, const RunConfig& cfg,
                        const Checkpoint& ckpt) {
  cfg.validate();
  const Tensor* head_w = ckpt.find_tensor("head.w");
  const Tensor* head_b = ckpt.find_tensor("head.b");
  if (!head_w || !head_b)
    throw DataError("checkpoint has no prediction head; finetune first");
  if (head_w->cols != ds.n_tasks())
    throw DataError("label arity mismatch: head predicts " +
                    std::to_string(head_w->cols) + " tasks, dataset has " +
                    std::to_string(ds.n_tasks()));
  if (head_w->rows != readout_dim(cfg))
    throw DataError("checkpoint head expects readout width " +
                    std::to_string(head_w->rows) + ", config gives " +
                    std::to_string(readout_dim(cfg)));

  Rng rng(cfg.seed);
  EncoderParams params(cfg.encoder_config(), rng);
  load_params(params, ckpt);
  HeadModel head(readout_dim(cfg), ds.n_tasks(), rng);
  head.w.value = *head_w;
  head.b.value = *head_b;

  const std::string* vocab_text = ckpt.find_text("vocab");
  const FragmentVocab vocab =
      vocab_text ? vocab_from_string(*vocab_text) : FragmentVocab{};
  const std::vector<MoleculeData> mols = preprocess(ds, vocab, cfg);

  std::vector<int> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto preds =
      predict_rows(rows, mols, params, head, cfg.finetune_batch);
  return score_predictions(ds, rows, preds, cfg.task);
}

// ---------------------------------------------------------------------------
// Embedding export.

std::string scaffold_frame(const Molecule& m) {
  std::vector<bool> alive(static_cast<std::size_t>(m.num_atoms()), true);
  bool changed = true;
  while (changed) {
    changed = false;
    // Degrees over surviving atoms only.
    std::vector<int> deg(static_cast<std::size_t>(m.num_atoms()), 0);
    for (const Bond& b : m.bonds)
      if (alive[static_cast<std::size_t>(b.begin)] &&
          alive[static_cast<std::size_t>(b.end)]) {
        ++deg[static_cast<std::size_t>(b.begin)];
        ++deg[static_cast<std::size_t>(b.end)];
      }
    for (int a = 0; a < m.num_atoms(); ++a) {
      if (alive[static_cast<std::size_t>(a)] &&
          deg[static_cast<std::size_t>(a)] <= 1) {
        alive[static_cast<std::size_t>(a)] = false;
        changed = true;
      }
    }
  }
  std::vector<int> kept;
  for (int a = 0; a < m.num_atoms(); ++a)
    if (alive[static_cast<std::size_t>(a)]) kept.push_back(a);
  if (kept.empty()) return "";
  return canonical_form(induced_subgraph(m, kept));
}

namespace {

const char* bond_type_name(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return "single";
    case BondOrder::kDouble: return "double";
    case BondOrder::kTriple: return "triple";
    case BondOrder::kAromatic: return "aromatic";
  }
  return "single";
}

void append_row(std::ostringstream& os, const std::string& id,
                const std::string& key, const Tensor& emb, int row) {
  os << id << ',' << key;
  for (int c = 0; c < emb.cols; ++c) os << ',' << fmt(emb.at(row, c));
  os << '\n';
}

}  // namespace

std::string export_embeddings(const Dataset& ds, const RunConfig& cfg,
                              const FragmentVocab& vocab,
                              EncoderParams& params,
                              const std::string& level) {
  cfg.validate();
  if (level != "graph" && level != "fragment" && level != "bond")
    throw DataError("embedding level must be graph|fragment|bond, got '" +
                    level + "'");
  if (level == "bond" && cfg.graph_variant != GraphVariant::kChg)
    throw GraphError("bond embeddings require the full graph variant");
  if (level == "fragment" && cfg.graph_variant == GraphVariant::kAtomGraph)
    throw GraphError("fragment embeddings require fragment nodes");

  const FunctionalGroupSet fgs = functional_groups_for(cfg);
  const std::vector<MoleculeData> mols = preprocess(ds, vocab, cfg);

  std::ostringstream os;
  os << "id,key";
  for (int c = 0; c < cfg.hidden; ++c) os << ",c" << c;
  os << '\n';

  Rng unused(0);
  for (std::size_t i = 0; i < mols.size(); ++i) {
    const Molecule mol = parse_smiles(ds.records[i].smiles);
    std::vector<const MoleculeData*> one{&mols[i]};
    const TrainBatch batch = assemble_batch(one);
    Tape tape;
    const Value v = encode(tape, batch.graphs, params, false, unused);
    const Tensor& emb = tape.value(v);
    const CHGraph& g = mols[i].graph;

    if (level == "graph") {
      std::string key = scaffold_frame(mol);
      if (key.empty()) key = "acyclic";
      const int row = g.has_graph_node ? g.graph_index() : -1;
      if (row >= 0) {
        append_row(os, std::to_string(i), key, emb, row);
      } else {
        // Atom variant: fall back to the pooled atom mean.
        const Value pooled =
            pool_rows(tape, v, batch.graphs.atom_rows,
                      batch.graphs.atom_graph, batch.graphs.n_graphs);
        append_row(os, std::to_string(i), key, tape.value(pooled), 0);
      }
    } else if (level == "fragment") {
      const PerceivedMolecule pm = perceive(mol);
      for (int f = 0; f < g.n_frags; ++f) {
        const std::vector<int>& atoms =
            g.frag_atom_members[static_cast<std::size_t>(f)];
        if (atoms.size() < 2) continue;
        const std::vector<int> bits = match_groups(pm, atoms, fgs);
        for (std::size_t c = 0; c < bits.size(); ++c) {
          if (!bits[c]) continue;
          append_row(os, std::to_string(i) + "." + std::to_string(f),
                     fgs.patterns[c].name, emb, g.frag_offset() + f);
        }
      }
    } else {  // bond
      for (int b = 0; b < g.n_bonds; ++b)
        append_row(os, std::to_string(i) + "." + std::to_string(b),
                   bond_type_name(mol.bonds[static_cast<std::size_t>(b)].order),
                   emb, g.bond_offset() + b);
    }
  }
  return os.str();
}

}  // namespace chg
