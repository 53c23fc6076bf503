//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Release gate: nine timed checks covering graph construction, objective
// gradients, loss closed forms, rewriting invariance, the pretraining smoke
// run, transfer finetuning, the study launch matrix, cluster quality
// metrics, and the evaluation metric oracles. Each check prints exactly one
// PASS/FAIL line; the exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chg/checkpoint.hpp"
#include "chg/error.hpp"
#include "chg/chgraph.hpp"
#include "chg/config.hpp"
#include "chg/dataset.hpp"
#include "chg/encoder.hpp"
#include "chg/labels.hpp"
#include "chg/metrics.hpp"
#include "chg/objectives.hpp"
#include "chg/perception.hpp"
#include "chg/rng.hpp"
#include "chg/smiles.hpp"
#include "chg/tensor.hpp"
#include "chg/train.hpp"
#include "chg/vocab.hpp"

namespace {

using namespace chg;

// One criterion's outcome. The first failed requirement wins; `note` is
// appended to a PASS line so the evidence (timings, deltas) stays visible.
struct Check {
  bool pass = true;
  std::string fail_why;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      fail_why = what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// State carried between criteria: the pretraining corpus, the smoke-run
// artifacts, and a scratch directory for checkpoints.
struct Shared {
  std::string data_dir;
  std::string tmp_dir;
  Dataset corpus;
  bool have_corpus = false;

  RunConfig smoke_cfg;
  FragmentVocab smoke_vocab;
  Checkpoint smoke_ckpt;
  bool have_smoke = false;
};

// ---------------------------------------------------------------------------
// Criterion 1: CHG construction on a fixed 50-molecule roster. The bond-node
// edge count must equal the shared-atom closed form sum(C(deg, 2)) on every
// molecule, and four hand-enumerated graphs must match node and edge counts
// exactly.

const std::vector<std::string>& roster50() {
  static const std::vector<std::string> mols = {
      "C",
      "CC",
      "CCC",
      "CCCC",
      "CC(C)C",
      "CC(C)(C)C",
      "CCO",
      "C=C",
      "C#C",
      "c1ccccc1",
      "Cc1ccccc1",
      "Oc1ccccc1",
      "Nc1ccccc1",
      "c1ccncc1",
      "c1ccc2ccccc2c1",
      "C1CC1",
      "C1CCC1",
      "C1CCCC1",
      "C1CCCCC1",
      "C1CCOC1",
      "C1CCNCC1",
      "CC(=O)O",
      "CC(C)=O",
      "CC=O",
      "OC=O",
      "CN",
      "CNC",
      "CN(C)C",
      "CN(C)C=O",
      "CC#N",
      "C[N+](=O)[O-]",
      "CS",
      "CS(=O)C",
      "CS(=O)(=O)C",
      "ClC(Cl)Cl",
      "FC(F)(F)F",
      "CCBr",
      "NCC(=O)O",
      "CC(N)C(=O)O",
      "OCC(O)CO",
      "OCCO",
      "CCOCC",
      "COC(C)=O",
      "O=Cc1ccccc1",
      "OC(=O)c1ccccc1",
      "C=Cc1ccccc1",
      "COc1ccccc1",
      "c1ccoc1",
      "c1ccsc1",
      "c1cncnc1",
  };
  return mols;
}

long long choose2_degree_sum(const Molecule& m) {
  std::vector<int> deg(m.atoms.size(), 0);
  for (const auto& b : m.bonds) {
    ++deg[static_cast<std::size_t>(b.begin)];
    ++deg[static_cast<std::size_t>(b.end)];
  }
  long long total = 0;
  for (int d : deg) total += static_cast<long long>(d) * (d - 1) / 2;
  return total;
}

void criterion_graph_construction(Check& c, Shared&) {
  const auto& roster = roster50();
  c.require(roster.size() == 50, "roster must hold exactly 50 molecules");

  for (const auto& smiles : roster) {
    const Molecule m = parse_smiles(smiles);
    const PerceivedMolecule pm = perceive(m);
    const CHGraph g =
        build_chg(pm, whole_component_decomposition(m), GraphVariant::kChg);
    const long long want = choose2_degree_sum(m);
    c.require(static_cast<long long>(g.e_b.size()) == want,
              smiles + ": bond-graph edges " + std::to_string(g.e_b.size()) +
                  " != shared-atom sum " + std::to_string(want));
  }

  // Hand enumerations. methane: 1 atom + 1 fragment + graph node, the only
  // edges are atom->fragment and fragment->graph.
  struct HandCase {
    const char* smiles;
    int nodes, edges;
    std::size_t e_a, e_b, e_af, e_bf, e_fg;
  };
  const HandCase cases[] = {
      {"C", 3, 2, 0, 0, 1, 0, 1},
      {"CCO", 7, 9, 2, 1, 3, 2, 1},
      {"CCC", 7, 9, 2, 1, 3, 2, 1},
      {"c1ccccc1", 14, 25, 6, 6, 6, 6, 1},
  };
  for (const auto& hc : cases) {
    const Molecule m = parse_smiles(hc.smiles);
    const CHGraph g = build_chg(perceive(m), whole_component_decomposition(m),
                                GraphVariant::kChg);
    const std::string tag = std::string(hc.smiles) + ": ";
    c.require(g.num_nodes() == hc.nodes,
              tag + "nodes " + std::to_string(g.num_nodes()) + " != " +
                  std::to_string(hc.nodes));
    c.require(g.all_edges().size() == static_cast<std::size_t>(hc.edges),
              tag + "edges " + std::to_string(g.all_edges().size()) + " != " +
                  std::to_string(hc.edges));
    c.require(g.e_a.size() == hc.e_a, tag + "atom-atom edge count");
    c.require(g.e_b.size() == hc.e_b, tag + "bond-bond edge count");
    c.require(g.e_af.size() == hc.e_af, tag + "atom-fragment edge count");
    c.require(g.e_bf.size() == hc.e_bf, tag + "bond-fragment edge count");
    c.require(g.e_fg.size() == hc.e_fg, tag + "fragment-graph edge count");
    c.require(g.e_f.empty(), tag + "single fragment must have no e_f");
  }

  // Three atoms connected A-B-C carry bonds e1(A,B) and e2(B,C); in the bond
  // graph those bonds become two nodes joined by one edge through the shared
  // middle atom.
  const Molecule abc = parse_smiles("CCC");
  const auto bg = build_bond_graph(abc);
  c.require(bg.size() == 1, "A-B-C bond graph must have exactly one edge");
  if (bg.size() == 1) {
    const Bond& e1 = abc.bonds[static_cast<std::size_t>(bg[0].first)];
    const Bond& e2 = abc.bonds[static_cast<std::size_t>(bg[0].second)];
    const bool share_middle = e1.connects(1) && e2.connects(1);
    std::set<int> endpoints = {e1.begin, e1.end, e2.begin, e2.end};
    c.require(share_middle && endpoints.size() == 3,
              "A-B-C bond-graph edge must join bonds sharing the middle atom");
  }

  c.note = "50 molecules, 4 hand enumerations, A-B-C bond graph";
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic gradients against central finite differences for
// each objective in isolation and for the weighted total, on 20 randomized
// two-molecule batches, in double precision with dropout off.

void criterion_gradients(Check& c, Shared& sh) {
  c.require(sh.have_corpus, "pretraining corpus unavailable");
  if (!c.pass) return;

  // Small molecules keep the finite-difference loop fast; two or more bonds
  // guarantee every objective has live terms.
  std::vector<std::string> pool;
  for (const auto& rec : sh.corpus.records) {
    Molecule m;
    try {
      m = parse_smiles(rec.smiles);
    } catch (const chg::Error&) {
      continue;
    }
    if (m.atoms.size() >= 3 && m.atoms.size() <= 12 && m.bonds.size() >= 2) {
      pool.push_back(rec.smiles);
    }
  }
  c.require(pool.size() >= 40, "need at least 40 small corpus molecules");
  if (!c.pass) return;
  Rng pick(123);
  shuffle(pool, pick);

  struct Iso {
    const char* name;
    double ab, frag, topo, scaf;
  };
  const Iso isolations[] = {
      {"loss_ab", 1.0, 0.0, 0.0, 0.0},   {"loss_frag", 0.0, 1.0, 0.0, 0.0},
      {"loss_topo", 0.0, 0.0, 1.0, 0.0}, {"loss_scaf", 0.0, 0.0, 0.0, 1.0},
      {"loss_total", 0.2, 0.4, 0.4, 0.4},
  };

  const FunctionalGroupSet& fgs = default_functional_groups();
  const FragmentVocab no_vocab;
  double max_rel = 0.0;
  long long checked = 0;

  for (int b = 0; b < 20; ++b) {
    RunConfig cfg;
    cfg.hidden = 8;
    cfg.layers = 1 + (b % 2);
    cfg.dropout = 0.0;
    cfg.proj_dim = 4;
    cfg.fp_bits = 64;
    cfg.tau = 0.1;

    std::vector<MoleculeData> md;
    for (int k = 0; k < 2; ++k) {
      md.push_back(preprocess_molecule(pool[static_cast<std::size_t>(2 * b + k)],
                                       no_vocab, fgs, cfg));
    }
    std::vector<const MoleculeData*> ptrs = {&md[0], &md[1]};
    const TrainBatch batch = assemble_batch(ptrs);

    for (const Iso& iso : isolations) {
      RunConfig run = cfg;
      run.lambda_ab = iso.ab;
      run.lambda_frag = iso.frag;
      run.lambda_topo = iso.topo;
      run.lambda_scaf = iso.scaf;

      Rng init(1000 + static_cast<std::uint64_t>(b));
      EncoderParams params(run.encoder_config(), init);
      const auto all = params.all();

      auto forward = [&]() {
        Tape tape;
        Rng unused(0);
        Value total =
            batch_losses(tape, batch, params, run, true, unused, nullptr);
        return tape.value(total).at(0, 0);
      };

      Tape tape;
      Rng unused(0);
      Value total =
          batch_losses(tape, batch, params, run, true, unused, nullptr);
      c.require(std::isfinite(tape.value(total).at(0, 0)),
                std::string(iso.name) + ": non-finite loss");
      zero_grads(all);
      tape.backward(total);

      for (Parameter* p : all) {
        const int n = p->value.size();
        const int stride = std::max(1, n / 3);
        for (int flat = 0; flat < n; flat += stride) {
          const int r = flat / p->value.cols;
          const int col = flat % p->value.cols;
          const double analytic = p->grad.at(r, col);
          const double numeric = numeric_derivative(p->value, r, col, forward);
          // Floor of 1 keeps central-difference roundoff on near-zero
          // entries from masquerading as relative error.
          const double rel = std::fabs(analytic - numeric) /
                             std::max({std::fabs(analytic),
                                       std::fabs(numeric), 1.0});
          max_rel = std::max(max_rel, rel);
          ++checked;
          if (rel >= 1e-4) {
            c.require(false, std::string(iso.name) + " " + p->name + "[" +
                                 std::to_string(r) + "," +
                                 std::to_string(col) + "]: analytic " +
                                 fmt(analytic) + " vs numeric " +
                                 fmt(numeric));
          }
        }
      }
    }
  }

  c.require(checked >= 1000, "too few gradient entries sampled");
  c.note = "20 batches, " + std::to_string(checked) +
           " entries, max rel err " + fmt(max_rel);
}

// ---------------------------------------------------------------------------
// Criterion 3: closed forms. A one-pair contrastive batch scores zero, an
// all-zero-logit Bernoulli head costs ln 2 per bit, a uniform 9-way softmax
// costs ln 9 per class head, and the orthogonal two-pair contrastive batch
// at unit temperature costs log(1 + e^-1).

void criterion_closed_forms(Check& c, Shared&) {
  const double ln2 = std::log(2.0);
  const double ln9 = std::log(9.0);

  {
    Tape t;
    Value za = t.input(Tensor::from(1, 3, {0.3, -0.2, 0.9}));
    Value zb = t.input(Tensor::from(1, 3, {-1.0, 0.4, 0.2}));
    Value l = loss_ab(t, za, zb, 0.1);
    c.require(t.value(l).at(0, 0) == 0.0,
              "single-pair contrastive loss must be exactly zero");
  }
  {
    Tape t;
    Value logits = t.input(Tensor::zeros(2, 8));
    Value l = loss_topo(t, logits, Tensor::from(2, 8, {1, 0, 1, 1, 0, 0, 1, 0,
                                                       0, 1, 0, 1, 1, 0, 0, 1}));
    c.require(std::fabs(t.value(l).at(0, 0) - ln2) < 1e-12,
              "zero-logit Bernoulli loss must be ln 2 per bit");
  }
  {
    Tape t;
    Value logits = t.input(Tensor::zeros(1, 21));
    ScaffoldTargets targets;
    targets.ring_class = 4;
    targets.aromatic_ring_class = 2;
    targets.fused = true;
    targets.heterocyclic = false;
    targets.bridged = true;
    Value l = loss_scaf(t, logits, {targets});
    c.require(std::fabs(t.value(l).at(0, 0) - (2.0 * ln9 + ln2)) < 1e-9,
              "uniform scaffold head must cost 2 ln 9 + ln 2");
  }
  {
    Tape t;
    Value za = t.input(Tensor::from(2, 2, {1, 0, 0, 1}));
    Value zb = t.input(Tensor::from(2, 2, {1, 0, 0, 1}));
    Value l = loss_ab(t, za, zb, 1.0);
    const double want = std::log1p(std::exp(-1.0));
    c.require(std::fabs(t.value(l).at(0, 0) - want) < 1e-9,
              "orthogonal two-pair batch at tau=1 must cost log(1+e^-1)");
  }
  c.note = "ln2 / ln9 / log(1+e^-1) forms exact";
}

// ---------------------------------------------------------------------------
// Criterion 4: randomized rewriting invariance. Every derived artifact of a
// molecule (canonical form, fingerprint, scaffold descriptors, per-type CHG
// feature multisets, eval-mode encoder output multisets) must be independent
// of the textual atom order.

std::vector<std::vector<double>> sorted_rows(const Tensor& t, int begin,
                                             int end) {
  std::vector<std::vector<double>> rows;
  for (int r = begin; r < end; ++r) {
    std::vector<double> row(static_cast<std::size_t>(t.cols));
    for (int col = 0; col < t.cols; ++col) {
      row[static_cast<std::size_t>(col)] = t.at(r, col);
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::vector<double>> sorted_feature_rows(const CHGraph& g,
                                                     int begin, int end) {
  std::vector<std::vector<double>> rows;
  for (int r = begin; r < end; ++r) {
    rows.emplace_back(g.features[static_cast<std::size_t>(r)].begin(),
                      g.features[static_cast<std::size_t>(r)].end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

bool rows_close(const std::vector<std::vector<double>>& a,
                const std::vector<std::vector<double>>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      if (std::fabs(a[i][j] - b[i][j]) > tol) return false;
    }
  }
  return true;
}

struct MolArtifacts {
  std::string canonical;
  std::vector<int> fp;
  ScaffoldTargets scaffold;
  std::string frame;
  std::vector<std::vector<double>> atom_feats, bond_feats, frag_feats,
      graph_feats;
  std::vector<std::vector<double>> emb_rows;
};

MolArtifacts artifacts_for(const std::string& smiles, EncoderParams& params) {
  const Molecule m = parse_smiles(smiles);
  const PerceivedMolecule pm = perceive(m);
  MolArtifacts out;
  out.canonical = canonical_form(m);
  out.fp = topo_fingerprint(pm, 2048);
  out.scaffold = scaffold_targets(pm);
  out.frame = scaffold_frame(m);

  const CHGraph g =
      build_chg(pm, whole_component_decomposition(m), GraphVariant::kChg);
  out.atom_feats = sorted_feature_rows(g, 0, g.n_atoms);
  out.bond_feats = sorted_feature_rows(g, g.bond_offset(), g.frag_offset());
  out.frag_feats = sorted_feature_rows(g, g.frag_offset(), g.graph_index());
  out.graph_feats = sorted_feature_rows(g, g.graph_index(), g.num_nodes());

  const CHGBatch batch = make_batch({&g});
  Tape tape;
  Rng unused(0);
  Value emb = encode(tape, batch, params, false, unused);
  const Tensor& e = tape.value(emb);
  out.emb_rows = sorted_rows(e, 0, e.rows);
  return out;
}

void criterion_rewriting_invariance(Check& c, Shared& sh) {
  c.require(sh.have_corpus, "pretraining corpus unavailable");
  if (!c.pass) return;

  std::vector<std::string> mols;
  int skip = 0;
  for (const auto& rec : sh.corpus.records) {
    if (mols.size() == 30) break;
    Molecule m;
    try {
      m = parse_smiles(rec.smiles);
    } catch (const chg::Error&) {
      continue;
    }
    if (m.atoms.size() < 4) continue;
    // Every fifth eligible record keeps the subset spread across the corpus
    // families instead of clustering at the front.
    if (skip++ % 5 != 0) continue;
    mols.push_back(rec.smiles);
  }
  c.require(mols.size() == 30, "need 30 corpus molecules with 4+ atoms");
  if (!c.pass) return;

  RunConfig cfg;
  cfg.hidden = 16;
  cfg.layers = 2;
  cfg.dropout = 0.0;
  cfg.proj_dim = 8;
  cfg.fp_bits = 64;
  Rng init(77);
  EncoderParams params(cfg.encoder_config(), init);

  int failures = 0;
  std::string first_bad;
  for (const auto& smiles : mols) {
    const MolArtifacts ref = artifacts_for(smiles, params);
    const Molecule m = parse_smiles(smiles);
    for (std::uint64_t s = 40; s < 45; ++s) {
      const std::string rewritten = random_rewrite(m, s);
      const MolArtifacts got = artifacts_for(rewritten, params);
      std::string why;
      if (got.canonical != ref.canonical) {
        why = "canonical form";
      } else if (got.fp != ref.fp) {
        why = "fingerprint";
      } else if (got.scaffold.ring_class != ref.scaffold.ring_class ||
                 got.scaffold.aromatic_ring_class !=
                     ref.scaffold.aromatic_ring_class ||
                 got.scaffold.fused != ref.scaffold.fused ||
                 got.scaffold.heterocyclic != ref.scaffold.heterocyclic ||
                 got.scaffold.bridged != ref.scaffold.bridged) {
        why = "scaffold descriptors";
      } else if (got.frame != ref.frame) {
        why = "scaffold frame";
      } else if (!rows_close(got.atom_feats, ref.atom_feats, 1e-12) ||
                 !rows_close(got.bond_feats, ref.bond_feats, 1e-12) ||
                 !rows_close(got.frag_feats, ref.frag_feats, 1e-12) ||
                 !rows_close(got.graph_feats, ref.graph_feats, 1e-12)) {
        why = "feature multisets";
      } else if (!rows_close(got.emb_rows, ref.emb_rows, 1e-9)) {
        why = "encoder output multisets";
      }
      if (!why.empty()) {
        ++failures;
        if (first_bad.empty()) {
          first_bad = smiles + " -> " + rewritten + ": " + why + " changed";
        }
      }
    }
  }
  c.require(failures == 0,
            std::to_string(failures) + " rewriting failures; first: " +
                first_bad);
  c.note = "30 molecules x 5 rewritings, all artifacts stable";
}

// ---------------------------------------------------------------------------
// Criterion 5: pretraining smoke run. 500 molecules, vocabulary 100, hidden
// 64, 3 layers, 20 epochs, batch 64: every objective and the weighted total
// must end below their first-epoch values, and two runs with one seed must
// produce byte-identical loss curves.

void criterion_smoke_run(Check& c, Shared& sh) {
  c.require(sh.have_corpus, "pretraining corpus unavailable");
  if (!c.pass) return;
  c.require(sh.corpus.size() == 500, "corpus must hold 500 molecules");

  RunConfig cfg;
  cfg.seed = 0;
  cfg.vocab_size = 100;
  cfg.hidden = 64;
  cfg.layers = 3;
  cfg.pretrain_epochs = 20;
  cfg.pretrain_batch = 64;
  cfg.threads = 1;

  std::vector<Molecule> parsed;
  for (const auto& rec : sh.corpus.records) {
    parsed.push_back(parse_smiles(rec.smiles));
  }
  const FragmentVocab vocab = build_vocab(parsed, cfg.vocab_size, cfg.seed);
  c.require(static_cast<int>(vocab.entries().size()) == 100,
            "vocabulary must reach 100 entries");

  const std::vector<MoleculeData> mols = preprocess(sh.corpus, vocab, cfg);
  const std::string out1 = sh.tmp_dir + "/smoke.ckpt";
  const std::string out2 = sh.tmp_dir + "/smoke_rerun.ckpt";
  const PretrainResult r1 = pretrain(mols, vocab, cfg, out1);
  const PretrainResult r2 = pretrain(mols, vocab, cfg, out2);

  c.require(r1.csv == r2.csv, "two runs with one seed must match exactly");
  c.require(r1.epochs.size() == 20, "run must report 20 epochs");
  if (!c.pass) return;

  const LossReport& first = r1.epochs.front().mean;
  const LossReport& last = r1.epochs.back().mean;
  struct Field {
    const char* name;
    double LossReport::*member;
  };
  const Field fields[] = {{"ab", &LossReport::ab},
                          {"frag", &LossReport::frag},
                          {"topo", &LossReport::topo},
                          {"scaf", &LossReport::scaf},
                          {"total", &LossReport::total}};
  for (const Field& f : fields) {
    const double e1 = first.*(f.member);
    const double e20 = last.*(f.member);
    c.require(std::isfinite(e1) && std::isfinite(e20),
              std::string(f.name) + ": non-finite epoch mean");
    c.require(e20 < e1, std::string(f.name) + ": epoch 20 mean " + fmt(e20) +
                            " not below epoch 1 mean " + fmt(e1));
  }

  sh.smoke_cfg = cfg;
  sh.smoke_vocab = vocab;
  sh.smoke_ckpt = load_checkpoint(out1);
  sh.have_smoke = true;
  c.note = "total " + fmt(first.total) + " -> " + fmt(last.total) +
           ", curves deterministic";
}

// ---------------------------------------------------------------------------
// Criterion 6: transfer. Finetuning the smoke checkpoint on the bundled
// carbonyl task must hold a mean test ROC-AUC over five seeds that is
// non-inferior (margin 0.01) to the same finetune from random init.

void criterion_transfer(Check& c, Shared& sh) {
  c.require(sh.have_smoke, "smoke checkpoint unavailable");
  if (!c.pass) return;

  const Dataset toy = load_csv(sh.data_dir + "/toy_carbonyl_400.csv");
  c.require(toy.size() == 400, "toy task must hold 400 molecules");
  c.require(toy.n_tasks() == 1, "toy task must have one label column");
  if (!c.pass) return;

  RunConfig cfg = sh.smoke_cfg;
  cfg.task = TaskKind::kClassify;
  cfg.finetune_epochs = 20;
  cfg.finetune_batch = 32;

  double warm_sum = 0.0, cold_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FinetuneResult warm =
        finetune(toy, cfg, sh.smoke_vocab, &sh.smoke_ckpt, seed);
    const FinetuneResult cold =
        finetune(toy, cfg, sh.smoke_vocab, nullptr, seed);
    c.require(warm.metric_name == "roc_auc", "classification metric name");
    warm_sum += warm.test_metric;
    cold_sum += cold.test_metric;
  }
  const double warm_mean = warm_sum / 5.0;
  const double cold_mean = cold_sum / 5.0;
  const double diff = warm_mean - cold_mean;
  c.require(warm_mean >= cold_mean - 0.01,
            "pretrained mean " + fmt(warm_mean) +
                " inferior to random-init mean " + fmt(cold_mean));
  c.note = "pretrained " + fmt(warm_mean) + " vs random " + fmt(cold_mean) +
           " (diff " + fmt(diff) + ")";
}

// ---------------------------------------------------------------------------
// Criterion 7: launch matrix. The three graph variants and the six loss
// study presets must all be reachable from config text alone, and a dry run
// must confirm each variant's edge-set cardinalities and active-loss list.

void criterion_launch_matrix(Check& c, Shared& sh) {
  c.require(sh.have_corpus, "pretraining corpus unavailable");
  if (!c.pass) return;

  // Graph variants from config text.
  c.require(parse_config("graph_variant=atom").graph_variant ==
                GraphVariant::kAtomGraph,
            "graph_variant=atom must parse");
  c.require(parse_config("graph_variant=hier").graph_variant ==
                GraphVariant::kHierGraph,
            "graph_variant=hier must parse");
  c.require(parse_config("graph_variant=chg").graph_variant ==
                GraphVariant::kChg,
            "graph_variant=chg must parse");

  // Loss study presets from config text, each with its active-loss list.
  struct Study {
    const char* text;
    std::vector<std::string> active;
  };
  const Study studies[] = {
      {"", {"ab", "frag", "topo", "scaf"}},
      {"ablation=no_ab", {"frag", "topo", "scaf"}},
      {"ablation=no_frag", {"ab", "topo", "scaf"}},
      {"ablation=no_topo", {"ab", "frag", "scaf"}},
      {"ablation=no_scaf", {"ab", "frag", "topo"}},
      {"ablation=no_graph_level", {"ab", "frag"}},
      {"ablation=no_node_level", {"topo", "scaf"}},
  };
  for (const Study& s : studies) {
    const RunConfig cfg = parse_config(s.text);
    c.require(cfg.active_losses() == s.active,
              std::string("active losses for \"") + s.text + "\"");
  }
  // Variants gate the lists structurally: no bond nodes means no
  // atom-bond contrast, the plain atom graph trains no objective.
  c.require(parse_config("graph_variant=hier").active_losses() ==
                std::vector<std::string>({"frag", "topo", "scaf"}),
            "hier variant must drop the atom-bond contrast");
  c.require(parse_config("graph_variant=atom").active_losses().empty(),
            "atom variant must have no active losses");

  // Dry-run edge cardinalities on a multi-fragment molecule under a mined
  // vocabulary, for each variant.
  std::vector<Molecule> head;
  for (std::size_t i = 0; i < sh.corpus.records.size() && i < 60; ++i) {
    head.push_back(parse_smiles(sh.corpus.records[i].smiles));
  }
  const FragmentVocab vocab = build_vocab(head, 12, 0);

  std::string chosen;
  Decomposition decomp;
  Molecule mol;
  for (const auto& rec : sh.corpus.records) {
    const Molecule m = parse_smiles(rec.smiles);
    const Decomposition d = decompose(m, vocab);
    if (d.fragments.size() < 2) continue;
    bool has_big = false;
    for (const auto& f : d.fragments) has_big |= f.atoms.size() >= 2;
    if (!has_big) continue;
    chosen = rec.smiles;
    mol = m;
    decomp = d;
    break;
  }
  c.require(!chosen.empty(), "no corpus molecule decomposes into 2+ fragments");
  if (!c.pass) return;

  const PerceivedMolecule pm = perceive(mol);
  const int n_atoms = static_cast<int>(mol.atoms.size());
  const int n_bonds = static_cast<int>(mol.bonds.size());
  const int n_frags = static_cast<int>(decomp.fragments.size());

  int in_frag_bonds = 0;
  std::set<std::pair<int, int>> cross_pairs;
  for (const auto& b : mol.bonds) {
    const int fa = decomp.fragment_of[static_cast<std::size_t>(b.begin)];
    const int fb = decomp.fragment_of[static_cast<std::size_t>(b.end)];
    if (fa == fb) {
      ++in_frag_bonds;
    } else {
      cross_pairs.insert({std::min(fa, fb), std::max(fa, fb)});
    }
  }
  const long long bb = choose2_degree_sum(mol);
  const std::string tag = chosen + ": ";

  const CHGraph full = build_chg(pm, decomp, GraphVariant::kChg);
  c.require(full.n_bonds == n_bonds, tag + "chg bond-node count");
  c.require(full.n_frags == n_frags, tag + "chg fragment-node count");
  c.require(full.e_a.size() == static_cast<std::size_t>(n_bonds),
            tag + "chg e_a");
  c.require(full.e_b.size() == static_cast<std::size_t>(bb), tag + "chg e_b");
  c.require(full.e_af.size() == static_cast<std::size_t>(n_atoms),
            tag + "chg e_af");
  c.require(full.e_bf.size() == static_cast<std::size_t>(in_frag_bonds),
            tag + "chg e_bf");
  c.require(full.e_f.size() == cross_pairs.size(), tag + "chg e_f");
  c.require(full.e_fg.size() == static_cast<std::size_t>(n_frags),
            tag + "chg e_fg");

  const CHGraph hier = build_chg(pm, decomp, GraphVariant::kHierGraph);
  // Fragment node ids embed the variant's frag_offset, so cross-variant
  // comparison has to happen in fragment-local coordinates.
  auto local_frag_pairs = [](const CHGraph& g) {
    std::vector<std::pair<int, int>> out;
    for (const auto& [a, b] : g.e_f) {
      out.emplace_back(a - g.frag_offset(), b - g.frag_offset());
    }
    return out;
  };
  c.require(hier.n_bonds == 0, tag + "hier must drop bond nodes");
  c.require(hier.e_b.empty() && hier.e_bf.empty(),
            tag + "hier must drop bond edge sets");
  c.require(hier.e_a == full.e_a, tag + "hier e_a must match chg");
  c.require(local_frag_pairs(hier) == local_frag_pairs(full),
            tag + "hier e_f must match chg");
  c.require(hier.e_fg.size() == full.e_fg.size(),
            tag + "hier e_fg must match chg");
  c.require(hier.e_af.size() == full.e_af.size(), tag + "hier e_af size");

  const CHGraph atom = build_chg(pm, decomp, GraphVariant::kAtomGraph);
  c.require(atom.num_nodes() == n_atoms, tag + "atom variant node count");
  c.require(atom.e_a.size() == static_cast<std::size_t>(n_bonds),
            tag + "atom e_a");
  c.require(atom.e_b.empty() && atom.e_f.empty() && atom.e_af.empty() &&
                atom.e_bf.empty() && atom.e_fg.empty(),
            tag + "atom variant must carry only atom-atom edges");

  c.note = "3 variants + 6 study presets, dry-run on " + chosen;
}

// ---------------------------------------------------------------------------
// Criterion 8: cluster quality metrics against a brute-force reference on
// synthetic Gaussian fixtures, then an end-to-end embed -> metrics pass
// comparing pretrained and random encoders (deltas logged, not asserted).

double ref_distance(const Tensor& x, int i, int j) {
  double s = 0.0;
  for (int c = 0; c < x.cols; ++c) {
    const double d = x.at(i, c) - x.at(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

ClusterMetrics ref_cluster_metrics(const Tensor& x,
                                   const std::vector<int>& groups) {
  std::map<int, std::vector<int>> members;
  for (int i = 0; i < x.rows; ++i) members[groups[static_cast<std::size_t>(i)]].push_back(i);
  const int k = static_cast<int>(members.size());

  std::vector<std::vector<double>> centroids;
  std::vector<double> scatter;
  std::vector<std::vector<int>> idx;
  for (const auto& [gid, rows] : members) {
    (void)gid;
    std::vector<double> cen(static_cast<std::size_t>(x.cols), 0.0);
    for (int r : rows) {
      for (int col = 0; col < x.cols; ++col) {
        cen[static_cast<std::size_t>(col)] += x.at(r, col);
      }
    }
    for (double& v : cen) v /= static_cast<double>(rows.size());
    double s = 0.0;
    for (int r : rows) {
      double d2 = 0.0;
      for (int col = 0; col < x.cols; ++col) {
        const double d = x.at(r, col) - cen[static_cast<std::size_t>(col)];
        d2 += d * d;
      }
      s += std::sqrt(d2);
    }
    centroids.push_back(std::move(cen));
    scatter.push_back(s / static_cast<double>(rows.size()));
    idx.push_back(rows);
  }

  ClusterMetrics out;
  double dbi = 0.0;
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (int col = 0; col < x.cols; ++col) {
        const double d = centroids[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(col)] -
                         centroids[static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(col)];
        d2 += d * d;
      }
      worst = std::max(worst, (scatter[static_cast<std::size_t>(i)] +
                               scatter[static_cast<std::size_t>(j)]) /
                                  std::sqrt(d2));
    }
    dbi += worst;
  }
  out.dbi = dbi / static_cast<double>(k);

  double sil = 0.0;
  for (int gi = 0; gi < k; ++gi) {
    for (int p : idx[static_cast<std::size_t>(gi)]) {
      const std::size_t own = idx[static_cast<std::size_t>(gi)].size();
      double a = 0.0;
      if (own > 1) {
        for (int q : idx[static_cast<std::size_t>(gi)]) {
          if (q != p) a += ref_distance(x, p, q);
        }
        a /= static_cast<double>(own - 1);
      }
      double b = std::numeric_limits<double>::infinity();
      for (int gj = 0; gj < k; ++gj) {
        if (gj == gi) continue;
        double mean = 0.0;
        for (int q : idx[static_cast<std::size_t>(gj)]) {
          mean += ref_distance(x, p, q);
        }
        mean /= static_cast<double>(idx[static_cast<std::size_t>(gj)].size());
        b = std::min(b, mean);
      }
      sil += own > 1 ? (b - a) / std::max(a, b) : 0.0;
    }
  }
  out.silhouette = sil / static_cast<double>(x.rows);
  return out;
}

void criterion_cluster_metrics(Check& c, Shared& sh) {
  // Fixture 1: three well-separated clouds, dim 4, 8 points each.
  {
    Rng rng(5);
    const double centers[3][4] = {
        {0, 0, 0, 0}, {6, 0, 1, 0}, {0, 6, -1, 2}};
    Tensor x(24, 4);
    std::vector<int> groups;
    for (int g = 0; g < 3; ++g) {
      for (int p = 0; p < 8; ++p) {
        const int row = g * 8 + p;
        for (int col = 0; col < 4; ++col) {
          x.at(row, col) = centers[g][col] + 0.5 * rng.next_gaussian();
        }
        groups.push_back(g);
      }
    }
    const ClusterMetrics got = cluster_metrics(x, groups);
    const ClusterMetrics want = ref_cluster_metrics(x, groups);
    c.require(std::fabs(got.dbi - want.dbi) < 1e-9, "fixture 1 DBI mismatch");
    c.require(std::fabs(got.silhouette - want.silhouette) < 1e-9,
              "fixture 1 silhouette mismatch");
  }
  // Fixture 2: four unequal clusters, dim 3, non-contiguous group ids.
  {
    Rng rng(17);
    const double centers[4][3] = {{0, 0, 0}, {4, 4, 0}, {-4, 2, 3}, {1, -5, -2}};
    const int sizes[4] = {5, 7, 9, 6};
    const int ids[4] = {7, 2, 9, 4};
    Tensor x(27, 3);
    std::vector<int> groups;
    int row = 0;
    for (int g = 0; g < 4; ++g) {
      for (int p = 0; p < sizes[g]; ++p, ++row) {
        for (int col = 0; col < 3; ++col) {
          x.at(row, col) = centers[g][col] + 0.8 * rng.next_gaussian();
        }
        groups.push_back(ids[g]);
      }
    }
    const ClusterMetrics got = cluster_metrics(x, groups);
    const ClusterMetrics want = ref_cluster_metrics(x, groups);
    c.require(std::fabs(got.dbi - want.dbi) < 1e-9, "fixture 2 DBI mismatch");
    c.require(std::fabs(got.silhouette - want.silhouette) < 1e-9,
              "fixture 2 silhouette mismatch");
  }

  // End-to-end: embed scaffold-grouped corpus molecules with the smoke
  // encoder and with a random one, score both, log the deltas.
  c.require(sh.have_smoke, "smoke checkpoint unavailable");
  if (!c.pass) return;

  std::map<std::string, std::vector<std::string>> by_key;
  for (const auto& rec : sh.corpus.records) {
    Molecule m;
    try {
      m = parse_smiles(rec.smiles);
    } catch (const chg::Error&) {
      continue;
    }
    const std::string frame = scaffold_frame(m);
    by_key[frame.empty() ? "acyclic" : frame].push_back(rec.smiles);
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> keys(
      by_key.begin(), by_key.end());
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.second.size() != b.second.size()
               ? a.second.size() > b.second.size()
               : a.first < b.first;
  });
  Dataset sub;
  int kept_keys = 0;
  for (const auto& [key, list] : keys) {
    (void)key;
    if (kept_keys == 3 || list.size() < 4) break;
    for (std::size_t i = 0; i < list.size() && i < 8; ++i) {
      sub.records.push_back({list[i], {}});
    }
    ++kept_keys;
  }
  c.require(kept_keys >= 2, "need 2+ scaffold groups with 4+ members");
  if (!c.pass) return;

  auto embed_and_score = [&](EncoderParams& params) {
    const std::string csv = export_embeddings(sub, sh.smoke_cfg,
                                              sh.smoke_vocab, params, "graph");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    std::vector<int> groups;
    std::map<std::string, int> key_ids;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      const auto [it, _] = key_ids.try_emplace(
          cells.at(1), static_cast<int>(key_ids.size()));
      groups.push_back(it->second);
      std::vector<double> row;
      for (std::size_t i = 2; i < cells.size(); ++i) {
        row.push_back(std::stod(cells[i]));
      }
      rows.push_back(std::move(row));
    }
    Tensor points(static_cast<int>(rows.size()),
                  static_cast<int>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t col = 0; col < rows[r].size(); ++col) {
        points.at(static_cast<int>(r), static_cast<int>(col)) = rows[r][col];
      }
    }
    return cluster_metrics(points, groups);
  };

  Rng dummy(sh.smoke_cfg.seed);
  EncoderParams pre(sh.smoke_cfg.encoder_config(), dummy);
  load_params(pre, sh.smoke_ckpt);
  Rng fresh(4242);
  EncoderParams rnd(sh.smoke_cfg.encoder_config(), fresh);

  const ClusterMetrics with_pre = embed_and_score(pre);
  const ClusterMetrics with_rnd = embed_and_score(rnd);
  c.require(std::isfinite(with_pre.dbi) && std::isfinite(with_pre.silhouette),
            "pretrained embedding metrics must be finite");
  c.require(std::isfinite(with_rnd.dbi) && std::isfinite(with_rnd.silhouette),
            "random embedding metrics must be finite");
  c.note = "oracle match 1e-9; pretrained dbi=" + fmt(with_pre.dbi) +
           " sil=" + fmt(with_pre.silhouette) + ", random dbi=" +
           fmt(with_rnd.dbi) + " sil=" + fmt(with_rnd.silhouette);
}

// ---------------------------------------------------------------------------
// Criterion 9: evaluation metric oracles. roc_auc must equal brute-force
// pair counting exactly on 100 random tie-heavy sets, and rmse must hit
// hand-computed values to 1e-12.

double pair_count_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

void criterion_metric_oracles(Check& c, Shared&) {
  Rng rng(2026);
  const double pool[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
  int kept = 0;
  while (kept < 100) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_below(11));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    int positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = pool[rng.next_below(5)];
      labels[i] = static_cast<int>(rng.next_below(2));
      positives += labels[i];
    }
    if (positives == 0 || positives == static_cast<int>(n)) continue;
    ++kept;
    const double got = roc_auc(scores, labels);
    const double want = pair_count_auc(scores, labels);
    c.require(got == want, "set " + std::to_string(kept) + ": roc_auc " +
                               fmt(got) + " != pair counting " + fmt(want));
  }

  c.require(std::fabs(rmse({3.0, 4.0}, {0.0, 0.0}) - std::sqrt(12.5)) < 1e-12,
            "rmse({3,4},{0,0}) must be sqrt(12.5)");
  c.require(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0,
            "rmse of identical vectors must be zero");
  c.require(std::fabs(rmse({1.0, -2.0}, {2.0, 4.0}) - std::sqrt(18.5)) < 1e-12,
            "rmse({1,-2},{2,4}) must be sqrt(18.5)");
  c.require(std::fabs(rmse({0.5}, {0.25}) - 0.25) < 1e-12,
            "rmse({0.5},{0.25}) must be 0.25");
  c.note = "100 tie-heavy sets exact, rmse hand values to 1e-12";
}

}  // namespace

int main() {
  Shared sh;
  sh.data_dir = CHG_TEST_DATA_DIR;
  const auto scratch =
      std::filesystem::temp_directory_path() / "chg_acceptance";
  std::filesystem::create_directories(scratch);
  sh.tmp_dir = scratch.string();

  try {
    sh.corpus = load_csv(sh.data_dir + "/pretrain_500.csv");
    sh.have_corpus = sh.corpus.size() > 0;
  } catch (const std::exception&) {
    sh.have_corpus = false;
  }

  struct Criterion {
    const char* name;
    double budget_s;  // 0 = untimed
    std::function<void(Check&, Shared&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {"graph construction", 1.0, criterion_graph_construction},
      {"objective gradients", 60.0, criterion_gradients},
      {"loss closed forms", 0.0, criterion_closed_forms},
      {"rewriting invariance", 0.0, criterion_rewriting_invariance},
      {"pretraining smoke run", 600.0, criterion_smoke_run},
      {"transfer finetuning", 900.0, criterion_transfer},
      {"variant launch matrix", 0.0, criterion_launch_matrix},
      {"cluster quality metrics", 0.0, criterion_cluster_metrics},
      {"metric oracles", 0.0, criterion_metric_oracles},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Check check;
    try {
      criteria[i].fn(check, sh);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (check.pass && criteria[i].budget_s > 0.0 &&
        secs >= criteria[i].budget_s) {
      check.pass = false;
      check.fail_why = "over the " + fmt(criteria[i].budget_s) +
                       "s time budget";
    }
    if (!check.pass) ++failures;
    std::printf("criterion %zu (%s): %s%s%s [%.1fs]\n", i + 1,
                criteria[i].name, check.pass ? "PASS" : "FAIL",
                check.pass ? (check.note.empty() ? "" : " - ") : " - ",
                check.pass ? check.note.c_str() : check.fail_why.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu of %zu criteria passed\n",
              criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures;
}
