//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/chg.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "chg/checkpoint.hpp"
#include "chg/chgraph.hpp"
#include "chg/config.hpp"
#include "chg/dataset.hpp"
#include "chg/error.hpp"
#include "chg/labels.hpp"
#include "chg/perception.hpp"
#include "chg/smiles.hpp"
#include "chg/train.hpp"
#include "chg/vocab.hpp"

struct chg_config {
  chg::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int code_for(const std::exception& e) {
  if (dynamic_cast<const chg::ParseError*>(&e) ||
      dynamic_cast<const chg::ValenceError*>(&e))
    return CHG_ERR_PARSE;
  if (dynamic_cast<const chg::IoError*>(&e)) return CHG_ERR_IO;
  return CHG_ERR_RUNTIME;
}

// Runs fn, routing any exception into the thread-local error slot.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return CHG_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return code_for(e);
  }
}

template <typename Fn>
char* guarded_string(Fn&& fn) {
  try {
    const std::string text = fn();
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (!out) {
      set_error("out of memory");
      return nullptr;
    }
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

bool require(bool ok, const char* what) {
  if (!ok) set_error(std::string("invalid argument: ") + what);
  return ok;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::uint64_t text_hash(const std::string& s) {
  return chg::fnv1a64(s.data(), s.size());
}

chg::RunConfig config_from_checkpoint(const chg::Checkpoint& ckpt) {
  const std::string* text = ckpt.find_text("config");
  if (!text) throw chg::IoError("checkpoint has no embedded config");
  return chg::parse_config(*text);
}

chg::FragmentVocab vocab_from_checkpoint(const chg::Checkpoint& ckpt) {
  const std::string* text = ckpt.find_text("vocab");
  if (!text) throw chg::IoError("checkpoint has no embedded vocabulary");
  return chg::vocab_from_string(*text);
}

void write_text_file(const std::string& path, const std::string& text) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw chg::IoError("cannot write " + path);
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
  const bool ok = n == text.size() && std::fclose(f) == 0;
  if (!ok) throw chg::IoError("short write to " + path);
}

}  // namespace

extern "C" {

const char* chg_version(void) { return "0.1.0"; }

const char* chg_last_error(void) { return g_last_error.c_str(); }

void chg_string_free(char* s) { std::free(s); }

chg_config* chg_config_new(void) { return new chg_config(); }

chg_config* chg_config_load(const char* path) {
  if (!require(path != nullptr, "path is NULL")) return nullptr;
  try {
    auto* out = new chg_config();
    out->cfg = chg::load_config(path);
    return out;
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

void chg_config_free(chg_config* cfg) { delete cfg; }

int chg_config_set(chg_config* cfg, const char* key, const char* value) {
  if (!require(cfg && key && value, "chg_config_set argument is NULL"))
    return CHG_ERR_INVALID_ARG;
  try {
    chg::apply_override(cfg->cfg, key, value);
    return CHG_OK;
  } catch (const chg::DataError& e) {
    set_error(e.what());
    return CHG_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return CHG_ERR_RUNTIME;
  }
}

int chg_config_apply_file(chg_config* cfg, const char* path) {
  if (!require(cfg && path, "chg_config_apply_file argument is NULL"))
    return CHG_ERR_INVALID_ARG;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw chg::IoError(std::string("cannot read ") + path);
    std::ostringstream text;
    text << in.rdbuf();
    chg::apply_config_text(cfg->cfg, text.str());
  });
}

char* chg_config_dump(const chg_config* cfg) {
  if (!require(cfg != nullptr, "cfg is NULL")) return nullptr;
  return guarded_string([&] { return chg::serialize_config(cfg->cfg); });
}

int chg_vocab_build(const char* corpus_csv, int target_size,
                    const char* out_path) {
  if (!require(corpus_csv && out_path, "chg_vocab_build argument is NULL"))
    return CHG_ERR_INVALID_ARG;
  if (!require(target_size >= 1, "target_size must be >= 1"))
    return CHG_ERR_INVALID_ARG;
  return guarded([&] {
    const chg::Dataset ds = chg::load_csv(corpus_csv);
    std::vector<chg::Molecule> mols;
    mols.reserve(ds.records.size());
    for (const auto& rec : ds.records)
      mols.push_back(chg::parse_smiles(rec.smiles));
    const chg::FragmentVocab vocab = chg::build_vocab(mols, target_size, 0);
    chg::save_vocab(vocab, out_path);
  });
}

int chg_preprocess(const char* corpus_csv, const char* vocab_path,
                   const chg_config* cfg, const char* out_cache) {
  if (!require(corpus_csv && vocab_path && cfg && out_cache,
               "chg_preprocess argument is NULL"))
    return CHG_ERR_INVALID_ARG;
  return guarded([&] {
    const chg::Dataset ds = chg::load_csv(corpus_csv);
    const chg::FragmentVocab vocab = chg::load_vocab(vocab_path);
    const auto mols = chg::preprocess(ds, vocab, cfg->cfg);
    chg::save_cache(out_cache, chg::corpus_hash(ds),
                    text_hash(chg::vocab_to_string(vocab)),
                    cfg->cfg.preprocess_hash(), vocab, mols);
  });
}

int chg_pretrain(const char* cache_path, const chg_config* cfg,
                 const char* out_ckpt, const char* resume_ckpt, int verbose) {
  if (!require(cache_path && cfg && out_ckpt,
               "chg_pretrain argument is NULL"))
    return CHG_ERR_INVALID_ARG;
  return guarded([&] {
    const chg::CacheContents cache = chg::load_cache(cache_path);
    if (cache.preprocess_hash != cfg->cfg.preprocess_hash())
      throw chg::DataError(
          "cache was preprocessed under a different graph configuration; "
          "rerun preprocess");
    const chg::LossWeights w = cfg->cfg.effective_weights();
    if (w.lambda_ab == 0.0 && w.lambda_frag == 0.0 && w.lambda_topo == 0.0 &&
        w.lambda_scaf == 0.0)
      std::cout << "warning: all loss weights are zero; parameters will only "
                   "shrink by weight decay"
                << std::endl;
    const chg::PretrainResult result =
        chg::pretrain(cache.mols, cache.vocab, cfg->cfg, out_ckpt,
                      resume_ckpt ? resume_ckpt : "",
                      verbose ? &std::cout : nullptr);
    write_text_file(std::string(out_ckpt) + ".losses.csv", result.csv);
  });
}

char* chg_finetune(const char* data_csv, const char* init_ckpt,
                   const chg_config* cfg, int seeds,
                   const char* out_ckpt_prefix, int verbose) {
  if (!require(data_csv && cfg, "chg_finetune argument is NULL"))
    return nullptr;
  if (!require(seeds >= 1, "seeds must be >= 1")) return nullptr;
  return guarded_string([&]() -> std::string {
    chg::RunConfig run = cfg->cfg;
    chg::Checkpoint init;
    chg::FragmentVocab vocab;
    const chg::Checkpoint* init_ptr = nullptr;
    if (init_ckpt) {
      init = chg::load_checkpoint(init_ckpt);
      init_ptr = &init;
      vocab = vocab_from_checkpoint(init);
      // The checkpoint owns the architecture and graph recipe; the caller's
      // config keeps every optimization and task field.
      const chg::RunConfig base = config_from_checkpoint(init);
      run.hidden = base.hidden;
      run.layers = base.layers;
      run.proj_dim = base.proj_dim;
      run.fp_bits = base.fp_bits;
      run.frag_classes = base.frag_classes;
      run.graph_variant = base.graph_variant;
      run.affine_norm = base.affine_norm;
      run.separate_view_heads = base.separate_view_heads;
      run.fg_file = base.fg_file;
    }
    const chg::Dataset ds = chg::load_csv(data_csv);

    std::ostringstream report;
    report << "command=finetune\n";
    report << "task=" << chg::to_string(run.task) << "\n";
    report << "seeds=" << seeds << "\n";
    double sum_val = 0.0;
    double sum_test = 0.0;
    std::string metric_name;
    for (int k = 0; k < seeds; ++k) {
      const std::uint64_t seed = run.seed + static_cast<std::uint64_t>(k);
      std::string out_path;
      if (out_ckpt_prefix)
        out_path = std::string(out_ckpt_prefix) + ".seed" +
                   std::to_string(k) + ".ckpt";
      const chg::FinetuneResult r =
          chg::finetune(ds, run, vocab, init_ptr, seed, out_path,
                        verbose ? &std::cout : nullptr);
      metric_name = r.metric_name;
      sum_val += r.val_metric;
      sum_test += r.test_metric;
      report << "seed." << k << ".seed=" << seed << "\n";
      report << "seed." << k << ".best_epoch=" << r.best_epoch << "\n";
      report << "seed." << k << ".val=" << format_g(r.val_metric) << "\n";
      report << "seed." << k << ".test=" << format_g(r.test_metric) << "\n";
      if (verbose)
        std::cout << "seed " << seed << ": val=" << format_g(r.val_metric)
                  << " test=" << format_g(r.test_metric)
                  << " best_epoch=" << r.best_epoch << std::endl;
    }
    report << "metric=" << metric_name << "\n";
    report << "mean_val=" << format_g(sum_val / seeds) << "\n";
    report << "mean_test=" << format_g(sum_test / seeds) << "\n";
    return report.str();
  });
}

char* chg_eval(const char* ckpt_path, const char* data_csv) {
  if (!require(ckpt_path && data_csv, "chg_eval argument is NULL"))
    return nullptr;
  return guarded_string([&]() -> std::string {
    const chg::Checkpoint ckpt = chg::load_checkpoint(ckpt_path);
    const chg::RunConfig cfg = config_from_checkpoint(ckpt);
    const chg::Dataset ds = chg::load_csv(data_csv);
    const chg::FinetuneResult r = chg::evaluate(ds, cfg, ckpt);
    std::ostringstream report;
    report << "command=eval\n";
    report << "metric=" << r.metric_name << "\n";
    report << "value=" << format_g(r.test_metric) << "\n";
    report << "used_tasks=" << r.used_tasks << "\n";
    report << "skipped_tasks=" << r.skipped_tasks << "\n";
    for (std::size_t i = 0; i < r.per_task.size(); ++i)
      report << "per_task." << i << "=" << format_g(r.per_task[i]) << "\n";
    return report.str();
  });
}

char* chg_embed(const char* ckpt_path, const char* data_csv,
                const char* level) {
  if (!require(ckpt_path && data_csv && level, "chg_embed argument is NULL"))
    return nullptr;
  return guarded_string([&]() -> std::string {
    const chg::Checkpoint ckpt = chg::load_checkpoint(ckpt_path);
    const chg::RunConfig cfg = config_from_checkpoint(ckpt);
    const chg::FragmentVocab vocab = vocab_from_checkpoint(ckpt);
    const chg::Dataset ds = chg::load_csv(data_csv);
    chg::Rng rng(cfg.seed);
    chg::EncoderParams params(cfg.encoder_config(), rng);
    chg::load_params(params, ckpt);
    return chg::export_embeddings(ds, cfg, vocab, params, level);
  });
}

char* chg_inspect(const char* smiles, const char* vocab_path,
                  const chg_config* cfg) {
  if (!require(smiles != nullptr, "smiles is NULL")) return nullptr;
  return guarded_string([&]() -> std::string {
    const chg::RunConfig run = cfg ? cfg->cfg : chg::RunConfig();
    chg::FragmentVocab vocab;
    if (vocab_path) vocab = chg::load_vocab(vocab_path);

    const chg::Molecule mol = chg::parse_smiles(smiles);
    const chg::PerceivedMolecule pm = chg::perceive(mol);
    const chg::Decomposition decomp =
        vocab.size() > 0 ? chg::decompose(mol, vocab)
                         : chg::whole_component_decomposition(mol);
    const chg::CHGraph g = chg::build_chg(pm, decomp, run.graph_variant);
    const chg::FunctionalGroupSet& fgs = chg::functional_groups_for(run);

    std::ostringstream out;
    out << "molecule: " << smiles << "\n";
    out << "canonical: " << chg::canonical_form(mol) << "\n";
    out << g.num_nodes() << " nodes / " << g.all_edges().size()
        << " edges\n\n";
    out << chg::dump_chg(g);

    out << "\nfragments:\n";
    for (int f = 0; f < g.n_frags; ++f) {
      const auto& atoms = g.frag_atom_members[static_cast<std::size_t>(f)];
      out << "  fragment " << f << ": atoms";
      for (int a : atoms) out << ' ' << a;
      if (atoms.size() < 2) {
        out << " (single atom, no group targets)\n";
        continue;
      }
      const std::vector<int> hits = chg::match_groups(pm, atoms, fgs);
      out << "; groups:";
      bool any = false;
      for (std::size_t i = 0; i < hits.size(); ++i) {
        if (!hits[i]) continue;
        out << ' ' << fgs.patterns[i].name;
        any = true;
      }
      if (!any) out << " none";
      out << "\n";
    }

    const std::vector<int> bits = chg::topo_fingerprint(pm, run.fp_bits);
    int set_bits = 0;
    for (int b : bits) set_bits += b;
    out << "fingerprint: " << set_bits << " of " << run.fp_bits
        << " bits set\n";
    const chg::ScaffoldTargets sc = chg::scaffold_targets(pm);
    out << "scaffold: ring_class=" << sc.ring_class
        << " aromatic_ring_class=" << sc.aromatic_ring_class
        << " fused=" << sc.fused << " heterocyclic=" << sc.heterocyclic
        << " bridged=" << sc.bridged << "\n";
    return out.str();
  });
}

}  // extern "C"
