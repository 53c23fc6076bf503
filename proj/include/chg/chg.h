/*
 * Project CHG - Copyright 2026 CHG Developers.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the CHG molecular pretraining toolkit. All functions are
 * synchronous and thread-compatible: distinct threads may use distinct
 * handles, but a single handle must not be shared without external locking.
 *
 * Functions returning int yield CHG_OK or an error code; functions returning
 * pointers yield NULL on failure. Either way chg_last_error() describes the
 * most recent failure on the calling thread.
 */

#ifndef CHG_CHG_H_
#define CHG_CHG_H_

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CHG_API __declspec(dllexport)
#elif defined(CHG_BUILD_SHARED)
#define CHG_API __attribute__((visibility("default")))
#else
#define CHG_API
#endif

#define CHG_OK 0
#define CHG_ERR_PARSE 1
#define CHG_ERR_IO 2
#define CHG_ERR_INVALID_ARG 3
#define CHG_ERR_RUNTIME 4

/* Library version, a static string such as "0.1.0". */
CHG_API const char* chg_version(void);

/* Message for the calling thread's most recent error; empty if none. The
 * pointer stays valid until the next failing call on the same thread. */
CHG_API const char* chg_last_error(void);

/* Frees any char* returned by this library. NULL is a no-op. */
CHG_API void chg_string_free(char* s);

/* ------------------------------------------------------------------------ */
/* Run configuration. */

typedef struct chg_config chg_config;

/* Fresh configuration with built-in defaults. */
CHG_API chg_config* chg_config_new(void);

/* Configuration parsed from a key=value text file. */
CHG_API chg_config* chg_config_load(const char* path);

CHG_API void chg_config_free(chg_config* cfg);

/* Overrides one key, e.g. chg_config_set(cfg, "hidden", "64"). Unknown keys
 * and malformed values return CHG_ERR_INVALID_ARG. */
CHG_API int chg_config_set(chg_config* cfg, const char* key, const char* value);

/* Applies a key=value config file on top of the current settings, so values
 * set beforehand act as fallbacks and later chg_config_set calls override. */
CHG_API int chg_config_apply_file(chg_config* cfg, const char* path);

/* Canonical key=value serialization of the full configuration. */
CHG_API char* chg_config_dump(const chg_config* cfg);

/* ------------------------------------------------------------------------ */
/* Pipeline stages. Datasets are CSV files with a header row containing a
 * `smiles` column and zero or more label columns; empty cells are missing
 * labels. */

/* Mines a fragment vocabulary of roughly target_size entries from the corpus
 * and writes it to out_path. */
CHG_API int chg_vocab_build(const char* corpus_csv, int target_size,
                            const char* out_path);

/* Decomposes and featurizes every corpus molecule, writing a binary cache
 * keyed by corpus, vocabulary, and the graph-affecting configuration. */
CHG_API int chg_preprocess(const char* corpus_csv, const char* vocab_path,
                           const chg_config* cfg, const char* out_cache);

/* Runs self-supervised pretraining over a preprocessed cache. Writes the
 * final checkpoint to out_ckpt, the best-epoch checkpoint to out_ckpt plus
 * ".best", and the per-epoch loss table to out_ckpt plus ".losses.csv".
 * resume_ckpt may be NULL; when given, training continues from its epoch.
 * verbose nonzero streams one loss line per epoch to stdout. */
CHG_API int chg_pretrain(const char* cache_path, const chg_config* cfg,
                         const char* out_ckpt, const char* resume_ckpt,
                         int verbose);

/* Finetunes on a labeled dataset for `seeds` consecutive seeds starting at
 * the configured seed, warm-starting from init_ckpt when non-NULL. Returns a
 * key=value report (per-seed and mean metrics). When out_ckpt_prefix is
 * non-NULL, writes one finetuned checkpoint per seed at
 * "<prefix>.seed<k>.ckpt". verbose nonzero streams per-seed lines to stdout. */
CHG_API char* chg_finetune(const char* data_csv, const char* init_ckpt,
                           const chg_config* cfg, int seeds,
                           const char* out_ckpt_prefix, int verbose);

/* Scores a finetuned checkpoint against a labeled dataset and returns a
 * key=value report. The checkpoint must contain a prediction head and its
 * embedded configuration is used. */
CHG_API char* chg_eval(const char* ckpt_path, const char* data_csv);

/* Exports embeddings from a checkpoint for every dataset molecule as CSV
 * text. level is "graph", "fragment", or "bond"; each row carries an id, a
 * grouping key (scaffold form, functional-group name, or bond type), and the
 * hidden-dimension embedding. */
CHG_API char* chg_embed(const char* ckpt_path, const char* data_csv,
                        const char* level);

/* Human-readable report for one molecule: canonical form, node/edge summary,
 * the full graph tables, per-fragment functional groups, fingerprint and
 * scaffold targets. vocab_path may be NULL for whole-molecule fragments; cfg
 * may be NULL for defaults. */
CHG_API char* chg_inspect(const char* smiles, const char* vocab_path,
                          const chg_config* cfg);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CHG_CHG_H_ */
