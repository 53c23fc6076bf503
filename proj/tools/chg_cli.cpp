//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Links only the public C interface so it exercises
// the same surface an embedding application would.
//

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "chg/chg.h"

namespace {

// Owns one configuration handle for the duration of a command.
struct Config {
  chg_config* handle = chg_config_new();
  ~Config() { chg_config_free(handle); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  Config() = default;
};

// Frees strings returned by the library.
struct Owned {
  char* s;
  explicit Owned(char* p) : s(p) {}
  ~Owned() { chg_string_free(s); }
};

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file,
                  "key=value configuration file");
  cmd->add_option("--set", opts.sets,
                  "override one configuration key (repeatable)")
      ->type_name("KEY=VALUE");
}

int fail_runtime(const char* prefix = nullptr) {
  std::fprintf(stderr, "chg: error: %s%s%s\n", prefix ? prefix : "",
               prefix ? ": " : "", chg_last_error());
  return 1;
}

int fail_usage(const std::string& msg) {
  std::fprintf(stderr, "chg: error: %s\n", msg.c_str());
  return 2;
}

// Layers configuration sources: defaults, then the CHG_SEED fallback, then
// the config file, then --set pairs, then explicit command flags. Returns 0
// or the process exit code.
int build_config(chg_config* cfg, const CommonOpts& opts,
                 const Overrides& flag_overrides) {
  if (const char* env = std::getenv("CHG_SEED"); env && *env) {
    if (chg_config_set(cfg, "seed", env) != CHG_OK)
      return fail_usage(std::string("CHG_SEED: ") + chg_last_error());
  }
  if (!opts.config_file.empty() &&
      chg_config_apply_file(cfg, opts.config_file.c_str()) != CHG_OK)
    return fail_runtime();
  for (const std::string& kv : opts.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      return fail_usage("--set expects KEY=VALUE, got '" + kv + "'");
    if (chg_config_set(cfg, kv.substr(0, eq).c_str(),
                       kv.substr(eq + 1).c_str()) != CHG_OK)
      return fail_usage(chg_last_error());
  }
  for (const auto& [key, value] : flag_overrides)
    if (chg_config_set(cfg, key.c_str(), value.c_str()) != CHG_OK)
      return fail_usage(chg_last_error());
  return 0;
}

int write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out.good()) {
    std::fprintf(stderr, "chg: error: cannot write %s\n", path.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CHG molecular pretraining toolkit"};
  app.set_version_flag("--version", chg_version());
  app.require_subcommand(1);

  // vocab-build
  std::string vb_corpus, vb_out;
  int vb_size = 0;
  CLI::App* vocab_build =
      app.add_subcommand("vocab-build", "mine a fragment vocabulary");
  vocab_build->add_option("--corpus", vb_corpus, "corpus CSV")->required();
  vocab_build->add_option("--size", vb_size, "target vocabulary size")
      ->required()
      ->check(CLI::PositiveNumber);
  vocab_build->add_option("--out", vb_out, "output vocabulary file")
      ->required();

  // preprocess
  std::string pp_corpus, pp_vocab, pp_out;
  int pp_threads = 0;
  CommonOpts pp_opts;
  CLI::App* preprocess =
      app.add_subcommand("preprocess", "build the graph and target cache");
  preprocess->add_option("--corpus", pp_corpus, "corpus CSV")->required();
  preprocess->add_option("--vocab", pp_vocab, "vocabulary file")->required();
  preprocess->add_option("--out", pp_out, "output cache file")->required();
  preprocess->add_option("--threads", pp_threads, "worker thread cap")
      ->check(CLI::PositiveNumber);
  add_common(preprocess, pp_opts);

  // pretrain
  std::string pt_cache, pt_out, pt_resume;
  bool pt_quiet = false;
  CommonOpts pt_opts;
  CLI::App* pretrain =
      app.add_subcommand("pretrain", "run self-supervised pretraining");
  pretrain->add_option("--cache", pt_cache, "preprocessed cache")->required();
  pretrain->add_option("--out", pt_out, "output checkpoint")->required();
  pretrain->add_option("--resume", pt_resume, "checkpoint to continue from");
  pretrain->add_flag("--quiet", pt_quiet, "suppress per-epoch loss lines");
  add_common(pretrain, pt_opts);

  // finetune
  std::string ft_data, ft_ckpt, ft_task, ft_out, ft_save;
  int ft_seeds = 1;
  CommonOpts ft_opts;
  CLI::App* finetune =
      app.add_subcommand("finetune", "train on a labeled task");
  finetune->add_option("--data", ft_data, "labeled dataset CSV")->required();
  finetune->add_option("--ckpt", ft_ckpt, "pretraining checkpoint to start from");
  finetune->add_option("--task", ft_task, "task kind")
      ->check(CLI::IsMember({"classify", "regress"}));
  finetune->add_option("--seeds", ft_seeds, "number of consecutive seeds")
      ->check(CLI::PositiveNumber);
  finetune->add_option("--out", ft_out, "write the report here too");
  finetune->add_option("--save", ft_save,
                       "write per-seed checkpoints at PREFIX.seed<k>.ckpt");
  add_common(finetune, ft_opts);

  // eval
  std::string ev_ckpt, ev_data, ev_out;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a finetuned checkpoint");
  eval_cmd->add_option("--ckpt", ev_ckpt, "finetuned checkpoint")->required();
  eval_cmd->add_option("--data", ev_data, "labeled dataset CSV")->required();
  eval_cmd->add_option("--out", ev_out, "write the report here too");

  // embed
  std::string em_ckpt, em_data, em_level, em_out;
  CLI::App* embed = app.add_subcommand("embed", "export embeddings as CSV");
  embed->add_option("--ckpt", em_ckpt, "checkpoint")->required();
  embed->add_option("--data", em_data, "dataset CSV")->required();
  embed->add_option("--level", em_level, "embedding level")
      ->required()
      ->check(CLI::IsMember({"graph", "fragment", "bond"}));
  embed->add_option("--out", em_out, "output CSV file")->required();

  // inspect
  std::string in_smiles, in_vocab;
  CommonOpts in_opts;
  CLI::App* inspect =
      app.add_subcommand("inspect", "print one molecule's graph and targets");
  inspect->add_option("--smiles", in_smiles, "molecule SMILES")->required();
  inspect->add_option("--vocab", in_vocab, "vocabulary file");
  add_common(inspect, in_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand(vocab_build)) {
    if (chg_vocab_build(vb_corpus.c_str(), vb_size, vb_out.c_str()) != CHG_OK)
      return fail_runtime();
    std::printf("wrote %s\n", vb_out.c_str());
    return 0;
  }

  if (app.got_subcommand(preprocess)) {
    Config cfg;
    Overrides forced;
    if (pp_threads > 0) forced.emplace_back("threads", std::to_string(pp_threads));
    if (int rc = build_config(cfg.handle, pp_opts, forced)) return rc;
    if (chg_preprocess(pp_corpus.c_str(), pp_vocab.c_str(), cfg.handle,
                       pp_out.c_str()) != CHG_OK)
      return fail_runtime();
    std::printf("wrote %s\n", pp_out.c_str());
    return 0;
  }

  if (app.got_subcommand(pretrain)) {
    Config cfg;
    if (int rc = build_config(cfg.handle, pt_opts, {})) return rc;
    if (chg_pretrain(pt_cache.c_str(), cfg.handle, pt_out.c_str(),
                     pt_resume.empty() ? nullptr : pt_resume.c_str(),
                     pt_quiet ? 0 : 1) != CHG_OK)
      return fail_runtime();
    std::printf("wrote %s and %s.best\n", pt_out.c_str(), pt_out.c_str());
    return 0;
  }

  if (app.got_subcommand(finetune)) {
    Config cfg;
    Overrides forced;
    if (!ft_task.empty()) forced.emplace_back("task", ft_task);
    if (int rc = build_config(cfg.handle, ft_opts, forced)) return rc;
    Owned report(chg_finetune(ft_data.c_str(),
                              ft_ckpt.empty() ? nullptr : ft_ckpt.c_str(),
                              cfg.handle, ft_seeds,
                              ft_save.empty() ? nullptr : ft_save.c_str(), 1));
    if (!report.s) return fail_runtime();
    std::fputs(report.s, stdout);
    if (!ft_out.empty()) return write_file(ft_out, report.s);
    return 0;
  }

  if (app.got_subcommand(eval_cmd)) {
    Owned report(chg_eval(ev_ckpt.c_str(), ev_data.c_str()));
    if (!report.s) return fail_runtime();
    std::fputs(report.s, stdout);
    if (!ev_out.empty()) return write_file(ev_out, report.s);
    return 0;
  }

  if (app.got_subcommand(embed)) {
    Owned csv(chg_embed(em_ckpt.c_str(), em_data.c_str(), em_level.c_str()));
    if (!csv.s) return fail_runtime();
    if (int rc = write_file(em_out, csv.s)) return rc;
    std::printf("wrote %s\n", em_out.c_str());
    return 0;
  }

  if (app.got_subcommand(inspect)) {
    Config cfg;
    if (int rc = build_config(cfg.handle, in_opts, {})) return rc;
    Owned report(chg_inspect(in_smiles.c_str(),
                             in_vocab.empty() ? nullptr : in_vocab.c_str(),
                             cfg.handle));
    if (!report.s) return fail_runtime();
    std::fputs(report.s, stdout);
    return 0;
  }

  return fail_usage("no command given");
}
