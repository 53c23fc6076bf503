//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "chg/error.hpp"
#include "chg/rng.hpp"

namespace chg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "' expects a number, got '" + v +
                    "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "' expects an integer, got '" + v +
                    "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long i = std::stoull(v, &used);
    if (used != v.size() || v.find('-') != std::string::npos)
      throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw DataError("config key '" + key +
                    "' expects a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config key '" + key + "' expects true/false, got '" + v +
                  "'");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw DataError("invalid config: " + msg);
}

}  // namespace

const char* to_string(GraphVariant v) {
  switch (v) {
    case GraphVariant::kAtomGraph: return "atom";
    case GraphVariant::kHierGraph: return "hier";
    case GraphVariant::kChg: return "chg";
  }
  return "chg";
}

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoAb: return "no_ab";
    case Ablation::kNoFrag: return "no_frag";
    case Ablation::kNoTopo: return "no_topo";
    case Ablation::kNoScaf: return "no_scaf";
    case Ablation::kNoGraphLevel: return "no_graph_level";
    case Ablation::kNoNodeLevel: return "no_node_level";
  }
  return "none";
}

const char* to_string(TaskKind t) {
  return t == TaskKind::kClassify ? "classify" : "regress";
}

void RunConfig::validate() const {
  require(pretrain_epochs >= 1, "pretrain_epochs must be positive");
  require(finetune_epochs >= 1, "finetune_epochs must be positive");
  require(pretrain_batch >= 1, "pretrain_batch must be positive");
  require(finetune_batch >= 1, "finetune_batch must be positive");
  require(lr > 0.0, "lr must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(lambda_ab >= 0.0 && lambda_frag >= 0.0 && lambda_topo >= 0.0 &&
              lambda_scaf >= 0.0,
          "loss weights must be non-negative");
  require(tau > 0.0, "tau must be positive");
  require(vocab_size >= 1, "vocab_size must be positive");
  require(fp_bits >= 64 && fp_bits <= 4096 &&
              (fp_bits & (fp_bits - 1)) == 0,
          "fp_bits must be a power of two in [64, 4096]");
  require(frag_classes >= 1, "frag_classes must be positive");
  require(hidden >= 8, "hidden must be at least 8");
  require(layers >= 1, "layers must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(proj_dim >= 1, "proj_dim must be positive");
  require(threads >= 1, "threads must be positive");
}

LossWeights RunConfig::effective_weights() const {
  LossWeights w;
  w.lambda_ab = lambda_ab;
  w.lambda_frag = lambda_frag;
  w.lambda_topo = lambda_topo;
  w.lambda_scaf = lambda_scaf;
  w.tau = tau;
  switch (ablation) {
    case Ablation::kNone: break;
    case Ablation::kNoAb: w.lambda_ab = 0.0; break;
    case Ablation::kNoFrag: w.lambda_frag = 0.0; break;
    case Ablation::kNoTopo: w.lambda_topo = 0.0; break;
    case Ablation::kNoScaf: w.lambda_scaf = 0.0; break;
    case Ablation::kNoGraphLevel:
      w.lambda_topo = 0.0;
      w.lambda_scaf = 0.0;
      break;
    case Ablation::kNoNodeLevel:
      w.lambda_ab = 0.0;
      w.lambda_frag = 0.0;
      break;
  }
  return w;
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig e;
  e.layers = layers;
  e.hidden = hidden;
  e.dropout = dropout;
  e.proj_dim = proj_dim;
  e.frag_classes = frag_classes;
  e.fp_bits = fp_bits;
  e.affine_norm = affine_norm;
  e.separate_view_heads = separate_view_heads;
  return e;
}

AdamConfig RunConfig::adam_config() const {
  AdamConfig a;
  a.lr = lr;
  a.weight_decay = weight_decay;
  a.coupled_weight_decay = coupled_weight_decay;
  return a;
}

std::vector<std::string> RunConfig::active_losses() const {
  const LossWeights w = effective_weights();
  std::vector<std::string> out;
  if (graph_variant == GraphVariant::kAtomGraph) return out;
  const bool has_bond_nodes = graph_variant == GraphVariant::kChg;
  if (w.lambda_ab > 0.0 && has_bond_nodes) out.push_back("ab");
  if (w.lambda_frag > 0.0) out.push_back("frag");
  if (w.lambda_topo > 0.0) out.push_back("topo");
  if (w.lambda_scaf > 0.0) out.push_back("scaf");
  return out;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "seed=" << cfg.seed << "\n";
  os << "pretrain_epochs=" << cfg.pretrain_epochs << "\n";
  os << "finetune_epochs=" << cfg.finetune_epochs << "\n";
  os << "pretrain_batch=" << cfg.pretrain_batch << "\n";
  os << "finetune_batch=" << cfg.finetune_batch << "\n";
  os << "lr=" << fmt_double(cfg.lr) << "\n";
  os << "weight_decay=" << fmt_double(cfg.weight_decay) << "\n";
  os << "coupled_weight_decay=" << (cfg.coupled_weight_decay ? "true" : "false")
     << "\n";
  os << "lambda_ab=" << fmt_double(cfg.lambda_ab) << "\n";
  os << "lambda_frag=" << fmt_double(cfg.lambda_frag) << "\n";
  os << "lambda_topo=" << fmt_double(cfg.lambda_topo) << "\n";
  os << "lambda_scaf=" << fmt_double(cfg.lambda_scaf) << "\n";
  os << "tau=" << fmt_double(cfg.tau) << "\n";
  os << "vocab_size=" << cfg.vocab_size << "\n";
  os << "fp_bits=" << cfg.fp_bits << "\n";
  os << "frag_classes=" << cfg.frag_classes << "\n";
  os << "hidden=" << cfg.hidden << "\n";
  os << "layers=" << cfg.layers << "\n";
  os << "dropout=" << fmt_double(cfg.dropout) << "\n";
  os << "proj_dim=" << cfg.proj_dim << "\n";
  os << "graph_variant=" << to_string(cfg.graph_variant) << "\n";
  os << "ablation=" << to_string(cfg.ablation) << "\n";
  os << "affine_norm=" << (cfg.affine_norm ? "true" : "false") << "\n";
  os << "separate_view_heads="
     << (cfg.separate_view_heads ? "true" : "false") << "\n";
  os << "task=" << to_string(cfg.task) << "\n";
  os << "threads=" << cfg.threads << "\n";
  os << "fg_file=" << cfg.fg_file << "\n";
  return os.str();
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "pretrain_epochs") {
    cfg.pretrain_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "finetune_epochs") {
    cfg.finetune_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "pretrain_batch") {
    cfg.pretrain_batch = static_cast<int>(parse_int(key, value));
  } else if (key == "finetune_batch") {
    cfg.finetune_batch = static_cast<int>(parse_int(key, value));
  } else if (key == "lr") {
    cfg.lr = parse_double(key, value);
  } else if (key == "weight_decay") {
    cfg.weight_decay = parse_double(key, value);
  } else if (key == "coupled_weight_decay") {
    cfg.coupled_weight_decay = parse_bool(key, value);
  } else if (key == "lambda_ab") {
    cfg.lambda_ab = parse_double(key, value);
  } else if (key == "lambda_frag") {
    cfg.lambda_frag = parse_double(key, value);
  } else if (key == "lambda_topo") {
    cfg.lambda_topo = parse_double(key, value);
  } else if (key == "lambda_scaf") {
    cfg.lambda_scaf = parse_double(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_double(key, value);
  } else if (key == "vocab_size") {
    cfg.vocab_size = static_cast<int>(parse_int(key, value));
  } else if (key == "fp_bits") {
    cfg.fp_bits = static_cast<int>(parse_int(key, value));
  } else if (key == "frag_classes") {
    cfg.frag_classes = static_cast<int>(parse_int(key, value));
  } else if (key == "hidden") {
    cfg.hidden = static_cast<int>(parse_int(key, value));
  } else if (key == "layers") {
    cfg.layers = static_cast<int>(parse_int(key, value));
  } else if (key == "dropout") {
    cfg.dropout = parse_double(key, value);
  } else if (key == "proj_dim") {
    cfg.proj_dim = static_cast<int>(parse_int(key, value));
  } else if (key == "graph_variant") {
    if (value == "atom") cfg.graph_variant = GraphVariant::kAtomGraph;
    else if (value == "hier") cfg.graph_variant = GraphVariant::kHierGraph;
    else if (value == "chg") cfg.graph_variant = GraphVariant::kChg;
    else
      throw DataError("config key 'graph_variant' expects atom|hier|chg, got '" +
                      value + "'");
  } else if (key == "ablation") {
    if (value == "none") cfg.ablation = Ablation::kNone;
    else if (value == "no_ab") cfg.ablation = Ablation::kNoAb;
    else if (value == "no_frag") cfg.ablation = Ablation::kNoFrag;
    else if (value == "no_topo") cfg.ablation = Ablation::kNoTopo;
    else if (value == "no_scaf") cfg.ablation = Ablation::kNoScaf;
    else if (value == "no_graph_level") cfg.ablation = Ablation::kNoGraphLevel;
    else if (value == "no_node_level") cfg.ablation = Ablation::kNoNodeLevel;
    else
      throw DataError(
          "config key 'ablation' expects "
          "none|no_ab|no_frag|no_topo|no_scaf|no_graph_level|no_node_level, "
          "got '" +
          value + "'");
  } else if (key == "affine_norm") {
    cfg.affine_norm = parse_bool(key, value);
  } else if (key == "separate_view_heads") {
    cfg.separate_view_heads = parse_bool(key, value);
  } else if (key == "task") {
    if (value == "classify") cfg.task = TaskKind::kClassify;
    else if (value == "regress") cfg.task = TaskKind::kRegress;
    else
      throw DataError("config key 'task' expects classify|regress, got '" +
                      value + "'");
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_int(key, value));
  } else if (key == "fg_file") {
    cfg.fg_file = value;
  } else {
    throw DataError("unknown config key '" + key + "'");
  }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) +
                      " is not key=value: '" + stripped + "'");
    apply_override(cfg, trim(stripped.substr(0, eq)),
                   trim(stripped.substr(eq + 1)));
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  apply_config_text(cfg, text);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::uint64_t RunConfig::hash() const {
  const std::string s = serialize_config(*this);
  return fnv1a64(s.data(), s.size());
}

std::uint64_t RunConfig::preprocess_hash() const {
  std::ostringstream os;
  os << "graph_variant=" << to_string(graph_variant) << "\n";
  os << "fp_bits=" << fp_bits << "\n";
  os << "frag_classes=" << frag_classes << "\n";
  os << "fg_file=" << fg_file << "\n";
  const std::string s = os.str();
  return fnv1a64(s.data(), s.size());
}

}  // namespace chg
