#include "iur/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace iur::config {

const char* to_string(MergeMode m) {
  switch (m) {
    case MergeMode::kSoft:
      return "soft";
    case MergeMode::kHard:
      return "hard";
    case MergeMode::kOff:
      return "off";
  }
  return "off";
}

MergeMode merge_mode_from_string(const std::string& s) {
  if (s == "soft") return MergeMode::kSoft;
  if (s == "hard") return MergeMode::kHard;
  if (s == "off") return MergeMode::kOff;
  throw std::invalid_argument("unknown merge_mode '" + s + "' (expected soft|hard|off)");
}

void RunConfig::derive_merge_mode() {
  merge_mode = sm ? MergeMode::kSoft : (hm ? MergeMode::kHard : MergeMode::kOff);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (sm && hm) fail("sm and hm are mutually exclusive");
  if (!cs && (cm || sm || hm || ic)) fail("cm/sm/hm/ic require cs");
  if (sm && merge_mode != MergeMode::kSoft) fail("sm switch contradicts merge_mode");
  if (hm && merge_mode != MergeMode::kHard) fail("hm switch contradicts merge_mode");
  if (!sm && !hm && merge_mode != MergeMode::kOff) fail("merge_mode set without sm or hm");
  if (merge_alpha < 0.0 || merge_alpha > 1.0) fail("merge_alpha must be in [0,1]");
  if (tau < 0.0 || tau > 1.0) fail("tau must be in [0,1]");
  if (alpha_sel < 0.0 || alpha_mat < 0.0 || alpha_int < 0.0)
    fail("loss weights must be non-negative");
  for (double w : class_weights)
    if (w < 0.0) fail("class weights must be non-negative");
  if (encoder.d_model <= 0 || encoder.n_heads <= 0 || encoder.d_model % encoder.n_heads != 0)
    fail("d_model must be a positive multiple of n_heads");
  if (encoder.n_layers < 1) fail("n_layers must be >= 1");
  if (encoder.d_ff < 1) fail("d_ff must be >= 1");
  if (encoder.max_len < 4) fail("max_len must be >= 4");
  if (encoder.dropout < 0.0 || encoder.dropout >= 1.0) fail("dropout must be in [0,1)");
  if (d_int < 2) fail("d_int must be >= 2");
  if (unet_proj_channels < 1 || unet_base_channels < 1) fail("U-Net channels must be >= 1");
  if (lr <= 0.0) fail("lr must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (steps < 0) fail("steps must be >= 0");
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (negatives_k < 0) fail("negatives_k must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
  std::istringstream is(v);
  T out;
  is >> out;
  if (is.fail() || !trim(v.substr(static_cast<std::size_t>(is.tellg()) == std::string::npos
                                      ? v.size()
                                      : static_cast<std::size_t>(is.tellg())))
                        .empty())
    throw std::invalid_argument("config: bad numeric value for '" + key + "': " + v);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> kSetters = {
      {"d_model", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.d_model = parse_num<int>(v, k); }},
      {"n_layers", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.n_layers = parse_num<int>(v, k); }},
      {"n_heads", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.n_heads = parse_num<int>(v, k); }},
      {"d_ff", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.d_ff = parse_num<int>(v, k); }},
      {"max_len", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.max_len = parse_num<int>(v, k); }},
      {"dropout", [](RunConfig& c, const std::string& v, const std::string& k) { c.encoder.dropout = parse_num<double>(v, k); }},
      {"d_int", [](RunConfig& c, const std::string& v, const std::string& k) { c.d_int = parse_num<int>(v, k); }},
      {"unet_proj_channels", [](RunConfig& c, const std::string& v, const std::string& k) { c.unet_proj_channels = parse_num<int>(v, k); }},
      {"unet_base_channels", [](RunConfig& c, const std::string& v, const std::string& k) { c.unet_base_channels = parse_num<int>(v, k); }},
      {"merge_alpha", [](RunConfig& c, const std::string& v, const std::string& k) { c.merge_alpha = parse_num<double>(v, k); }},
      {"merge_mode", [](RunConfig& c, const std::string& v, const std::string&) { c.merge_mode = merge_mode_from_string(v); }},
      {"tau", [](RunConfig& c, const std::string& v, const std::string& k) { c.tau = parse_num<double>(v, k); }},
      {"alpha_sel", [](RunConfig& c, const std::string& v, const std::string& k) { c.alpha_sel = parse_num<double>(v, k); }},
      {"alpha_mat", [](RunConfig& c, const std::string& v, const std::string& k) { c.alpha_mat = parse_num<double>(v, k); }},
      {"alpha_int", [](RunConfig& c, const std::string& v, const std::string& k) { c.alpha_int = parse_num<double>(v, k); }},
      {"class_weight_none", [](RunConfig& c, const std::string& v, const std::string& k) { c.class_weights[0] = parse_num<double>(v, k); }},
      {"class_weight_insert", [](RunConfig& c, const std::string& v, const std::string& k) { c.class_weights[1] = parse_num<double>(v, k); }},
      {"class_weight_replace", [](RunConfig& c, const std::string& v, const std::string& k) { c.class_weights[2] = parse_num<double>(v, k); }},
      {"lr", [](RunConfig& c, const std::string& v, const std::string& k) { c.lr = parse_num<double>(v, k); }},
      {"batch_size", [](RunConfig& c, const std::string& v, const std::string& k) { c.batch_size = parse_num<int>(v, k); }},
      {"steps", [](RunConfig& c, const std::string& v, const std::string& k) { c.steps = parse_num<int>(v, k); }},
      {"warmup_steps", [](RunConfig& c, const std::string& v, const std::string& k) { c.warmup_steps = parse_num<int>(v, k); }},
      {"eval_every", [](RunConfig& c, const std::string& v, const std::string& k) { c.eval_every = parse_num<int>(v, k); }},
      {"early_stop_em", [](RunConfig& c, const std::string& v, const std::string& k) { c.early_stop_em = parse_num<double>(v, k); }},
      {"negatives_k", [](RunConfig& c, const std::string& v, const std::string& k) { c.negatives_k = parse_num<int>(v, k); }},
      {"seed", [](RunConfig& c, const std::string& v, const std::string& k) { c.seed = parse_num<std::uint64_t>(v, k); }},
      {"train_data", [](RunConfig& c, const std::string& v, const std::string&) { c.train_data = v; }},
      {"dev_data", [](RunConfig& c, const std::string& v, const std::string&) { c.dev_data = v; }},
      {"cs", [](RunConfig& c, const std::string& v, const std::string& k) { c.cs = parse_bool(v, k); }},
      {"cm", [](RunConfig& c, const std::string& v, const std::string& k) { c.cm = parse_bool(v, k); }},
      {"sm", [](RunConfig& c, const std::string& v, const std::string& k) { c.sm = parse_bool(v, k); }},
      {"hm", [](RunConfig& c, const std::string& v, const std::string& k) { c.hm = parse_bool(v, k); }},
      {"ic", [](RunConfig& c, const std::string& v, const std::string& k) { c.ic = parse_bool(v, k); }},
  };
  return kSetters;
}

}  // namespace

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "d_model: " << encoder.d_model << "\n";
  os << "n_layers: " << encoder.n_layers << "\n";
  os << "n_heads: " << encoder.n_heads << "\n";
  os << "d_ff: " << encoder.d_ff << "\n";
  os << "max_len: " << encoder.max_len << "\n";
  os << "dropout: " << encoder.dropout << "\n";
  os << "d_int: " << d_int << "\n";
  os << "unet_proj_channels: " << unet_proj_channels << "\n";
  os << "unet_base_channels: " << unet_base_channels << "\n";
  os << "merge_alpha: " << merge_alpha << "\n";
  os << "merge_mode: " << to_string(merge_mode) << "\n";
  os << "tau: " << tau << "\n";
  os << "alpha_sel: " << alpha_sel << "\n";
  os << "alpha_mat: " << alpha_mat << "\n";
  os << "alpha_int: " << alpha_int << "\n";
  os << "class_weight_none: " << class_weights[0] << "\n";
  os << "class_weight_insert: " << class_weights[1] << "\n";
  os << "class_weight_replace: " << class_weights[2] << "\n";
  os << "lr: " << lr << "\n";
  os << "batch_size: " << batch_size << "\n";
  os << "steps: " << steps << "\n";
  os << "warmup_steps: " << warmup_steps << "\n";
  os << "eval_every: " << eval_every << "\n";
  os << "early_stop_em: " << early_stop_em << "\n";
  os << "negatives_k: " << negatives_k << "\n";
  os << "seed: " << seed << "\n";
  os << "train_data: " << train_data << "\n";
  os << "dev_data: " << dev_data << "\n";
  os << "cs: " << (cs ? "true" : "false") << "\n";
  os << "cm: " << (cm ? "true" : "false") << "\n";
  os << "sm: " << (sm ? "true" : "false") << "\n";
  os << "hm: " << (hm ? "true" : "false") << "\n";
  os << "ic: " << (ic ? "true" : "false") << "\n";
  return os.str();
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  bool merge_mode_given = false;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto colon = stripped.find(':');
    if (colon == std::string::npos) {
      std::ostringstream os;
      os << origin << ":" << line_no << ": expected 'key: value', got '" << stripped << "'";
      throw std::invalid_argument(os.str());
    }
    const std::string key = trim(stripped.substr(0, colon));
    const std::string value = trim(stripped.substr(colon + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      std::ostringstream os;
      os << origin << ":" << line_no << ": unknown config key '" << key << "'";
      throw std::invalid_argument(os.str());
    }
    it->second(cfg, value, key);
    if (key == "merge_mode") merge_mode_given = true;
  }
  if (!merge_mode_given) cfg.derive_merge_mode();
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return from_text(os.str(), path);
}

}  // namespace iur::config
