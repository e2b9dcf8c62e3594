#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace iur::config {

enum class MergeMode { kSoft, kHard, kOff };

const char* to_string(MergeMode m);
MergeMode merge_mode_from_string(const std::string& s);

struct EncoderConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_len = 128;
  double dropout = 0.0;
};

// Full run configuration. The module switches mirror the ablation axes:
// cs = context selection, cm = context matching, sm = soft relevance merge,
// hm = hard relevance merge, ic = intention check. The merge mode is derived
// from sm/hm; cm and ic require cs; cs off forces merge OFF and disables the
// selection, matching and intention losses.
struct RunConfig {
  EncoderConfig encoder;

  int d_int = 16;
  int unet_proj_channels = 32;
  int unet_base_channels = 16;

  double merge_alpha = 0.5;
  MergeMode merge_mode = MergeMode::kSoft;
  double tau = 0.5;

  double alpha_sel = 0.5;
  double alpha_mat = 0.5;
  double alpha_int = 0.5;
  std::array<double, 3> class_weights = {1.0, 5.0, 5.0};  // NONE, INSERT, REPLACE

  double lr = 1e-3;
  int batch_size = 16;
  int steps = 2000;
  int warmup_steps = 100;
  int eval_every = 100;
  double early_stop_em = 2.0;  // > 1 disables early stopping
  int negatives_k = 3;

  std::uint64_t seed = 1;
  std::string train_data;
  std::string dev_data;

  bool cs = true;
  bool cm = true;
  bool sm = true;
  bool hm = false;
  bool ic = true;

  // Re-derives merge_mode from the sm/hm switches.
  void derive_merge_mode();
  // Throws std::invalid_argument on any invalid combination or range.
  void validate() const;

  bool use_sel_loss() const { return cs; }
  bool use_mat_loss() const { return cs && cm; }
  bool use_int_loss() const { return cs && ic; }
  MergeMode effective_merge() const { return cs ? merge_mode : MergeMode::kOff; }

  // Flat "key: value" round-trip used by config files and checkpoint echoes.
  std::string to_text() const;
  static RunConfig from_text(const std::string& text, const std::string& origin = "<string>");
  static RunConfig from_file(const std::string& path);
};

}  // namespace iur::config
