#include "iur/model.hpp"

#include <cmath>
#include <stdexcept>

#include "iur/rng.hpp"

namespace iur {

namespace {

void init_params(nn::ParamStore& store, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417));
  for (const auto& [name, t] : store.items()) {
    const bool is_weight = name.ends_with(".w") || name.ends_with(".w1") || name.ends_with(".w2") ||
                           name.ends_with(".wq") || name.ends_with(".wk") ||
                           name.ends_with(".wv") || name.ends_with(".wo");
    if (name.ends_with(".gamma")) {
      std::fill(t->value.begin(), t->value.end(), 1.0);
    } else if (name == "embed.tok" || name == "embed.pos") {
      for (auto& v : t->value) v = rng.next_normal(0.0, 0.02);
    } else if (is_weight) {
      // fan-in scaled init; for conv weights fan-in covers the whole patch
      std::int64_t fan_in = t->rank() == 4
                                ? static_cast<std::int64_t>(t->dim(1)) * t->dim(2) * t->dim(3)
                                : t->dim(0);
      const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : t->value) v = rng.next_normal(0.0, scale);
    } else {
      std::fill(t->value.begin(), t->value.end(), 0.0);
    }
  }
}

}  // namespace

Model Model::create(const config::RunConfig& cfg, corpus::Vocab vocab) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);

  const int d = cfg.encoder.d_model;
  const int dff = cfg.encoder.d_ff;
  const int v_size = static_cast<int>(m.vocab.size());
  auto& p = m.params;

  p.create("embed.tok", {v_size, d});
  p.create("embed.pos", {cfg.encoder.max_len, d});
  for (int l = 0; l < cfg.encoder.n_layers; ++l) {
    const std::string base = "enc.l" + std::to_string(l) + ".";
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) p.create(base + w, {d, d});
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) p.create(base + b, {d});
    p.create(base + "ln1.gamma", {d});
    p.create(base + "ln1.beta", {d});
    p.create(base + "ffn.w1", {d, dff});
    p.create(base + "ffn.b1", {dff});
    p.create(base + "ffn.w2", {dff, d});
    p.create(base + "ffn.b2", {d});
    p.create(base + "ln2.gamma", {d});
    p.create(base + "ln2.beta", {d});
  }

  p.create("select.w1", {2 * d, d});
  p.create("select.b1", {d});
  p.create("select.w2", {d, 2});
  p.create("select.b2", {2});

  p.create("match.w1", {2 * d, d});
  p.create("match.b1", {d});
  p.create("match.w2", {d, 1});
  p.create("match.b2", {1});

  p.create("intent.ctx.w1", {2 * d, d});
  p.create("intent.ctx.b1", {d});
  p.create("intent.ctx.w2", {d, cfg.d_int});
  p.create("intent.ctx.b2", {cfg.d_int});
  p.create("intent.rw.w1", {d, d});
  p.create("intent.rw.b1", {d});
  p.create("intent.rw.w2", {d, cfg.d_int});
  p.create("intent.rw.b2", {cfg.d_int});

  const int pc = cfg.unet_proj_channels;
  const int c0 = m.unet_c0(), c1 = m.unet_c1(), c2 = m.unet_c2();
  p.create("unet.proj.w", {pc, 2 * d + 1, 1, 1});
  p.create("unet.proj.b", {pc});
  p.create("unet.enc0.w", {c0, pc, 3, 3});
  p.create("unet.enc0.b", {c0});
  p.create("unet.enc1.w", {c1, c0, 3, 3});
  p.create("unet.enc1.b", {c1});
  p.create("unet.bott.w", {c2, c1, 3, 3});
  p.create("unet.bott.b", {c2});
  p.create("unet.dec1.w", {c1, c2 + c1, 3, 3});
  p.create("unet.dec1.b", {c1});
  p.create("unet.dec0.w", {c0, c1 + c0, 3, 3});
  p.create("unet.dec0.b", {c0});
  p.create("unet.head.w", {3, c0, 1, 1});
  p.create("unet.head.b", {3});

  init_params(p, cfg.seed);
  return m;
}

std::vector<std::vector<double>> Model::snapshot_values() const {
  std::vector<std::vector<double>> out;
  out.reserve(params.items().size());
  for (const auto& [_, t] : params.items()) out.push_back(t->value);
  return out;
}

void Model::restore_values(const std::vector<std::vector<double>>& snapshot) {
  if (snapshot.size() != params.items().size())
    throw std::invalid_argument("Model::restore_values: snapshot size mismatch");
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    auto& t = params.items()[i].second;
    if (snapshot[i].size() != t->value.size())
      throw std::invalid_argument("Model::restore_values: tensor size mismatch");
    t->value = snapshot[i];
  }
}

}  // namespace iur
