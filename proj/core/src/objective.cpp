#include "iur/objective.hpp"

#include <algorithm>
#include <stdexcept>

#include "iur/encoder.hpp"
#include "iur/rng.hpp"

namespace iur::objective {

using nn::TensorPtr;
using supervision::EditType;
using supervision::GoldEditGrid;

nn::TensorPtr loss_edit(const TensorPtr& probs, const GoldEditGrid& gold,
                        const std::array<double, 3>& class_weights) {
  const std::int64_t cells =
      static_cast<std::int64_t>(gold.n_ctx) * static_cast<std::int64_t>(gold.n_utt);
  if (probs->rank() != 2 || probs->dim(1) != 3 || probs->dim(0) != cells)
    throw std::invalid_argument("loss_edit: grid dimensions do not match gold grid");

  std::vector<int> gold_class(static_cast<std::size_t>(cells));
  std::vector<double> weights(static_cast<std::size_t>(cells));
  double weight_sum = 0.0;
  for (std::int64_t c = 0; c < cells; ++c) {
    const int cls = static_cast<int>(gold.entries[static_cast<std::size_t>(c)]);
    gold_class[static_cast<std::size_t>(c)] = cls;
    weights[static_cast<std::size_t>(c)] = class_weights[static_cast<std::size_t>(cls)];
    weight_sum += class_weights[static_cast<std::size_t>(cls)];
  }
  if (weight_sum <= 0.0) throw std::invalid_argument("loss_edit: zero total class weight");

  const TensorPtr gold_probs =
      nn::clamp_min(nn::gather_per_row(probs, std::move(gold_class)), 1e-8);
  const TensorPtr weighted = nn::dot_const(nn::log_elem(gold_probs), std::move(weights));
  return nn::mul_scalar(weighted, -1.0 / weight_sum);
}

namespace {

// -mean(R*log p + (1-R)*log(1-p)) with both sides floored at 1e-8.
TensorPtr binary_cross_entropy(const TensorPtr& probs, const std::vector<int>& labels,
                               const char* who) {
  const int n = probs->dim(0);
  if (probs->rank() != 1 || n != static_cast<int>(labels.size()))
    throw std::invalid_argument(std::string(who) + ": probability/label length mismatch");
  std::vector<double> pos_mask(static_cast<std::size_t>(n), 0.0);
  std::vector<double> neg_mask(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)])
      pos_mask[static_cast<std::size_t>(i)] = 1.0;
    else
      neg_mask[static_cast<std::size_t>(i)] = 1.0;
  }
  const TensorPtr ones = nn::make_tensor({n}, std::vector<double>(static_cast<std::size_t>(n), 1.0));
  const TensorPtr chosen = nn::add(nn::mul_constvec(probs, std::move(pos_mask)),
                                   nn::mul_constvec(nn::sub(ones, probs), std::move(neg_mask)));
  return nn::mul_scalar(nn::mean_all(nn::log_elem(nn::clamp_min(chosen, 1e-8))), -1.0);
}

}  // namespace

TensorPtr loss_sel(const TensorPtr& relevance, const std::vector<int>& labels) {
  return binary_cross_entropy(relevance, labels, "loss_sel");
}

TensorPtr loss_mat(const TensorPtr& scores, const std::vector<int>& labels) {
  return binary_cross_entropy(scores, labels, "loss_mat");
}

TensorPtr loss_int(const TensorPtr& p_ctx, const TensorPtr& p_rw) {
  if (p_ctx->shape != p_rw->shape) throw std::invalid_argument("loss_int: shape mismatch");
  const TensorPtr diff = nn::sub(nn::log_elem(p_ctx), nn::log_elem(p_rw));
  return nn::sum_all(nn::mul(p_ctx, diff));
}

TensorPtr combine(const TensorPtr& edit, const TensorPtr& sel, const TensorPtr& mat,
                  const TensorPtr& intention, double a1, double a2, double a3) {
  if (a1 < 0.0 || a2 < 0.0 || a3 < 0.0)
    throw std::invalid_argument("combine: loss weights must be non-negative");
  TensorPtr total = edit;
  total = nn::add(total, nn::mul_scalar(sel, a1));
  total = nn::add(total, nn::mul_scalar(mat, a2));
  total = nn::add(total, nn::mul_scalar(intention, a3));
  return total;
}

double loss_edit_value(const heads::PredictedEditGrid& grid, const GoldEditGrid& gold,
                       const std::array<double, 3>& class_weights) {
  if (grid.n_ctx != gold.n_ctx || grid.n_utt != gold.n_utt)
    throw std::invalid_argument("loss_edit: predicted/gold dimension mismatch");
  const TensorPtr probs = nn::make_tensor({grid.n_ctx * grid.n_utt, 3}, grid.p);
  return loss_edit(probs, gold, class_weights)->scalar();
}

double loss_sel_value(const std::vector<double>& relevance, const std::vector<int>& labels) {
  return loss_sel(nn::make_tensor({static_cast<int>(relevance.size())}, relevance), labels)
      ->scalar();
}

double loss_mat_value(const std::vector<double>& scores, const std::vector<int>& labels) {
  return loss_mat(nn::make_tensor({static_cast<int>(scores.size())}, scores), labels)->scalar();
}

double loss_int_value(const std::vector<double>& p_ctx, const std::vector<double>& p_rw) {
  return loss_int(nn::make_tensor({static_cast<int>(p_ctx.size())}, p_ctx),
                  nn::make_tensor({static_cast<int>(p_rw.size())}, p_rw))
      ->scalar();
}

PreparedExample prepare_example(const corpus::Dialogue& d, const corpus::Vocab& vocab) {
  PreparedExample ex;
  ex.dialogue = d;
  ex.encoded = corpus::encode_example(d, vocab);
  if (d.rewrite) {
    ex.labels = supervision::relevance_labels(d);
    auto [grid, status] = supervision::build_gold_edit_grid(d);
    ex.gold = std::move(grid);
    ex.aligned = status == supervision::AlignStatus::kAligned;
  }
  return ex;
}

std::vector<PreparedExample> prepare_corpus(const std::vector<corpus::Dialogue>& data,
                                            const corpus::Vocab& vocab) {
  std::vector<PreparedExample> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(prepare_example(d, vocab));
  return out;
}

std::vector<std::pair<int, int>> sample_negatives(
    const std::vector<const PreparedExample*>& batch, std::size_t example_index, int k,
    std::uint64_t seed) {
  // Pool is ordered by (dialogue id, utterance index) so the draw only
  // depends on batch membership, not on batch order.
  std::vector<std::pair<int, int>> pool;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (b == example_index) continue;
    for (std::size_t utt = 0; utt < batch[b]->dialogue.context.size(); ++utt)
      pool.emplace_back(static_cast<int>(b), static_cast<int>(utt));
  }
  std::sort(pool.begin(), pool.end(), [&](const auto& a, const auto& b) {
    const auto& ida = batch[static_cast<std::size_t>(a.first)]->dialogue.id;
    const auto& idb = batch[static_cast<std::size_t>(b.first)]->dialogue.id;
    if (ida != idb) return ida < idb;
    return a.second < b.second;
  });
  Rng rng(mix_seed(seed, stable_hash(batch[example_index]->dialogue.id)));
  const auto picks =
      rng.sample_without_replacement(pool.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::vector<std::pair<int, int>> out;
  out.reserve(picks.size());
  for (std::size_t p : picks) out.push_back(pool[p]);
  return out;
}

BatchResult batch_losses(const Model& m, const std::vector<const PreparedExample*>& batch,
                         bool train, Rng* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("batch_losses: empty batch");
  const auto& cfg = m.cfg;

  struct Forward {
    encoder::EncoderOutput enc;
    TensorPtr relevance;  // may be null when cs is off
    TensorPtr rewrite;    // may be null when neither cm nor ic needs it
  };
  std::vector<Forward> fwd(batch.size());

  std::vector<TensorPtr> edit_terms, sel_terms, int_terms;
  LossBreakdown numbers;

  const bool need_rewrite_vec = cfg.use_mat_loss() || cfg.use_int_loss();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const PreparedExample& ex = *batch[b];
    if (!ex.dialogue.rewrite)
      throw std::invalid_argument("batch_losses: dialogue '" + ex.dialogue.id +
                                  "' has no rewrite");
    Forward& f = fwd[b];
    f.enc = encoder::encode(m, ex.encoded, train, dropout_rng);
    if (cfg.cs) f.relevance = heads::select_contexts(m, f.enc.context, f.enc.incomplete);
    if (need_rewrite_vec)
      f.rewrite = encoder::encode_rewrite(m, ex.dialogue.rewrite->tokens, train, dropout_rng);

    // Edit loss (ALIGNED examples only).
    if (ex.aligned) {
      const heads::EditGridResult grid = heads::edit_grid(m, f.enc.hidden, ex.encoded);
      TensorPtr merged = grid.probs;
      if (cfg.cs && cfg.effective_merge() != config::MergeMode::kOff)
        merged = heads::merge_relevance(grid, f.relevance, ex.encoded.context_owner(),
                                        cfg.merge_alpha, cfg.effective_merge(), cfg.tau);
      edit_terms.push_back(loss_edit(merged, ex.gold, cfg.class_weights));
      numbers.edit_cells += static_cast<std::int64_t>(ex.gold.entries.size());
      ++numbers.edit_examples;
    }

    if (cfg.use_sel_loss()) {
      sel_terms.push_back(loss_sel(f.relevance, ex.labels.relevant));
      numbers.sel_utterances += static_cast<std::int64_t>(ex.labels.relevant.size());
    }

    if (cfg.use_int_loss() && ex.aligned && !ex.labels.positive_set.empty()) {
      const heads::IntentionPair pair = heads::intention_distributions(
          m, f.enc.context, f.enc.incomplete, f.rewrite, ex.labels.positive_set);
      int_terms.push_back(loss_int(pair.p_ctx, pair.p_rw));
      ++numbers.int_examples;
    }
  }

  // Matching loss over the whole batch.
  TensorPtr mat_term;
  if (cfg.use_mat_loss() && batch.size() >= 2) {
    std::vector<TensorPtr> rows;
    std::vector<int> labels;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const PreparedExample& ex = *batch[b];
      if (!ex.aligned) continue;  // UNALIGNABLE examples feed the selection loss only
      const Forward& f = fwd[b];
      for (int pos : ex.labels.positive_set) {
        rows.push_back(nn::concat_cols(
            {nn::add(f.enc.context[static_cast<std::size_t>(pos)], f.enc.incomplete), f.rewrite}));
        labels.push_back(1);
      }
      for (const auto& [other_b, utt] :
           sample_negatives(batch, b, cfg.negatives_k, cfg.seed)) {
        rows.push_back(nn::concat_cols(
            {nn::add(fwd[static_cast<std::size_t>(other_b)].enc.context[static_cast<std::size_t>(utt)],
                     f.enc.incomplete),
             f.rewrite}));
        labels.push_back(0);
      }
    }
    if (!rows.empty()) {
      const TensorPtr scores = heads::match_head(m, nn::stack_rows(rows));
      mat_term = loss_mat(scores, labels);
      numbers.mat_pairs = static_cast<std::int64_t>(labels.size());
    }
  }

  auto average = [](const std::vector<TensorPtr>& terms) -> TensorPtr {
    if (terms.empty()) return nn::make_scalar(0.0);
    if (terms.size() == 1) return terms[0];
    return nn::mean_all(nn::concat_cols(terms));
  };

  const TensorPtr edit = average(edit_terms);
  const TensorPtr sel = average(sel_terms);
  const TensorPtr intention = average(int_terms);
  const TensorPtr mat = mat_term ? mat_term : nn::make_scalar(0.0);

  BatchResult out;
  out.final_loss = combine(edit, sel, mat, intention, cfg.alpha_sel, cfg.alpha_mat, cfg.alpha_int);
  out.edit = edit;
  out.sel = sel;
  out.mat = mat;
  out.intention = intention;
  numbers.edit = edit->scalar();
  numbers.sel = sel->scalar();
  numbers.mat = mat->scalar();
  numbers.intention = intention->scalar();
  numbers.final_loss = out.final_loss->scalar();
  out.numbers = numbers;
  return out;
}

}  // namespace iur::objective
