#pragma once

#include <vector>

#include "iur/config.hpp"
#include "iur/corpus.hpp"
#include "iur/model.hpp"
#include "iur/tensor.hpp"

namespace iur::heads {

using config::MergeMode;

// Per-cell probability field over (NONE, INSERT, REPLACE), row-major.
struct PredictedEditGrid {
  int n_ctx = 0;
  int n_utt = 0;
  std::vector<double> p;  // size n_ctx * n_utt * 3
  bool merged = false;

  PredictedEditGrid() = default;
  PredictedEditGrid(int rows, int cols)
      : n_ctx(rows), n_utt(cols),
        p(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 3, 0.0) {}

  const double* cell(int i, int j) const {
    return &p[(static_cast<std::size_t>(i) * static_cast<std::size_t>(n_utt) +
               static_cast<std::size_t>(j)) *
              3];
  }
  double* cell(int i, int j) {
    return &p[(static_cast<std::size_t>(i) * static_cast<std::size_t>(n_utt) +
               static_cast<std::size_t>(j)) *
              3];
  }
};

// Positive-class probability r_i of a 2-way classifier over [c_i; u].
nn::TensorPtr select_contexts(const Model& m, const std::vector<nn::TensorPtr>& context,
                              const nn::TensorPtr& incomplete);

// Matching head over pre-assembled rows [(c_i + u); r], one row per pair.
nn::TensorPtr match_head(const Model& m, const nn::TensorPtr& rows);

// Single-pair matching probability from [(c + u); r].
nn::TensorPtr match_score(const Model& m, const nn::TensorPtr& c, const nn::TensorPtr& u,
                          const nn::TensorPtr& r);

// Edit-grid probabilities as a [(n_ctx*n_utt), 3] tensor; each row sums to 1.
struct EditGridResult {
  nn::TensorPtr probs;
  int n_ctx = 0;
  int n_utt = 0;
};

// Pairwise feature map over (context token, incomplete token) states run
// through a depth-2 U-Net; the grid is zero-padded to multiples of 4 and
// cropped afterwards.
EditGridResult edit_grid(const Model& m, const nn::TensorPtr& hidden,
                         const corpus::EncodedExample& ex);

// Same computation with an explicit padded size (multiples of 4, at least as
// large as the default). Padding then stripping returns the probabilities of
// the minimally padded grid.
EditGridResult edit_grid(const Model& m, const nn::TensorPtr& hidden,
                         const corpus::EncodedExample& ex, int pad_rows, int pad_cols);

// Relevance merging in probability space with renormalization. `owner` maps
// each grid row (context token) to its utterance; r holds per-utterance
// relevance. SOFT adds alpha*r to INSERT and (1-alpha)*r to REPLACE; HARD
// zeroes INSERT and REPLACE mass in rows whose r is below tau; OFF is the
// identity.
nn::TensorPtr merge_relevance(const EditGridResult& grid, const nn::TensorPtr& relevance,
                              const std::vector<int>& owner, double alpha, MergeMode mode,
                              double tau);

// Same semantics on plain grids (inference/diagnostics path).
PredictedEditGrid merge_relevance(const PredictedEditGrid& grid, const std::vector<double>& r,
                                  const std::vector<int>& owner, double alpha, MergeMode mode,
                                  double tau);

PredictedEditGrid to_plain_grid(const EditGridResult& grid, bool merged_flag,
                                const nn::TensorPtr& probs);

struct IntentionPair {
  nn::TensorPtr p_ctx;  // softmax(MLP([C; u])), floored and renormalized
  nn::TensorPtr p_rw;   // softmax(MLP(r)), floored and renormalized
};

// C is the mean of the positive-set context vectors. positive_set must be
// non-empty.
IntentionPair intention_distributions(const Model& m, const std::vector<nn::TensorPtr>& context,
                                      const nn::TensorPtr& incomplete, const nn::TensorPtr& rewrite,
                                      const std::vector<int>& positive_set);

}  // namespace iur::heads
