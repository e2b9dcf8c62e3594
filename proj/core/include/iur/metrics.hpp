#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "iur/corpus.hpp"

namespace iur::metrics {

struct MetricsReport {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double f1 = 0.0;  // restoration F-score over n-grams of order 1..3
  double f2 = 0.0;
  double f3 = 0.0;
  double exact_match = 0.0;
  std::size_t n_examples = 0;
  bool bleu_smoothed = false;  // add-one smoothing kicked in for some order
};

// Corpus BLEU with brevity penalty and uniform weights over orders 1..max_n.
// With add_one_smoothing, an order with zero matches contributes
// (num+1)/(den+1); *smoothed reports whether that happened.
double corpus_bleu(const std::vector<corpus::TokenList>& preds,
                   const std::vector<corpus::TokenList>& refs, int max_n,
                   bool add_one_smoothing = false, bool* smoothed = nullptr);

// Single-pair BLEU-n without smoothing. n in {1, 2}.
double bleu_n(const corpus::TokenList& pred, const corpus::TokenList& ref, int n);

// ROUGE-N as the F1 of clipped n-gram overlap.
double rouge_n(const corpus::TokenList& pred, const corpus::TokenList& ref, int n);

// ROUGE-L as the F1 derived from the LCS length.
double rouge_l(const corpus::TokenList& pred, const corpus::TokenList& ref);

// Restoration F-score of order n in {1,2,3}: F1 over the n-grams that contain
// at least one restored word (tokens of ref resp. pred minus tokens of the
// incomplete utterance, as multisets). nullopt when the reference restores
// nothing; such examples are excluded from corpus averages.
std::optional<double> restoration_fscore(const corpus::TokenList& pred,
                                         const corpus::TokenList& incomplete,
                                         const corpus::TokenList& ref, int n);

// Full report over aligned prediction/reference/incomplete triples. BLEU is
// corpus-level with add-one smoothing; ROUGE and restoration F are averaged
// per example.
MetricsReport evaluate(const std::vector<corpus::TokenList>& preds,
                       const std::vector<corpus::TokenList>& refs,
                       const std::vector<corpus::TokenList>& incompletes);

}  // namespace iur::metrics
