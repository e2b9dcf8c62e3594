#include "iur/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace iur::metrics {

namespace {

using corpus::TokenList;

// n-grams keyed by tokens joined with an unprintable separator.
std::unordered_map<std::string, int> ngram_counts(const TokenList& tokens, int n) {
  std::unordered_map<std::string, int> out;
  if (n <= 0 || static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++out[key];
  }
  return out;
}

long clipped_matches(const std::unordered_map<std::string, int>& pred,
                     const std::unordered_map<std::string, int>& ref) {
  long m = 0;
  for (const auto& [key, count] : pred) {
    auto it = ref.find(key);
    if (it != ref.end()) m += std::min(count, it->second);
  }
  return m;
}

int lcs_length(const TokenList& a, const TokenList& b) {
  const std::size_t n = b.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j)
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    std::swap(prev, cur);
  }
  return prev[n];
}

double f1(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

std::vector<std::string> multiset_difference(const TokenList& a, const TokenList& b) {
  std::unordered_map<std::string, int> remove;
  for (const auto& t : b) ++remove[t];
  std::vector<std::string> out;
  for (const auto& t : a) {
    auto it = remove.find(t);
    if (it != remove.end() && it->second > 0)
      --it->second;
    else
      out.push_back(t);
  }
  return out;
}

// n-gram counts restricted to n-grams containing at least one word of `words`.
std::unordered_map<std::string, int> restored_ngram_counts(const TokenList& tokens, int n,
                                                           const std::set<std::string>& words) {
  std::unordered_map<std::string, int> out;
  if (n <= 0 || static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    bool has_restored = false;
    std::string key;
    for (int k = 0; k < n; ++k) {
      const auto& tok = tokens[i + static_cast<std::size_t>(k)];
      if (words.count(tok)) has_restored = true;
      if (k) key += '\x1f';
      key += tok;
    }
    if (has_restored) ++out[key];
  }
  return out;
}

long total_count(const std::unordered_map<std::string, int>& counts) {
  long t = 0;
  for (const auto& [_, c] : counts) t += c;
  return t;
}

}  // namespace

double corpus_bleu(const std::vector<TokenList>& preds, const std::vector<TokenList>& refs,
                   int max_n, bool add_one_smoothing, bool* smoothed) {
  if (refs.empty()) throw std::invalid_argument("corpus_bleu: empty reference set");
  if (preds.size() != refs.size())
    throw std::invalid_argument("corpus_bleu: prediction/reference count mismatch");
  if (max_n < 1) throw std::invalid_argument("corpus_bleu: order must be >= 1");

  if (smoothed) *smoothed = false;
  long pred_len = 0, ref_len = 0;
  std::vector<long> num(static_cast<std::size_t>(max_n), 0), den(static_cast<std::size_t>(max_n), 0);
  for (std::size_t e = 0; e < preds.size(); ++e) {
    pred_len += static_cast<long>(preds[e].size());
    ref_len += static_cast<long>(refs[e].size());
    for (int k = 1; k <= max_n; ++k) {
      const auto pc = ngram_counts(preds[e], k);
      const auto rc = ngram_counts(refs[e], k);
      num[static_cast<std::size_t>(k - 1)] += clipped_matches(pc, rc);
      den[static_cast<std::size_t>(k - 1)] += total_count(pc);
    }
  }

  double log_sum = 0.0;
  for (int k = 0; k < max_n; ++k) {
    double nk = static_cast<double>(num[static_cast<std::size_t>(k)]);
    double dk = static_cast<double>(den[static_cast<std::size_t>(k)]);
    if (nk == 0.0 && add_one_smoothing) {
      nk += 1.0;
      dk += 1.0;
      if (smoothed) *smoothed = true;
    }
    if (nk == 0.0 || dk == 0.0) return 0.0;
    log_sum += std::log(nk / dk) / static_cast<double>(max_n);
  }
  if (pred_len == 0) return 0.0;
  const double bp =
      pred_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(pred_len));
  return bp * std::exp(log_sum);
}

double bleu_n(const TokenList& pred, const TokenList& ref, int n) {
  if (n < 1 || n > 2) throw std::invalid_argument("bleu_n: order must be 1 or 2");
  return corpus_bleu({pred}, {ref}, n, /*add_one_smoothing=*/false);
}

double rouge_n(const TokenList& pred, const TokenList& ref, int n) {
  const auto pc = ngram_counts(pred, n);
  const auto rc = ngram_counts(ref, n);
  const long m = clipped_matches(pc, rc);
  const long pt = total_count(pc), rt = total_count(rc);
  const double precision = pt > 0 ? static_cast<double>(m) / static_cast<double>(pt) : 0.0;
  const double recall = rt > 0 ? static_cast<double>(m) / static_cast<double>(rt) : 0.0;
  return f1(precision, recall);
}

double rouge_l(const TokenList& pred, const TokenList& ref) {
  if (pred.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(pred, ref));
  return f1(lcs / static_cast<double>(pred.size()), lcs / static_cast<double>(ref.size()));
}

std::optional<double> restoration_fscore(const TokenList& pred, const TokenList& incomplete,
                                         const TokenList& ref, int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("restoration_fscore: order must be in {1,2,3}");
  const auto ref_restored = multiset_difference(ref, incomplete);
  if (ref_restored.empty()) return std::nullopt;
  const std::set<std::string> ref_words(ref_restored.begin(), ref_restored.end());
  const auto pred_restored = multiset_difference(pred, incomplete);
  const std::set<std::string> pred_words(pred_restored.begin(), pred_restored.end());

  const auto rc = restored_ngram_counts(ref, n, ref_words);
  const auto pc = restored_ngram_counts(pred, n, pred_words);
  const long m = clipped_matches(pc, rc);
  const long pt = total_count(pc), rt = total_count(rc);
  const double precision = pt > 0 ? static_cast<double>(m) / static_cast<double>(pt) : 0.0;
  const double recall = rt > 0 ? static_cast<double>(m) / static_cast<double>(rt) : 0.0;
  return f1(precision, recall);
}

MetricsReport evaluate(const std::vector<TokenList>& preds, const std::vector<TokenList>& refs,
                       const std::vector<TokenList>& incompletes) {
  if (refs.empty()) throw std::invalid_argument("evaluate: empty reference set");
  if (preds.size() != refs.size() || incompletes.size() != refs.size())
    throw std::invalid_argument("evaluate: input size mismatch");

  MetricsReport rep;
  rep.n_examples = refs.size();
  rep.bleu1 = corpus_bleu(preds, refs, 1, true, &rep.bleu_smoothed);
  bool smoothed2 = false;
  rep.bleu2 = corpus_bleu(preds, refs, 2, true, &smoothed2);
  rep.bleu_smoothed = rep.bleu_smoothed || smoothed2;

  double r1 = 0, r2 = 0, rl = 0, em = 0;
  double f_sum[3] = {0, 0, 0};
  std::size_t f_count[3] = {0, 0, 0};
  for (std::size_t e = 0; e < refs.size(); ++e) {
    r1 += rouge_n(preds[e], refs[e], 1);
    r2 += rouge_n(preds[e], refs[e], 2);
    rl += rouge_l(preds[e], refs[e]);
    if (preds[e] == refs[e]) em += 1.0;
    for (int n = 1; n <= 3; ++n) {
      if (auto f = restoration_fscore(preds[e], incompletes[e], refs[e], n)) {
        f_sum[n - 1] += *f;
        ++f_count[n - 1];
      }
    }
  }
  const double count = static_cast<double>(refs.size());
  rep.rouge1 = r1 / count;
  rep.rouge2 = r2 / count;
  rep.rougeL = rl / count;
  rep.exact_match = em / count;
  rep.f1 = f_count[0] ? f_sum[0] / static_cast<double>(f_count[0]) : 0.0;
  rep.f2 = f_count[1] ? f_sum[1] / static_cast<double>(f_count[1]) : 0.0;
  rep.f3 = f_count[2] ? f_sum[2] / static_cast<double>(f_count[2]) : 0.0;
  return rep;
}

}  // namespace iur::metrics
