#pragma once

// Brute-force reference implementations for the n-gram metrics, kept separate
// from the library code paths on purpose: std::map n-gram dictionaries, a
// full-table LCS, std::multiset differences. Used only by tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline std::map<Tokens, int> ngram_dict(const Tokens& t, int n) {
  std::map<Tokens, int> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i)
    ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i),
                 t.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return out;
}

inline double corpus_bleu(const std::vector<Tokens>& preds, const std::vector<Tokens>& refs,
                          int order, bool add_one) {
  long plen = 0, rlen = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    plen += static_cast<long>(preds[e].size());
    rlen += static_cast<long>(refs[e].size());
  }
  double log_sum = 0.0;
  for (int k = 1; k <= order; ++k) {
    long num = 0, den = 0;
    for (std::size_t e = 0; e < preds.size(); ++e) {
      const auto pn = ngram_dict(preds[e], k);
      const auto rn = ngram_dict(refs[e], k);
      for (const auto& [gram, count] : pn) {
        den += count;
        auto it = rn.find(gram);
        if (it != rn.end()) num += std::min(count, it->second);
      }
    }
    double nk = static_cast<double>(num), dk = static_cast<double>(den);
    if (num == 0 && add_one) {
      nk += 1.0;
      dk += 1.0;
    }
    if (nk == 0.0 || dk == 0.0) return 0.0;
    log_sum += std::log(nk / dk) / order;
  }
  if (plen == 0) return 0.0;
  const double bp =
      plen >= rlen ? 1.0 : std::exp(1.0 - static_cast<double>(rlen) / static_cast<double>(plen));
  return bp * std::exp(log_sum);
}

inline double bleu_pair(const Tokens& pred, const Tokens& ref, int order) {
  return corpus_bleu({pred}, {ref}, order, false);
}

inline int lcs_table(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<int>> dp(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                      : std::max(dp[i - 1][j], dp[i][j - 1]);
  return dp[a.size()][b.size()];
}

inline double fscore(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

inline double rouge_n(const Tokens& pred, const Tokens& ref, int n) {
  const auto pn = ngram_dict(pred, n);
  const auto rn = ngram_dict(ref, n);
  long match = 0, ptotal = 0, rtotal = 0;
  for (const auto& [gram, count] : pn) {
    ptotal += count;
    auto it = rn.find(gram);
    if (it != rn.end()) match += std::min(count, it->second);
  }
  for (const auto& [_, count] : rn) rtotal += count;
  const double p = ptotal ? static_cast<double>(match) / static_cast<double>(ptotal) : 0.0;
  const double r = rtotal ? static_cast<double>(match) / static_cast<double>(rtotal) : 0.0;
  return fscore(p, r);
}

inline double rouge_l(const Tokens& pred, const Tokens& ref) {
  if (pred.empty() || ref.empty()) return 0.0;
  const double l = lcs_table(pred, ref);
  return fscore(l / static_cast<double>(pred.size()), l / static_cast<double>(ref.size()));
}

inline Tokens multiset_diff(const Tokens& a, const Tokens& b) {
  std::multiset<std::string> pool(b.begin(), b.end());
  Tokens out;
  for (const auto& t : a) {
    auto it = pool.find(t);
    if (it != pool.end())
      pool.erase(it);
    else
      out.push_back(t);
  }
  return out;
}

inline std::optional<double> restoration_f(const Tokens& pred, const Tokens& incomplete,
                                           const Tokens& ref, int n) {
  const Tokens ref_restored = multiset_diff(ref, incomplete);
  if (ref_restored.empty()) return std::nullopt;
  const std::set<std::string> ref_words(ref_restored.begin(), ref_restored.end());
  const Tokens pred_restored = multiset_diff(pred, incomplete);
  const std::set<std::string> pred_words(pred_restored.begin(), pred_restored.end());

  auto restricted = [](const Tokens& t, int k, const std::set<std::string>& words) {
    std::map<Tokens, int> out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= t.size(); ++i) {
      Tokens gram(t.begin() + static_cast<std::ptrdiff_t>(i),
                  t.begin() + static_cast<std::ptrdiff_t>(i) + k);
      if (std::any_of(gram.begin(), gram.end(),
                      [&](const std::string& w) { return words.count(w) > 0; }))
        ++out[gram];
    }
    return out;
  };
  const auto pn = restricted(pred, n, pred_words);
  const auto rn = restricted(ref, n, ref_words);
  long match = 0, ptotal = 0, rtotal = 0;
  for (const auto& [gram, count] : pn) {
    ptotal += count;
    auto it = rn.find(gram);
    if (it != rn.end()) match += std::min(count, it->second);
  }
  for (const auto& [_, count] : rn) rtotal += count;
  const double p = ptotal ? static_cast<double>(match) / static_cast<double>(ptotal) : 0.0;
  const double r = rtotal ? static_cast<double>(match) / static_cast<double>(rtotal) : 0.0;
  return fscore(p, r);
}

// Random token sequences over a small alphabet; shared by metric fuzz tests.
template <typename RngT>
Tokens random_tokens(RngT& rng, std::size_t min_len, std::size_t max_len) {
  static const std::vector<std::string> kAlphabet = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const std::size_t len = min_len + rng.next_below(max_len - min_len + 1);
  Tokens out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i)
    out.push_back(kAlphabet[rng.next_below(kAlphabet.size())]);
  return out;
}

}  // namespace oracle
