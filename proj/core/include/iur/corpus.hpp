#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace iur::corpus {

using TokenList = std::vector<std::string>;

// Lowercased whitespace split with every ASCII punctuation character detached
// as its own token. Bytes >= 0x80 are kept verbatim so multi-byte UTF-8
// sequences stay intact.
TokenList tokenize(const std::string& text);

// Joins tokens with single spaces. tokenize(join_tokens(t)) == t for any t
// produced by tokenize.
std::string join_tokens(const TokenList& tokens);

struct Utterance {
  std::string text;
  TokenList tokens;
};

Utterance make_utterance(const std::string& text);

// One training/eval example: context turns, the incomplete utterance, and an
// optional gold rewrite.
struct Dialogue {
  std::string id;
  std::vector<Utterance> context;  // n >= 1
  Utterance incomplete;
  std::optional<Utterance> rewrite;

  std::size_t context_size() const { return context.size(); }
  // All context tokens flattened in utterance order.
  TokenList context_tokens() const;
};

// Token <-> id bijection with reserved ids below all data tokens.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSep = 1;
  static constexpr int kUnk = 2;
  static constexpr int kReserved = 3;

  Vocab();

  // Builds a vocab over every token in the given dialogues (contexts,
  // incomplete utterances and rewrites). Data tokens are sorted so ids are
  // deterministic regardless of corpus order.
  static Vocab build(const std::vector<Dialogue>& dialogues);

  // Rebuilds a vocab from a serialized token list (reserved tokens first).
  static Vocab from_tokens(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  // kUnk for unseen tokens.
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& all_tokens() const { return tokens_; }

  std::vector<int> ids(const TokenList& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Concatenated model input: [ctx_1, SEP, ctx_2, SEP, ..., ctx_n, SEP, incomplete].
struct EncodedExample {
  std::vector<int> token_ids;
  // Per-utterance [start, end) ranges over token_ids, contexts first, the
  // incomplete utterance last. Spans are disjoint, ordered and cover exactly
  // the non-SEP positions.
  std::vector<std::pair<int, int>> segment_spans;
  int n_context_tokens = 0;     // N_C
  int n_incomplete_tokens = 0;  // N_U

  int length() const { return static_cast<int>(token_ids.size()); }
  const std::pair<int, int>& incomplete_span() const { return segment_spans.back(); }
  // Sequence position of each context token, in context order.
  std::vector<int> context_positions() const;
  // Owning context-utterance index for each context token.
  std::vector<int> context_owner() const;
  std::vector<int> incomplete_positions() const;
};

EncodedExample encode_example(const Dialogue& d, const Vocab& v);

// Reads dialogues from UTF-8 JSON Lines. Record shape:
//   {"id": string (optional), "context": [string, ...],
//    "incomplete": string, "rewrite": string (optional)}
// Malformed lines raise with the 1-based line number; an empty context or an
// empty utterance raises with the record id.
std::vector<Dialogue> load_jsonl(const std::string& path);

void save_jsonl(const std::vector<Dialogue>& dialogues, const std::string& path);

// Deterministic synthetic corpus with ellipsis and coreference patterns,
// distractor turns, and a small share of deliberately unalignable rewrites.
std::vector<Dialogue> make_synthetic_corpus(std::uint64_t seed, std::size_t size);

}  // namespace iur::corpus
