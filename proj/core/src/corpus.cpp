#include "iur/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "iur/rng.hpp"

namespace iur::corpus {

using nlohmann::json;

TokenList tokenize(const std::string& text) {
  TokenList out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  for (unsigned char ch : text) {
    if (ch < 0x80 && std::isspace(ch)) {
      flush();
      continue;
    }
    if (ch < 0x80 && !std::isalnum(ch)) {
      flush();
      out.emplace_back(1, static_cast<char>(ch));
      continue;
    }
    current.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
  }
  flush();
  return out;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Utterance make_utterance(const std::string& text) { return Utterance{text, tokenize(text)}; }

TokenList Dialogue::context_tokens() const {
  TokenList out;
  for (const auto& utt : context) out.insert(out.end(), utt.tokens.begin(), utt.tokens.end());
  return out;
}

Vocab::Vocab() {
  add("<pad>");
  add("<sep>");
  add("<unk>");
}

Vocab Vocab::build(const std::vector<Dialogue>& dialogues) {
  std::set<std::string> seen;
  for (const auto& d : dialogues) {
    for (const auto& utt : d.context) seen.insert(utt.tokens.begin(), utt.tokens.end());
    seen.insert(d.incomplete.tokens.begin(), d.incomplete.tokens.end());
    if (d.rewrite) seen.insert(d.rewrite->tokens.begin(), d.rewrite->tokens.end());
  }
  Vocab v;
  for (const auto& tok : seen) v.add(tok);
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  if (tokens.size() < kReserved || tokens[0] != "<pad>" || tokens[1] != "<sep>" ||
      tokens[2] != "<unk>")
    throw std::invalid_argument("Vocab::from_tokens: reserved tokens missing or reordered");
  for (std::size_t i = kReserved; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size()))
    throw std::out_of_range("Vocab::token: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(const std::string& token) const { return index_.count(token) > 0; }

std::vector<int> Vocab::ids(const TokenList& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<int> EncodedExample::context_positions() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_context_tokens));
  for (std::size_t k = 0; k + 1 < segment_spans.size(); ++k)
    for (int p = segment_spans[k].first; p < segment_spans[k].second; ++p) out.push_back(p);
  return out;
}

std::vector<int> EncodedExample::context_owner() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_context_tokens));
  for (std::size_t k = 0; k + 1 < segment_spans.size(); ++k)
    for (int p = segment_spans[k].first; p < segment_spans[k].second; ++p)
      out.push_back(static_cast<int>(k));
  return out;
}

std::vector<int> EncodedExample::incomplete_positions() const {
  std::vector<int> out;
  for (int p = segment_spans.back().first; p < segment_spans.back().second; ++p) out.push_back(p);
  return out;
}

EncodedExample encode_example(const Dialogue& d, const Vocab& v) {
  if (d.context.empty()) throw std::invalid_argument("encode_example: dialogue has no context");
  EncodedExample ex;
  for (const auto& utt : d.context) {
    const int start = ex.length();
    for (const auto& tok : utt.tokens) ex.token_ids.push_back(v.id(tok));
    ex.segment_spans.emplace_back(start, ex.length());
    ex.n_context_tokens += static_cast<int>(utt.tokens.size());
    ex.token_ids.push_back(Vocab::kSep);
  }
  const int start = ex.length();
  for (const auto& tok : d.incomplete.tokens) ex.token_ids.push_back(v.id(tok));
  ex.segment_spans.emplace_back(start, ex.length());
  ex.n_incomplete_tokens = static_cast<int>(d.incomplete.tokens.size());
  return ex;
}

namespace {

[[noreturn]] void line_error(const std::string& path, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  throw std::runtime_error(os.str());
}

Utterance parse_utterance(const std::string& text, const std::string& path, std::size_t line_no,
                          const std::string& id, const char* field) {
  Utterance utt = make_utterance(text);
  if (utt.tokens.empty())
    line_error(path, line_no, std::string("empty ") + field + " utterance in dialogue '" + id + "'");
  return utt;
}

}  // namespace

std::vector<Dialogue> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_jsonl: cannot open " + path);
  std::vector<Dialogue> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) line_error(path, line_no, "malformed JSON record");
    if (!rec.contains("context") || !rec["context"].is_array())
      line_error(path, line_no, "missing or non-array \"context\"");
    if (!rec.contains("incomplete") || !rec["incomplete"].is_string())
      line_error(path, line_no, "missing or non-string \"incomplete\"");

    Dialogue d;
    d.id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                       : std::to_string(line_no);
    if (rec["context"].empty())
      line_error(path, line_no, "empty context in dialogue '" + d.id + "'");
    for (const auto& c : rec["context"]) {
      if (!c.is_string()) line_error(path, line_no, "non-string context entry in '" + d.id + "'");
      d.context.push_back(parse_utterance(c.get<std::string>(), path, line_no, d.id, "context"));
    }
    d.incomplete =
        parse_utterance(rec["incomplete"].get<std::string>(), path, line_no, d.id, "incomplete");
    if (rec.contains("rewrite")) {
      if (!rec["rewrite"].is_string()) line_error(path, line_no, "non-string \"rewrite\"");
      d.rewrite = parse_utterance(rec["rewrite"].get<std::string>(), path, line_no, d.id, "rewrite");
    }
    out.push_back(std::move(d));
  }
  return out;
}

void save_jsonl(const std::vector<Dialogue>& dialogues, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_jsonl: cannot open " + path);
  for (const auto& d : dialogues) {
    json rec;
    rec["id"] = d.id;
    rec["context"] = json::array();
    for (const auto& utt : d.context) rec["context"].push_back(utt.text);
    rec["incomplete"] = d.incomplete.text;
    if (d.rewrite) rec["rewrite"] = d.rewrite->text;
    out << rec.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kNames = {"tom",  "anna", "liam", "mia", "omar",
                                         "ruth", "noah", "eva",  "sam", "lily"};
const std::vector<std::string> kTopics = {"jazz",    "chess",    "math",    "poetry",
                                          "soccer",  "piano",    "physics", "painting",
                                          "cooking", "history",  "astronomy", "sailing"};
const std::vector<std::string> kVerbs = {"likes", "plays", "studies", "enjoys", "teaches",
                                         "practices"};
const std::vector<std::string> kBaseVerbs = {"play", "study", "learn", "try"};
const std::vector<std::string> kPlaces = {"paris", "tokyo", "oslo", "cairo", "lima", "delhi"};
const std::vector<std::string> kAdjs = {"old", "red", "small", "noisy", "fancy"};
const std::vector<std::string> kNouns = {"car", "violin", "garden", "robot", "bicycle", "kettle"};
const std::vector<std::string> kPronouns = {"he", "she"};

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng.next_below(pool.size())];
}

struct Draft {
  std::vector<std::string> context;  // utterance texts
  std::string incomplete;
  std::string rewrite;
};

std::string distractor_sentence(Rng& rng, const std::set<std::string>& forbidden) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::string s;
    switch (rng.next_below(3)) {
      case 0:
        s = pick(rng, kNames) + " lives in " + pick(rng, kPlaces) + " .";
        break;
      case 1:
        s = "weather in " + pick(rng, kPlaces) + " stays mild .";
        break;
      default:
        s = pick(rng, kNames) + " called again last night .";
        break;
    }
    bool clean = true;
    for (const auto& tok : tokenize(s))
      if (forbidden.count(tok)) {
        clean = false;
        break;
      }
    if (clean) return s;
  }
  return "someone waved from across street .";
}

// Words present in the rewrite but not in the incomplete utterance; the
// distractor turns must avoid all of them.
std::set<std::string> restored_set(const Draft& d) {
  TokenList inc = tokenize(d.incomplete);
  std::set<std::string> out;
  std::multiset<std::string> have(inc.begin(), inc.end());
  for (const auto& tok : tokenize(d.rewrite)) {
    auto it = have.find(tok);
    if (it != have.end())
      have.erase(it);
    else
      out.insert(tok);
  }
  return out;
}

Draft draft_insert_topic(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string verb = pick(rng, kVerbs);
  const std::string topic = pick(rng, kTopics);
  d.context = {name + " " + verb + " " + topic + " ."};
  static const std::vector<std::string> stems = {"why ?", "since when ?", "how come ?"};
  const std::string& stem = stems[rng.next_below(stems.size())];
  d.incomplete = stem;
  d.rewrite = stem.substr(0, stem.size() - 1) + topic + " ?";
  return d;
}

Draft draft_insert_phrase(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string adj = pick(rng, kAdjs);
  const std::string noun = pick(rng, kNouns);
  d.context = {name + " bought the " + adj + " " + noun + " ."};
  static const std::vector<std::string> stems = {"why ?", "how come ?"};
  const std::string& stem = stems[rng.next_below(stems.size())];
  d.incomplete = stem;
  d.rewrite = stem.substr(0, stem.size() - 1) + "the " + adj + " " + noun + " ?";
  return d;
}

Draft draft_replace_pronoun(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string verb = pick(rng, kVerbs);
  const std::string topic = pick(rng, kTopics);
  const std::string pron = pick(rng, kPronouns);
  d.context = {name + " " + verb + " " + topic + " ."};
  switch (rng.next_below(3)) {
    case 0:
      d.incomplete = "does " + pron + " travel often ?";
      d.rewrite = "does " + name + " travel often ?";
      break;
    case 1:
      d.incomplete = pron + " seems busy today .";
      d.rewrite = name + " seems busy today .";
      break;
    default:
      d.incomplete = "when did " + pron + " start ?";
      d.rewrite = "when did " + name + " start ?";
      break;
  }
  return d;
}

Draft draft_replace_phrase(Rng& rng) {
  Draft d;
  const std::string adj = pick(rng, kAdjs);
  const std::string noun = pick(rng, kNouns);
  d.context = {"the " + adj + " " + noun + " arrived yesterday ."};
  switch (rng.next_below(3)) {
    case 0:
      d.incomplete = "it broke down .";
      d.rewrite = "the " + adj + " " + noun + " broke down .";
      break;
    case 1:
      d.incomplete = "was it expensive ?";
      d.rewrite = "was the " + adj + " " + noun + " expensive ?";
      break;
    default:
      d.incomplete = "it looks great .";
      d.rewrite = "the " + adj + " " + noun + " looks great .";
      break;
  }
  return d;
}

Draft draft_both(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string bverb = pick(rng, kBaseVerbs);
  const std::string topic = pick(rng, kTopics);
  const std::string pron = pick(rng, kPronouns);
  d.context = {name + " will " + bverb + " " + topic + " ."};
  d.incomplete = "when will " + pron + " ?";
  d.rewrite = "when will " + name + " " + bverb + " " + topic + " ?";
  return d;
}

Draft draft_two_sources(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string verb = pick(rng, kVerbs);
  const std::string topic = pick(rng, kTopics);
  d.context = {topic + " sounds fun .", name + " " + verb + " " + topic + " ."};
  d.incomplete = "why ?";
  d.rewrite = "why " + topic + " ?";
  return d;
}

Draft draft_no_edit(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  const std::string verb = pick(rng, kVerbs);
  const std::string topic = pick(rng, kTopics);
  d.context = {name + " " + verb + " " + topic + " ."};
  static const std::vector<std::string> turns = {"thanks a lot .", "sounds good to me .",
                                                 "that makes sense ."};
  d.incomplete = turns[rng.next_below(turns.size())];
  d.rewrite = d.incomplete;
  return d;
}

// The restored span exists token-by-token in context but never contiguously in
// the rewrite's order, so grid alignment cannot reproduce it.
Draft draft_unalignable(Rng& rng) {
  Draft d;
  const std::string name = pick(rng, kNames);
  if (rng.next_below(2) == 0) {
    d.context = {name + " brews green tea daily ."};
    d.incomplete = "why ?";
    d.rewrite = "why tea green ?";
  } else {
    d.context = {name + " bakes brown bread weekly ."};
    d.incomplete = "why ?";
    d.rewrite = "why bread brown ?";
  }
  return d;
}

}  // namespace

std::vector<Dialogue> make_synthetic_corpus(std::uint64_t seed, std::size_t size) {
  if (size < 1) throw std::invalid_argument("make_synthetic_corpus: size must be >= 1");
  Rng rng(mix_seed(seed, 0x5e7a));
  std::vector<Dialogue> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double kind = rng.next_real();
    Draft draft;
    if (kind < 0.22)
      draft = draft_insert_topic(rng);
    else if (kind < 0.37)
      draft = draft_insert_phrase(rng);
    else if (kind < 0.59)
      draft = draft_replace_pronoun(rng);
    else if (kind < 0.74)
      draft = draft_replace_phrase(rng);
    else if (kind < 0.83)
      draft = draft_both(rng);
    else if (kind < 0.90)
      draft = draft_two_sources(rng);
    else if (kind < 0.98)
      draft = draft_no_edit(rng);
    else
      draft = draft_unalignable(rng);

    const std::set<std::string> forbidden = restored_set(draft);
    int n_distractors = 0;
    const double roll = rng.next_real();
    if (roll < 0.55) n_distractors = 1;
    if (roll < 0.25) n_distractors = 2;
    for (int k = 0; k < n_distractors; ++k) {
      const std::string sentence = distractor_sentence(rng, forbidden);
      const std::size_t pos = rng.next_below(draft.context.size() + 1);
      draft.context.insert(draft.context.begin() + static_cast<std::ptrdiff_t>(pos), sentence);
    }

    Dialogue d;
    std::ostringstream id;
    id << "synth-" << std::setfill('0') << std::setw(6) << i;
    d.id = id.str();
    for (const auto& text : draft.context) d.context.push_back(make_utterance(text));
    d.incomplete = make_utterance(draft.incomplete);
    d.rewrite = make_utterance(draft.rewrite);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace iur::corpus
