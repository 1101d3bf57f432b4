#include "sae/data_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "sae/error.hpp"
#include "sae/text.hpp"

namespace sae {

using json = nlohmann::ordered_json;

std::string_view to_string(ReasoningType t) {
  return t == ReasoningType::Bridge ? "bridge" : "comparison";
}

std::string_view to_string(AnswerType t) {
  switch (t) {
    case AnswerType::Span: return "span";
    case AnswerType::Yes: return "yes";
    case AnswerType::No: return "no";
  }
  return "span";
}

AnswerType Example::answer_type() const {
  const std::string norm = normalize_answer(answer);
  if (norm == "yes") return AnswerType::Yes;
  if (norm == "no") return AnswerType::No;
  return AnswerType::Span;
}

bool Example::is_support(const std::string& title, int sentence) const {
  return std::binary_search(supporting_facts.begin(), supporting_facts.end(),
                            SupportingFact{title, sentence});
}

std::vector<std::size_t> Example::gold_documents() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < documents.size(); ++i)
    if (documents[i].gold) out.push_back(i);
  return out;
}

void validate_example(const Example& ex) {
  if (ex.documents.empty())
    throw ValidationError("example '" + ex.id + "' has no documents", ex.id);
  if (std::adjacent_find(ex.supporting_facts.begin(), ex.supporting_facts.end(),
                         [](const auto& a, const auto& b) { return !(a < b); }) != ex.supporting_facts.end())
    throw ValidationError("example '" + ex.id + "': supporting facts must be sorted and unique", ex.id);
  for (const auto& fact : ex.supporting_facts) {
    std::size_t matches = 0;
    const Document* doc = nullptr;
    for (const auto& d : ex.documents) {
      if (d.title == fact.title) {
        ++matches;
        doc = &d;
      }
    }
    if (matches == 0)
      throw ValidationError("example '" + ex.id + "': supporting fact references unknown title '" +
                                fact.title + "'",
                            ex.id);
    if (matches > 1)
      throw ValidationError("example '" + ex.id + "': supporting fact title '" + fact.title +
                                "' matches several documents",
                            ex.id);
    if (fact.sentence < 0 || static_cast<std::size_t>(fact.sentence) >= doc->sentences.size())
      throw ValidationError("example '" + ex.id + "': supporting fact ('" + fact.title + "', " +
                                std::to_string(fact.sentence) + ") is out of range",
                            ex.id);
  }
  if (ex.labels_derived) {
    for (const auto& d : ex.documents) {
      if (d.score < 0 || d.score > 2 || (d.score == 2 && !d.gold) || (d.gold != (d.score > 0)))
        throw ValidationError("example '" + ex.id + "': inconsistent derived label on '" + d.title + "'",
                              ex.id);
    }
  }
}

namespace {

Example example_from_json(const json& obj, std::size_t position) {
  if (!obj.is_object())
    throw ValidationError("dataset entry " + std::to_string(position) + " is not an object", "");
  Example ex;
  ex.id = obj.at("_id").get<std::string>();
  ex.question = obj.at("question").get<std::string>();
  if (auto it = obj.find("answer"); it != obj.end()) ex.answer = it->get<std::string>();
  if (auto it = obj.find("type"); it != obj.end()) {
    const auto t = it->get<std::string>();
    if (t == "bridge") ex.reasoning_type = ReasoningType::Bridge;
    else if (t == "comparison") ex.reasoning_type = ReasoningType::Comparison;
    else throw ValidationError("example '" + ex.id + "': unknown reasoning type '" + t + "'", ex.id);
  }
  if (auto it = obj.find("level"); it != obj.end() && !it->is_null())
    ex.difficulty = it->get<std::string>();
  for (const auto& pair : obj.at("context")) {
    Document d;
    d.title = pair.at(0).get<std::string>();
    d.sentences = pair.at(1).get<std::vector<std::string>>();
    ex.documents.push_back(std::move(d));
  }
  if (auto it = obj.find("supporting_facts"); it != obj.end()) {
    for (const auto& f : *it)
      ex.supporting_facts.push_back({f.at(0).get<std::string>(), f.at(1).get<int>()});
  }
  std::sort(ex.supporting_facts.begin(), ex.supporting_facts.end());
  ex.supporting_facts.erase(std::unique(ex.supporting_facts.begin(), ex.supporting_facts.end()),
                            ex.supporting_facts.end());
  if (auto it = obj.find("derived"); it != obj.end()) {
    const auto gold = it->at("gold").get<std::vector<int>>();
    const auto score = it->at("score").get<std::vector<int>>();
    if (gold.size() != ex.documents.size() || score.size() != ex.documents.size())
      throw ValidationError("example '" + ex.id + "': derived labels do not match document count", ex.id);
    for (std::size_t i = 0; i < ex.documents.size(); ++i) {
      ex.documents[i].gold = gold[i] != 0;
      ex.documents[i].score = score[i];
    }
    ex.answer_unlocated = it->value("answer_unlocated", false);
    ex.labels_derived = true;
  }
  return ex;
}

json example_to_json(const Example& ex) {
  json obj;
  obj["_id"] = ex.id;
  obj["question"] = ex.question;
  obj["answer"] = ex.answer;
  json facts = json::array();
  for (const auto& f : ex.supporting_facts) facts.push_back(json::array({f.title, f.sentence}));
  obj["supporting_facts"] = std::move(facts);
  json context = json::array();
  for (const auto& d : ex.documents) context.push_back(json::array({d.title, d.sentences}));
  obj["context"] = std::move(context);
  obj["type"] = std::string(to_string(ex.reasoning_type));
  if (ex.difficulty) obj["level"] = *ex.difficulty;
  if (ex.labels_derived) {
    json derived;
    std::vector<int> gold, score;
    for (const auto& d : ex.documents) {
      gold.push_back(d.gold ? 1 : 0);
      score.push_back(d.score);
    }
    derived["gold"] = gold;
    derived["score"] = score;
    derived["answer_type"] = std::string(to_string(ex.answer_type()));
    derived["answer_unlocated"] = ex.answer_unlocated;
    obj["derived"] = std::move(derived);
  }
  return obj;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Example> parse_dataset(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed dataset JSON: ") + e.what(), e.byte);
  }
  if (!root.is_array()) throw ParseError("dataset JSON must be a list of examples", 0);
  std::vector<Example> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    Example ex;
    try {
      ex = example_from_json(root[i], i);
    } catch (const json::exception& e) {
      std::string id = root[i].is_object() ? root[i].value("_id", std::string{}) : std::string{};
      throw ValidationError("dataset entry " + std::to_string(i) + " ('" + id + "'): " + e.what(), id);
    }
    validate_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::string serialize_dataset(const std::vector<Example>& examples) {
  json root = json::array();
  for (const auto& ex : examples) root.push_back(example_to_json(ex));
  return root.dump();
}

void save_dataset(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << serialize_dataset(examples);
}

std::vector<std::pair<std::size_t, std::size_t>> find_answer_occurrences(std::string_view sentence,
                                                                         std::string_view answer) {
  struct Word {
    std::string norm;
    std::size_t begin, end;
  };
  auto words_of = [](std::string_view text) {
    std::vector<Word> words;
    for (auto& tok : tokenize(text)) {
      auto norm = normalize_token(tok.text);
      if (!norm.empty()) words.push_back({std::move(norm), tok.begin, tok.end});
    }
    return words;
  };
  const auto needle = words_of(answer);
  const auto hay = words_of(sentence);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) ok = hay[i + k].norm == needle[k].norm;
    if (ok) out.emplace_back(hay[i].begin, hay[i + needle.size() - 1].end);
  }
  return out;
}

Example derive_gold_labels(Example ex) {
  for (auto& d : ex.documents) {
    d.gold = false;
    d.score = 0;
  }
  for (const auto& f : ex.supporting_facts)
    for (auto& d : ex.documents)
      if (d.title == f.title) d.gold = true;
  for (auto& d : ex.documents)
    if (d.gold) d.score = 1;
  ex.answer_unlocated = false;
  ex.labels_derived = true;

  const auto gold = ex.gold_documents();
  if (gold.size() != 2)
    spdlog::debug("example '{}' has {} gold documents", ex.id, gold.size());
  if (ex.answer_type() != AnswerType::Span) return ex;

  // First gold doc with the answer inside a supporting sentence, else first
  // gold doc containing it anywhere.
  std::optional<std::size_t> in_support, anywhere;
  for (std::size_t i : gold) {
    const auto& d = ex.documents[i];
    for (std::size_t s = 0; s < d.sentences.size(); ++s) {
      if (find_answer_occurrences(d.sentences[s], ex.answer).empty()) continue;
      if (!anywhere) anywhere = i;
      if (!in_support && ex.is_support(d.title, static_cast<int>(s))) in_support = i;
    }
  }
  if (auto chosen = in_support ? in_support : anywhere) {
    ex.documents[*chosen].score = 2;
  } else {
    ex.answer_unlocated = true;
    spdlog::warn("example '{}': span answer '{}' not found in any gold document", ex.id, ex.answer);
  }
  return ex;
}

AnswerLabel locate_answer_span(const Example& ex, const TokenMatrix& tokens) {
  AnswerLabel label;
  label.type = ex.answer_type();
  if (label.type != AnswerType::Span) return label;

  struct Candidate {
    int start, end, doc;
  };
  std::optional<Candidate> first_support, first_any;
  for (const auto& span : tokens.sentence_spans) {
    const auto& doc = ex.documents.at(static_cast<std::size_t>(span.doc));
    const auto& text = doc.sentences.at(static_cast<std::size_t>(span.sentence));
    const bool support = ex.is_support(doc.title, span.sentence);
    if (first_support || (first_any && !support)) continue;
    for (auto [cb, ce] : find_answer_occurrences(text, ex.answer)) {
      int start = -1, end = -1;
      for (int t = span.begin; t < span.end; ++t) {
        const auto& cs = tokens.char_spans[static_cast<std::size_t>(t)];
        if (cs.begin < 0) continue;
        const auto b = static_cast<std::size_t>(cs.begin), e = static_cast<std::size_t>(cs.end);
        if (e > cb && b < ce) {
          if (start < 0) start = t;
          end = t;
        }
      }
      if (start < 0) continue;  // occurrence cut off by truncation
      Candidate c{start, end, span.doc};
      if (!first_any) first_any = c;
      if (support && !first_support) first_support = c;
      break;
    }
  }
  if (auto c = first_support ? first_support : first_any) {
    label.start = c->start;
    label.end = c->end;
    label.source_doc = c->doc;
  }
  return label;
}

std::string decode_span_text(const Example& ex, const TokenMatrix& tokens, int start, int end) {
  std::string out;
  int t = start;
  while (t <= end) {
    const int s = sentence_of_token(tokens, t);
    if (s < 0 || tokens.char_spans[static_cast<std::size_t>(t)].begin < 0) {
      if (!out.empty()) out.push_back(' ');
      out += tokens.tokens[static_cast<std::size_t>(t)];
      ++t;
      continue;
    }
    const auto& span = tokens.sentence_spans[static_cast<std::size_t>(s)];
    const int last = std::min(end, span.end - 1);
    int b = -1, e = -1;
    for (int k = t; k <= last; ++k) {
      const auto& cs = tokens.char_spans[static_cast<std::size_t>(k)];
      if (cs.begin < 0) continue;
      if (b < 0) b = cs.begin;
      e = cs.end;
    }
    const auto& text = ex.documents.at(static_cast<std::size_t>(span.doc))
                           .sentences.at(static_cast<std::size_t>(span.sentence));
    if (!out.empty()) out.push_back(' ');
    out += text.substr(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b));
    t = last + 1;
  }
  return out;
}

}  // namespace sae
