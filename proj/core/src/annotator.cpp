#include "sae/annotator.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sae/data_model.hpp"
#include "sae/error.hpp"
#include "sae/text.hpp"

namespace sae {

MentionSet::MentionSet(std::vector<Mention> mentions) : mentions_(std::move(mentions)) {
  std::erase_if(mentions_, [](const Mention& m) { return m.key.empty(); });
  for (const auto& m : mentions_) keys_.push_back(m.key);
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
}

bool MentionSet::contains(std::string_view key) const {
  return std::binary_search(keys_.begin(), keys_.end(), key);
}

namespace {

bool is_word(const Token& t) {
  return !t.text.empty() && !is_punct(t.text.front());
}

bool is_capitalized(const Token& t) {
  return !t.text.empty() && std::isupper(static_cast<unsigned char>(t.text.front())) != 0;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_connector(const Token& t) {
  return t.text == "of" || t.text == "and" || t.text == "the";
}

void emit(std::string_view text, const std::vector<Token>& toks, std::size_t first, std::size_t last,
          std::vector<Mention>& out) {
  const std::size_t b = toks[first].begin, e = toks[last].end;
  out.push_back({normalize_mention(text.substr(b, e - b)), std::make_pair(b, e)});
}

}  // namespace

MentionSet annotate(std::string_view text) {
  const auto toks = tokenize(text);
  std::vector<Mention> out;
  const std::size_t n = toks.size();

  // Named entities: capitalized runs, connectors allowed only between
  // capitalized tokens, leading/trailing stopwords ("The", "What") trimmed.
  std::size_t i = 0;
  while (i < n) {
    if (!is_word(toks[i]) || !is_capitalized(toks[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n) {
      if (is_word(toks[j + 1]) && is_capitalized(toks[j + 1])) {
        ++j;
      } else if (j + 2 < n && is_connector(toks[j + 1]) && is_word(toks[j + 2]) &&
                 is_capitalized(toks[j + 2])) {
        j += 2;
      } else {
        break;
      }
    }
    std::size_t first = i, last = j;
    while (first <= last && is_stopword(lower(toks[first].text))) ++first;
    if (first <= last) {
      while (last > first && is_stopword(lower(toks[last].text))) --last;
      emit(text, toks, first, last, out);
    }
    i = j + 1;
  }

  // Noun phrases: maximal stopword/punctuation-free runs of words.
  i = 0;
  while (i < n) {
    if (!is_word(toks[i]) || is_stopword(lower(toks[i].text))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && is_word(toks[j + 1]) && !is_stopword(lower(toks[j + 1].text))) ++j;
    emit(text, toks, i, j, out);
    i = j + 1;
  }
  return MentionSet(std::move(out));
}

bool mentions_match(const MentionSet& a, const MentionSet& b) {
  const auto& x = a.keys();
  const auto& y = b.keys();
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

namespace {

MentionSet from_strings(const std::vector<std::string>& raw) {
  std::vector<Mention> ms;
  ms.reserve(raw.size());
  for (const auto& s : raw) ms.push_back({normalize_mention(s), std::nullopt});
  return MentionSet(std::move(ms));
}

}  // namespace

AnnotationOverrides AnnotationOverrides::parse(std::string_view text) {
  using json = nlohmann::json;
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed annotation JSON: ") + e.what(), e.byte);
  }
  if (!root.is_object()) throw ParseError("annotation file must be a JSON object", 0);
  AnnotationOverrides out;
  try {
    for (auto& [id, obj] : root.items()) {
      Entry e;
      if (obj.contains("question")) e.question = obj.at("question").get<std::vector<std::string>>();
      if (obj.contains("context")) {
        for (const auto& pair : obj.at("context"))
          e.context[pair.at(0).get<std::string>()] =
              pair.at(1).get<std::vector<std::vector<std::string>>>();
      }
      out.entries_.emplace(id, std::move(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("annotation file: ") + e.what(), "");
  }
  return out;
}

AnnotationOverrides AnnotationOverrides::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open annotation file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<MentionSet> AnnotationOverrides::question(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second.question) return std::nullopt;
  return from_strings(*it->second.question);
}

std::optional<MentionSet> AnnotationOverrides::sentence(const std::string& id, const std::string& title,
                                                        int sentence) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  auto jt = it->second.context.find(title);
  if (jt == it->second.context.end() || sentence < 0 ||
      static_cast<std::size_t>(sentence) >= jt->second.size())
    return std::nullopt;
  return from_strings(jt->second[static_cast<std::size_t>(sentence)]);
}

MentionSet Annotator::question(const Example& ex) const {
  if (overrides_)
    if (auto m = overrides_->question(ex.id)) return *m;
  return annotate(ex.question);
}

MentionSet Annotator::sentence(const Example& ex, std::size_t doc, std::size_t sentence) const {
  const auto& d = ex.documents.at(doc);
  if (overrides_)
    if (auto m = overrides_->sentence(ex.id, d.title, static_cast<int>(sentence))) return *m;
  return annotate(d.sentences.at(sentence));
}

}  // namespace sae
