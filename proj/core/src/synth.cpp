#include "sae/synth.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "sae/error.hpp"
#include "sae/rng.hpp"
#include "sae/text.hpp"

namespace sae {

namespace {

constexpr std::array kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr",
                                "gr", "kl", "pr", "st", "tr", "vr", "sh", "th"};
constexpr std::array kVowels = {"a", "e", "i", "o", "u", "ai", "ei", "ou"};
constexpr std::array kCodas = {"", "", "", "n", "r", "l", "s", "x", "m", "nd", "rk", "lt"};

struct Category {
  const char* noun;
  const char* verb;
};
constexpr std::array kCategories = {
    Category{"film", "directed"},  Category{"album", "recorded"},  Category{"novel", "wrote"},
    Category{"company", "founded"}, Category{"tower", "built"},     Category{"painting", "painted"},
    Category{"opera", "composed"}, Category{"magazine", "edited"},
};
constexpr std::array kAttributes = {"origin", "owner", "sponsor", "location", "publisher", "successor", "patron", "rival"};
constexpr std::array kProfessions = {"painter", "writer", "singer", "architect", "chemist", "sculptor", "pilot", "actor"};
constexpr std::array kCompounds = {"archive", "festival", "studio", "museum", "society", "award"};
constexpr std::array kNationSuffixes = {"ian", "ish", "ese", "ic"};

std::string syllable(Rng& rng) {
  return std::string(kOnsets[rng.below(kOnsets.size())]) + kVowels[rng.below(kVowels.size())] +
         kCodas[rng.below(kCodas.size())];
}

template <typename A>
const char* pick(Rng& rng, const A& arr) {
  return arr[rng.below(arr.size())];
}

/// Draws names without repetition inside one example.
class NamePicker {
 public:
  NamePicker(const std::vector<std::string>& pool, Rng& rng) : pool_(pool), rng_(rng) {}
  std::string next() {
    for (;;) {
      const auto& n = pool_[rng_.below(pool_.size())];
      if (used_.insert(n).second) return n;
    }
  }

 private:
  const std::vector<std::string>& pool_;
  Rng& rng_;
  std::set<std::string> used_;
};

/// Insert `key` among `pad` filler sentences; returns its index.
int place(std::vector<std::string>& sentences, std::string key, int pad, NamePicker& names, Rng& rng) {
  std::vector<std::string> fillers;
  for (int i = 0; i < pad; ++i) {
    switch (rng.below(3)) {
      case 0: fillers.push_back(fmt::format("It is listed in the {} archive.", names.next())); break;
      case 1: fillers.push_back(fmt::format("Records of it are kept in {}.", names.next())); break;
      default: fillers.push_back(fmt::format("It was mentioned once by {}.", names.next())); break;
    }
  }
  const int at = static_cast<int>(rng.below(static_cast<std::size_t>(pad + 1)));
  fillers.insert(fillers.begin() + at, std::move(key));
  sentences = std::move(fillers);
  return at;
}

struct Builder {
  const SynthConfig& config;
  const std::vector<std::string>& pool;
  const std::vector<std::string>& nations;
  Rng& rng;
  NamePicker names;

  Builder(const SynthConfig& c, const std::vector<std::string>& p, const std::vector<std::string>& n, Rng& r)
      : config(c), pool(p), nations(n), rng(r), names(p, r) {}

  std::string person() { return names.next() + " " + names.next(); }

  Document doc(std::string title, std::string key, int* index = nullptr) {
    Document d;
    d.title = std::move(title);
    const int at = place(d.sentences, std::move(key), config.pad, names, rng);
    if (index) *index = at;
    return d;
  }

  /// A document unrelated to the question's mentions.
  Document distractor(std::size_t avoid_category, std::size_t avoid_attribute) {
    std::size_t cat = rng.below(kCategories.size());
    while (cat == avoid_category) cat = rng.below(kCategories.size());
    std::size_t attr = rng.below(kAttributes.size());
    while (attr == avoid_attribute) attr = rng.below(kAttributes.size());
    switch (rng.below(4)) {
      case 0: {
        const auto who = person();
        return doc(who, fmt::format("The {} that {} {} is {}.", kCategories[cat].noun, who, kCategories[cat].verb,
                                    names.next()));
      }
      case 1: {
        const auto e = names.next();
        return doc(e, fmt::format("{}'s {} is {}.", e, kAttributes[attr], names.next()));
      }
      case 2: {
        // Shares the question's category word only inside a longer phrase.
        const auto who = person();
        const char* noun = avoid_category < kCategories.size() ? kCategories[avoid_category].noun : kCategories[cat].noun;
        return doc(who, fmt::format("The {} {} that {} {} is {}.", noun, pick(rng, kCompounds), who,
                                    kCategories[cat].verb, names.next()));
      }
      default: {
        const auto who = person();
        return doc(who, fmt::format("{} is a {} {}.", who, nations[rng.below(nations.size())], pick(rng, kProfessions)));
      }
    }
  }

  Example bridge() {
    Example ex;
    ex.reasoning_type = ReasoningType::Bridge;
    const std::size_t cat = rng.below(kCategories.size());
    const std::size_t attr = rng.below(kAttributes.size());
    const auto z = person();
    const auto e = names.next();
    const auto v = names.next();
    ex.question = fmt::format("What is the {} of the {} that {} {}?", kAttributes[attr], kCategories[cat].noun, z,
                              kCategories[cat].verb);
    ex.answer = v;
    int ia = 0, ib = 0;
    ex.documents.push_back(doc(z, fmt::format("The {} that {} {} is {}.", kCategories[cat].noun, z, kCategories[cat].verb, e), &ia));
    ex.documents.push_back(doc(e, fmt::format("{}'s {} is {}.", e, kAttributes[attr], v), &ib));
    ex.supporting_facts = {{z, ia}, {e, ib}};
    std::sort(ex.supporting_facts.begin(), ex.supporting_facts.end());
    for (int i = 0; i < config.distractors; ++i) ex.documents.push_back(distractor(cat, attr));
    return ex;
  }

  Example comparison() {
    Example ex;
    ex.reasoning_type = ReasoningType::Comparison;
    const auto a = names.next();
    const auto b = names.next();
    const bool same = rng.bernoulli(0.5);
    const std::size_t na = rng.below(nations.size());
    std::size_t nb = na;
    if (!same)
      while (nb == na) nb = rng.below(nations.size());
    ex.question = fmt::format("Are {} and {} of the same nationality?", a, b);
    ex.answer = same ? "yes" : "no";
    int ia = 0, ib = 0;
    ex.documents.push_back(doc(a, fmt::format("{} is a {} {}.", a, nations[na], pick(rng, kProfessions)), &ia));
    ex.documents.push_back(doc(b, fmt::format("{} is a {} {}.", b, nations[nb], pick(rng, kProfessions)), &ib));
    ex.supporting_facts = {{a, ia}, {b, ib}};
    std::sort(ex.supporting_facts.begin(), ex.supporting_facts.end());
    for (int i = 0; i < config.distractors; ++i) ex.documents.push_back(distractor(kCategories.size(), kAttributes.size()));
    return ex;
  }
};

}  // namespace

std::vector<std::string> nonsense_names(std::uint64_t seed, int count) {
  Rng rng = Rng::substream(seed, "synth/names");
  std::vector<std::string> out;
  std::set<std::string> seen;
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 200L * count + 1000) throw Error("cannot draw " + std::to_string(count) + " distinct names");
    std::string w;
    const int syl = 2 + static_cast<int>(rng.below(2));
    for (int i = 0; i < syl; ++i) w += syllable(rng);
    if (w.size() < 4 || is_stopword(w) || !seen.insert(w).second) continue;
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Example> generate_synthetic(const SynthConfig& config, std::string_view split, int count) {
  if (count < 0) throw Error("example count must be non-negative");
  if (config.distractors < 0) throw Error("distractor count must be non-negative");
  if (!(config.ratio >= 0.0 && config.ratio <= 1.0)) throw Error("bridge ratio must lie in [0, 1]");
  if (config.pad < 0) throw Error("padding must be non-negative");
  if (config.vocab < 4 * (config.distractors + 4) * (config.pad + 2))
    throw Error("vocabulary of " + std::to_string(config.vocab) + " names is too small for this configuration");
  const auto pool = nonsense_names(config.seed, config.vocab);
  std::vector<std::string> nations;
  {
    Rng rng = Rng::substream(config.seed, "synth/nations");
    for (const auto& base : nonsense_names(config.seed ^ 0x9e3779b97f4a7c15ULL, 6))
      nations.push_back(base + kNationSuffixes[rng.below(kNationSuffixes.size())]);
  }
  Rng rng = Rng::substream(config.seed, "synth/" + std::string(split));
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Builder b(config, pool, nations, rng);
    Example ex = rng.bernoulli(config.ratio) ? b.bridge() : b.comparison();
    ex.id = fmt::format("synth-{}-{:05d}", split, i);
    ex.difficulty = "medium";
    rng.shuffle(ex.documents);
    validate_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_synthetic(const std::string& dir, const SynthConfig& config) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  save_dataset((base / "train.json").string(), generate_synthetic(config, "train", config.n));
  save_dataset((base / "dev.json").string(), generate_synthetic(config, "dev", config.resolved_dev_n()));
}

}  // namespace sae
