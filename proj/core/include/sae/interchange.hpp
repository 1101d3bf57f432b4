#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sae/embedder.hpp"
#include "sae/token_matrix.hpp"

namespace sae {

/// Binary embedding interchange file, little-endian:
///
///   "SAEE" | u32 version (=1) | u32 header_length | header (UTF-8 JSON)
///   | f32 payload, one row-major L x d block per entry, in header order.
///
/// The header is compact JSON with keys in this order:
///   {"meta":{...},"entries":[{"id","slot","length","dim","tokens",
///    "segments","sentence_spans":[[begin,end,doc,sentence]...],
///    "char_spans":[[begin,end]...],"cls_index","dropped_sentences"}...]}
/// Slots are "selector:<doc>" or "reasoner:<doc>+<doc>+..." (ascending).
inline constexpr char kInterchangeMagic[4] = {'S', 'A', 'E', 'E'};
inline constexpr std::uint32_t kInterchangeVersion = 1;

struct InterchangeEntry {
  std::string id;
  std::string slot;
  TokenMatrix matrix;
  bool operator==(const InterchangeEntry&) const = default;
};

struct InterchangeFile {
  /// Free-form exporter metadata, kept as serialized JSON.
  std::string meta_json = "{}";
  std::vector<InterchangeEntry> entries;
};

/// Throws FormatError (magic/version) or CorruptionError (payload does not
/// match the header, including truncation and trailing bytes).
InterchangeFile read_interchange(std::istream& in);
InterchangeFile read_interchange_file(const std::string& path);
void write_interchange(std::ostream& out, const InterchangeFile& file);
void write_interchange_file(const std::string& path, const InterchangeFile& file);

std::string selector_slot(std::size_t doc);
std::string reasoner_slot(std::span<const std::size_t> docs);

/// Embedding source backed by an interchange file. Lookups of absent
/// (example, slot) pairs throw MissingSlotError.
class InterchangeStore final : public EmbeddingSource {
 public:
  explicit InterchangeStore(InterchangeFile file);

  int dim() const override { return dim_; }
  TokenMatrix selector_input(const Example& ex, std::size_t doc) const override;
  TokenMatrix reasoner_input(const Example& ex, std::span<const std::size_t> docs) const override;

  const TokenMatrix& at(const std::string& id, const std::string& slot) const;
  bool contains(const std::string& id, const std::string& slot) const;
  std::size_t size() const { return index_.size(); }

 private:
  InterchangeFile file_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
  int dim_ = 0;
};

}  // namespace sae
