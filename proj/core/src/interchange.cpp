#include "sae/interchange.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "sae/error.hpp"

namespace sae {

static_assert(std::endian::native == std::endian::little, "interchange IO assumes a little-endian host");

using json = nlohmann::ordered_json;

namespace {

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CorruptionError(std::string("truncated ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

json entry_header(const InterchangeEntry& e) {
  const auto& m = e.matrix;
  json j;
  j["id"] = e.id;
  j["slot"] = e.slot;
  j["length"] = m.length;
  j["dim"] = m.dim;
  j["tokens"] = m.tokens;
  std::vector<int> seg;
  for (auto s : m.segments) seg.push_back(static_cast<int>(s));
  j["segments"] = seg;
  json spans = json::array();
  for (const auto& s : m.sentence_spans) spans.push_back(json::array({s.begin, s.end, s.doc, s.sentence}));
  j["sentence_spans"] = std::move(spans);
  json chars = json::array();
  for (const auto& c : m.char_spans) chars.push_back(json::array({c.begin, c.end}));
  j["char_spans"] = std::move(chars);
  j["cls_index"] = m.cls_index;
  j["dropped_sentences"] = m.dropped_sentences;
  return j;
}

InterchangeEntry entry_from_header(const json& j) {
  InterchangeEntry e;
  e.id = j.at("id").get<std::string>();
  e.slot = j.at("slot").get<std::string>();
  auto& m = e.matrix;
  m.length = j.at("length").get<int>();
  m.dim = j.at("dim").get<int>();
  m.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (int s : j.at("segments").get<std::vector<int>>()) {
    if (s != 0 && s != 1) throw CorruptionError("segment id must be 0 or 1");
    m.segments.push_back(static_cast<Segment>(s));
  }
  for (const auto& s : j.at("sentence_spans"))
    m.sentence_spans.push_back({s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(), s.at(3).get<int>()});
  for (const auto& c : j.at("char_spans")) m.char_spans.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  m.cls_index = j.value("cls_index", 0);
  m.dropped_sentences = j.value("dropped_sentences", 0);
  if (m.length < 0 || m.dim < 0) throw CorruptionError("negative shape in header");
  return e;
}

}  // namespace

InterchangeFile read_interchange(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kInterchangeMagic, 4) != 0)
    throw FormatError("not an interchange file (bad magic)");
  const auto version = read_u32(in, "version");
  if (version != kInterchangeVersion)
    throw FormatError("unsupported interchange version " + std::to_string(version));
  const auto header_len = read_u32(in, "header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) throw CorruptionError("truncated header");

  InterchangeFile file;
  try {
    const auto root = json::parse(header);
    file.meta_json = root.contains("meta") ? root.at("meta").dump() : "{}";
    for (const auto& e : root.at("entries")) file.entries.push_back(entry_from_header(e));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("interchange header: ") + e.what());
  }
  for (auto& e : file.entries) {
    auto& m = e.matrix;
    const auto count = static_cast<std::size_t>(m.length) * static_cast<std::size_t>(m.dim);
    m.values.resize(count);
    if (!in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(count * sizeof(float))))
      throw CorruptionError("payload shorter than header declares (entry '" + e.id + "', slot '" + e.slot + "')");
    m.validate();
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw CorruptionError("trailing bytes after payload");
  return file;
}

InterchangeFile read_interchange_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open interchange file '" + path + "'");
  return read_interchange(in);
}

void write_interchange(std::ostream& out, const InterchangeFile& file) {
  json root;
  root["meta"] = json::parse(file.meta_json);
  json entries = json::array();
  for (const auto& e : file.entries) entries.push_back(entry_header(e));
  root["entries"] = std::move(entries);
  const auto header = root.dump();
  out.write(kInterchangeMagic, 4);
  write_u32(out, kInterchangeVersion);
  write_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& e : file.entries)
    out.write(reinterpret_cast<const char*>(e.matrix.values.data()),
              static_cast<std::streamsize>(e.matrix.values.size() * sizeof(float)));
}

void write_interchange_file(const std::string& path, const InterchangeFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write interchange file '" + path + "'");
  write_interchange(out, file);
}

std::string selector_slot(std::size_t doc) { return "selector:" + std::to_string(doc); }

std::string reasoner_slot(std::span<const std::size_t> docs) {
  std::string s = "reasoner:";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(docs[i]);
  }
  return s;
}

InterchangeStore::InterchangeStore(InterchangeFile file) : file_(std::move(file)) {
  for (std::size_t i = 0; i < file_.entries.size(); ++i) {
    const auto& e = file_.entries[i];
    if (dim_ == 0) dim_ = e.matrix.dim;
    if (e.matrix.dim != dim_)
      throw CorruptionError("interchange entries disagree on dimension (" + std::to_string(dim_) + " vs " +
                            std::to_string(e.matrix.dim) + ")");
    index_[{e.id, e.slot}] = i;
  }
}

bool InterchangeStore::contains(const std::string& id, const std::string& slot) const {
  return index_.contains({id, slot});
}

const TokenMatrix& InterchangeStore::at(const std::string& id, const std::string& slot) const {
  auto it = index_.find({id, slot});
  if (it == index_.end()) throw MissingSlotError("no embeddings for example '" + id + "' slot '" + slot + "'");
  return file_.entries[it->second].matrix;
}

TokenMatrix InterchangeStore::selector_input(const Example& ex, std::size_t doc) const {
  return at(ex.id, selector_slot(doc));
}

TokenMatrix InterchangeStore::reasoner_input(const Example& ex, std::span<const std::size_t> docs) const {
  return at(ex.id, reasoner_slot(docs));
}

}  // namespace sae
