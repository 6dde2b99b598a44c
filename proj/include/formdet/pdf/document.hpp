#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "formdet/pdf/object.hpp"

namespace formdet::pdf {

struct XrefEntry {
  enum class Kind { kFree, kOffset, kCompressed };
  Kind kind = Kind::kFree;
  std::uint64_t offset = 0;  // byte offset, or object-stream number
  std::uint32_t index = 0;   // index inside the object stream
  std::uint16_t gen = 0;
};

// A leaf of the page tree with inheritable attributes already resolved.
struct PageNode {
  Ref ref;
  const Dict* dict = nullptr;
  Object media_box;
  Object crop_box;
  Object rotate;
  Object resources;
};

// Tolerant random-access reader over a complete PDF file.
//
// Objects are parsed lazily and cached, so a Document must not be shared
// between threads without external synchronization. References returned by
// get()/resolve() stay valid for the lifetime of the Document.
class Document {
 public:
  // Throws MalformedPdf when no catalog/page tree can be recovered and
  // EncryptedPdf when the trailer carries an /Encrypt entry.
  explicit Document(std::string bytes);

  Document(const Document&) = delete;
  Document& operator=(const Document&) = delete;
  Document(Document&&) = default;
  Document& operator=(Document&&) = default;

  const std::string& bytes() const { return data_; }
  const Dict& trailer() const { return trailer_; }
  const Dict& catalog() const;
  std::optional<Ref> catalog_ref() const;
  const std::vector<PageNode>& pages() const { return pages_; }

  const Object& get(Ref ref) const;
  // Follows (possibly chained) references; returns the input when direct.
  const Object& resolve(const Object& obj) const;
  const Dict* resolve_dict(const Object& obj) const;
  const Array* resolve_array(const Object& obj) const;
  std::optional<double> resolve_number(const Object& obj) const;

  // Applies the stream's filter chain. Throws MalformedPdf for filters the
  // reader does not implement (image codecs).
  std::string decode(const Stream& stream) const;

  // Writer support.
  const std::map<std::uint32_t, XrefEntry>& xref() const { return xref_; }
  std::uint32_t next_object_number() const;
  std::optional<std::size_t> last_xref_offset() const { return last_xref_offset_; }
  bool uses_xref_streams() const { return uses_xref_streams_; }
  bool reconstructed() const { return reconstructed_; }
  std::size_t warnings() const { return warnings_; }

 private:
  void load_xref();
  void parse_xref_chain(std::size_t offset);
  std::optional<std::size_t> parse_classic_section(std::size_t offset,
                                                   Dict& trailer_out);
  std::optional<std::size_t> parse_stream_section(std::size_t offset,
                                                  Dict& trailer_out);
  void reconstruct();
  void scan_objects() const;
  void recover_trailer();
  void build_page_tree();
  Object load(std::uint32_t num) const;
  Object load_at(std::size_t offset, std::uint32_t expect_num) const;
  Object load_compressed(std::uint32_t stream_num, std::uint32_t index,
                         std::uint32_t expect_num) const;
  std::size_t stream_length_hint(const Dict& dict) const;

  std::string data_;
  std::size_t header_offset_ = 0;
  mutable std::map<std::uint32_t, XrefEntry> xref_;
  Dict trailer_;
  std::vector<PageNode> pages_;
  mutable std::unordered_map<std::uint32_t, Object> cache_;
  mutable std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::size_t>>>
      objstm_index_;
  mutable std::unordered_map<std::uint32_t, std::string> objstm_data_;
  mutable std::set<std::uint32_t> loading_;
  mutable bool reconstructed_ = false;
  bool allow_rescan_ = false;
  mutable std::size_t warnings_ = 0;
  std::optional<std::size_t> last_xref_offset_;
  bool uses_xref_streams_ = false;
};

}  // namespace formdet::pdf
