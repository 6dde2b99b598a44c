#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "formdet/pdf/document.hpp"
#include "formdet/pdf/object.hpp"

namespace formdet::pdf {

// Shortest decimal form without exponent, at most six fractional digits.
std::string format_real(double v);

void serialize(const Object& obj, std::string& out);
std::string serialize(const Object& obj);

// Appends an incremental-update section to an existing file. The original
// bytes are preserved verbatim; only new and replaced objects are written
// after them, followed by a cross-reference section chained via /Prev.
class IncrementalWriter {
 public:
  explicit IncrementalWriter(const Document& doc);

  Ref add(Object obj);
  void replace(Ref ref, Object obj);

  std::string finish();

 private:
  const Document& doc_;
  std::uint32_t next_num_;
  std::map<std::uint32_t, std::pair<std::uint16_t, Object>> objects_;
};

}  // namespace formdet::pdf
