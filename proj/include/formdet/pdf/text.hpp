#pragma once

#include <string>

#include "formdet/pdf/document.hpp"

namespace formdet::pdf {

// Best-effort UTF-8 text of a page in content-stream order. Fonts with a
// /ToUnicode CMap are decoded through it; simple fonts fall back to
// WinAnsi/Latin-1. Form XObjects are followed.
std::string extract_text(const Document& doc, const PageNode& page);

// Appends the UTF-8 encoding of a code point.
void append_utf8(std::string& out, char32_t cp);

}  // namespace formdet::pdf
