#include "formdet/pdf/filters.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "formdet/errors.hpp"
#include "formdet/pdf/parser.hpp"

namespace formdet::pdf {

std::string flate_decode(std::string_view in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw MalformedPdf("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());

  std::string out;
  char buf[16384];
  int rc = Z_OK;
  while (true) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (rc == Z_STREAM_END) break;
    if (rc != Z_OK) break;
    if (zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END && rc != Z_OK && out.empty()) {
    throw MalformedPdf("corrupt Flate stream");
  }
  return out;
}

std::string flate_encode(std::string_view in) {
  uLongf bound = compressBound(static_cast<uLong>(in.size()));
  std::string out(bound, '\0');
  int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                     reinterpret_cast<const Bytef*>(in.data()),
                     static_cast<uLong>(in.size()), 6);
  if (rc != Z_OK) throw MalformedPdf("Flate encoding failed");
  out.resize(bound);
  return out;
}

std::string lzw_decode(std::string_view in, bool early_change) {
  std::vector<std::string> table;
  auto reset = [&] {
    table.clear();
    for (int i = 0; i < 256; ++i) table.emplace_back(1, static_cast<char>(i));
    table.emplace_back();  // 256 clear
    table.emplace_back();  // 257 eod
  };
  reset();

  std::string out;
  std::uint32_t bitbuf = 0;
  int bitcount = 0;
  int code_len = 9;
  std::size_t pos = 0;
  int prev = -1;
  while (true) {
    while (bitcount < code_len && pos < in.size()) {
      bitbuf = (bitbuf << 8) | static_cast<std::uint8_t>(in[pos++]);
      bitcount += 8;
    }
    if (bitcount < code_len) break;
    int code = static_cast<int>((bitbuf >> (bitcount - code_len)) &
                                ((1u << code_len) - 1));
    bitcount -= code_len;

    if (code == 256) {
      reset();
      code_len = 9;
      prev = -1;
      continue;
    }
    if (code == 257) break;

    std::string entry;
    if (code < static_cast<int>(table.size())) {
      entry = table[code];
      if (prev >= 0) table.push_back(table[prev] + entry[0]);
    } else if (prev >= 0 && code == static_cast<int>(table.size())) {
      entry = table[prev] + table[prev][0];
      table.push_back(entry);
    } else {
      break;  // corrupt code
    }
    out += entry;
    prev = code;

    std::size_t limit = table.size() + (early_change ? 1 : 0);
    if (limit >= 4096) {
      code_len = 12;
    } else if (limit >= 2048) {
      code_len = 12;
    } else if (limit >= 1024) {
      code_len = 11;
    } else if (limit >= 512) {
      code_len = 10;
    }
  }
  return out;
}

std::string ascii_hex_decode(std::string_view in) {
  std::string out;
  int pending = -1;
  for (char c : in) {
    if (c == '>') break;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else continue;
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<char>(pending * 16 + v));
      pending = -1;
    }
  }
  if (pending >= 0) out.push_back(static_cast<char>(pending * 16));
  return out;
}

std::string ascii85_decode(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  std::size_t i = 0;
  if (in.substr(0, 2) == "<~") i = 2;
  for (; i < in.size(); ++i) {
    char c = in[i];
    if (c == '~') break;
    if (is_pdf_whitespace(c)) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') continue;
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) {
        out.push_back(static_cast<char>((tuple >> (8 * k)) & 0xff));
      }
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) {
      out.push_back(static_cast<char>((tuple >> (8 * (3 - k))) & 0xff));
    }
  }
  return out;
}

std::string run_length_decode(std::string_view in) {
  std::string out;
  std::size_t i = 0;
  while (i < in.size()) {
    int len = static_cast<std::uint8_t>(in[i++]);
    if (len == 128) break;
    if (len < 128) {
      std::size_t n = static_cast<std::size_t>(len) + 1;
      if (i + n > in.size()) n = in.size() - i;
      out.append(in.substr(i, n));
      i += n;
    } else if (i < in.size()) {
      out.append(static_cast<std::size_t>(257 - len), in[i++]);
    }
  }
  return out;
}

std::string unpredict(std::string_view in, int predictor, int colors,
                      int bits_per_component, int columns) {
  if (predictor <= 1) return std::string(in);
  const int bpp = std::max(1, (colors * bits_per_component + 7) / 8);
  const std::size_t row_len =
      static_cast<std::size_t>((colors * bits_per_component * columns + 7) / 8);
  if (row_len == 0) return std::string(in);

  std::string out;
  if (predictor == 2) {
    // TIFF predictor; only the common 8-bit case is handled.
    out.assign(in);
    if (bits_per_component != 8) return out;
    for (std::size_t row = 0; row + row_len <= out.size(); row += row_len) {
      for (std::size_t i = static_cast<std::size_t>(bpp); i < row_len; ++i) {
        out[row + i] = static_cast<char>(out[row + i] + out[row + i - bpp]);
      }
    }
    return out;
  }

  std::vector<std::uint8_t> prev(row_len, 0);
  std::vector<std::uint8_t> cur(row_len, 0);
  std::size_t pos = 0;
  while (pos < in.size()) {
    int filter = static_cast<std::uint8_t>(in[pos++]);
    std::size_t n = std::min(row_len, in.size() - pos);
    for (std::size_t i = 0; i < n; ++i) cur[i] = static_cast<std::uint8_t>(in[pos + i]);
    for (std::size_t i = n; i < row_len; ++i) cur[i] = 0;
    pos += n;
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint8_t left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      std::uint8_t up = prev[i];
      std::uint8_t up_left = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      switch (filter) {
        case 1: cur[i] = static_cast<std::uint8_t>(cur[i] + left); break;
        case 2: cur[i] = static_cast<std::uint8_t>(cur[i] + up); break;
        case 3: cur[i] = static_cast<std::uint8_t>(cur[i] + (left + up) / 2); break;
        case 4: {
          int p = left + up - up_left;
          int pa = std::abs(p - left);
          int pb = std::abs(p - up);
          int pc = std::abs(p - up_left);
          std::uint8_t pred = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
          cur[i] = static_cast<std::uint8_t>(cur[i] + pred);
          break;
        }
        default: break;
      }
    }
    out.append(reinterpret_cast<const char*>(cur.data()), n);
    std::swap(prev, cur);
  }
  return out;
}

}  // namespace formdet::pdf
