#pragma once

#include <string>
#include <string_view>

namespace formdet::pdf {

// Decoders are tolerant: truncated input yields whatever decoded cleanly.
// They throw MalformedPdf only when nothing at all can be recovered.
std::string flate_decode(std::string_view in);
std::string flate_encode(std::string_view in);
std::string lzw_decode(std::string_view in, bool early_change = true);
std::string ascii_hex_decode(std::string_view in);
std::string ascii85_decode(std::string_view in);
std::string run_length_decode(std::string_view in);

// PNG (predictor >= 10) and TIFF (predictor 2) un-prediction.
std::string unpredict(std::string_view in, int predictor, int colors,
                      int bits_per_component, int columns);

}  // namespace formdet::pdf
