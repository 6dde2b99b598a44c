#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>

namespace formdet {

// The three detection classes. Integer codes are stable: they appear in
// label files and detection files.
enum class FieldClass : std::uint8_t {
  kChoiceButton = 0,
  kTextInput = 1,
  kSignature = 2,
};

inline constexpr int kNumFieldClasses = 3;

inline constexpr FieldClass kAllFieldClasses[] = {
    FieldClass::kChoiceButton, FieldClass::kTextInput, FieldClass::kSignature};

constexpr int class_code(FieldClass c) { return static_cast<int>(c); }

// Returns false when the code is outside 0..2.
bool field_class_from_code(long long code, FieldClass& out);

// Short lowercase word used in generated field names ("text", ...).
std::string_view class_word(FieldClass c);
// Human-readable column header ("Text Input", ...).
std::string_view class_display_name(FieldClass c);

// Axis-aligned rectangle in PDF user space (points, y up).
struct PdfRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const {
    return std::max(0.0, width()) * std::max(0.0, height());
  }
  // Swaps inverted coordinates so that x0 <= x1 and y0 <= y1.
  PdfRect normalized() const {
    return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1),
            std::max(y0, y1)};
  }
  bool operator==(const PdfRect&) const = default;
};

// Box in rendered-image pixels: origin top-left, y down.
struct PixelBox {
  double x = 0, y = 0, w = 0, h = 0;

  double area() const { return std::max(0.0, w) * std::max(0.0, h); }
  bool operator==(const PixelBox&) const = default;
};

struct LabeledBox {
  FieldClass field_class = FieldClass::kTextInput;
  PixelBox box;
};

double intersection_area(const PdfRect& a, const PdfRect& b);
PdfRect intersect(const PdfRect& a, const PdfRect& b);

// Intersection over union; 0 for disjoint or empty boxes.
double iou(const PdfRect& a, const PdfRect& b);
double iou(const PixelBox& a, const PixelBox& b);

}  // namespace formdet
