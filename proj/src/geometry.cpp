#include "formdet/geometry.hpp"

namespace formdet {

bool field_class_from_code(long long code, FieldClass& out) {
  if (code < 0 || code >= kNumFieldClasses) return false;
  out = static_cast<FieldClass>(code);
  return true;
}

std::string_view class_word(FieldClass c) {
  switch (c) {
    case FieldClass::kChoiceButton: return "choice";
    case FieldClass::kTextInput: return "text";
    case FieldClass::kSignature: return "signature";
  }
  return "unknown";
}

std::string_view class_display_name(FieldClass c) {
  switch (c) {
    case FieldClass::kChoiceButton: return "Choice Button";
    case FieldClass::kTextInput: return "Text Input";
    case FieldClass::kSignature: return "Signature";
  }
  return "Unknown";
}

PdfRect intersect(const PdfRect& a, const PdfRect& b) {
  PdfRect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
            std::min(a.y1, b.y1)};
  if (r.x1 < r.x0) r.x1 = r.x0;
  if (r.y1 < r.y0) r.y1 = r.y0;
  return r;
}

double intersection_area(const PdfRect& a, const PdfRect& b) {
  return intersect(a, b).area();
}

double iou(const PdfRect& a, const PdfRect& b) {
  double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou(const PixelBox& a, const PixelBox& b) {
  double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace formdet
