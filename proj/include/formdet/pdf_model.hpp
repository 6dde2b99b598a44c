#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formdet/geometry.hpp"

namespace formdet {

namespace pdf {
class Document;
}

enum class FormStandard { kNone, kAcroForm, kXfa, kHybrid };

enum class WidgetType {
  kPushButton,
  kCheckBox,
  kRadioButton,
  kText,
  kChoice,
  kSignature,
};

std::string_view to_string(FormStandard s);
std::string_view to_string(WidgetType t);
std::optional<FormStandard> form_standard_from_string(std::string_view s);
std::optional<WidgetType> widget_type_from_string(std::string_view s);

struct RawWidget {
  int page_index = 0;
  WidgetType field_type = WidgetType::kText;
  PdfRect rect;  // normalized, PDF user space
  bool hidden = false;  // annotation flag Hidden or NoView
  std::optional<std::string> field_name;
};

struct PageGeometry {
  PdfRect media_box;
  int rotation = 0;  // 0, 90, 180 or 270

  bool operator==(const PageGeometry&) const = default;
};

// An opened PDF. Move-only; confine each handle to one thread at a time.
class DocumentHandle {
 public:
  DocumentHandle(DocumentHandle&&) noexcept;
  DocumentHandle& operator=(DocumentHandle&&) noexcept;
  ~DocumentHandle();

  // Hex of the first 16 bytes of the SHA-256 of the file content.
  const std::string& doc_id() const { return doc_id_; }
  int page_count() const { return page_count_; }
  const std::optional<std::string>& source_uri() const { return source_uri_; }

  const pdf::Document& pdf() const { return *pdf_; }

 private:
  friend DocumentHandle open_document(std::string bytes,
                                      std::optional<std::string> source_uri);
  friend const std::vector<RawWidget>& cached_widgets(const DocumentHandle&,
                                                      std::size_t*);
  DocumentHandle() = default;

  std::string doc_id_;
  int page_count_ = 0;
  std::optional<std::string> source_uri_;
  std::unique_ptr<pdf::Document> pdf_;
  mutable std::optional<std::vector<RawWidget>> widgets_;
  mutable std::size_t skipped_widgets_ = 0;
};

// Throws MalformedPdf or EncryptedPdf.
DocumentHandle open_document(std::string bytes,
                             std::optional<std::string> source_uri = std::nullopt);
DocumentHandle open_document_file(const std::filesystem::path& path);

std::string compute_doc_id(std::string_view bytes);

FormStandard detect_form_standard(const DocumentHandle& doc);

// One entry per widget annotation, ordered by (page, object number).
// Widgets that cannot be placed on a page or typed are skipped and counted
// in *skipped. Throws MalformedPdf when the field tree itself is broken.
std::vector<RawWidget> enumerate_widgets(const DocumentHandle& doc,
                                         std::size_t* skipped = nullptr);

// Throws PageOutOfRange.
PageGeometry page_geometry(const DocumentHandle& doc, int page);
std::string extract_page_text(const DocumentHandle& doc, int page);

// Existing AcroForm field names (fully qualified), for collision checks.
std::vector<std::string> existing_field_names(const DocumentHandle& doc);

}  // namespace formdet
