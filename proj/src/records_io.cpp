#include "formdet/records_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "formdet/errors.hpp"

namespace formdet {

using ojson = nlohmann::ordered_json;

namespace {

ojson rect_json(const PdfRect& r) { return ojson::array({r.x0, r.y0, r.x1, r.y1}); }

PdfRect rect_from(const ojson& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("rect must have 4 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

ojson counters_json(const WidgetCounters& c) {
  ojson j;
  j["widgets"] = c.widgets;
  j["unresolved"] = c.unresolved;
  j["unclassified"] = c.unclassified;
  j["hidden"] = c.hidden;
  j["offpage"] = c.cleaning.offpage;
  j["too_small"] = c.cleaning.too_small;
  j["duplicate"] = c.cleaning.duplicate;
  j["kept"] = c.kept;
  return j;
}

WidgetCounters counters_from(const ojson& j) {
  WidgetCounters c;
  c.widgets = j.value("widgets", std::uint64_t{0});
  c.unresolved = j.value("unresolved", std::uint64_t{0});
  c.unclassified = j.value("unclassified", std::uint64_t{0});
  c.hidden = j.value("hidden", std::uint64_t{0});
  c.cleaning.offpage = j.value("offpage", std::uint64_t{0});
  c.cleaning.too_small = j.value("too_small", std::uint64_t{0});
  c.cleaning.duplicate = j.value("duplicate", std::uint64_t{0});
  c.kept = j.value("kept", std::uint64_t{0});
  return c;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string record_to_json(const DocumentRecord& r) {
  ojson j;
  j["doc_id"] = r.doc_id;
  j["source_uri"] = r.source_uri ? ojson(*r.source_uri) : ojson(nullptr);
  j["form_standard"] = std::string(to_string(r.form_standard));
  j["page_count"] = r.page_count;
  j["rejection_reason"] =
      r.rejection_reason ? ojson(std::string(to_string(*r.rejection_reason))) : ojson(nullptr);
  if (r.error) j["error"] = *r.error;
  if (r.encrypted) j["encrypted"] = true;
  j["counters"] = counters_json(r.counters);
  ojson pages = ojson::array();
  for (const auto& p : r.pages) {
    ojson pj;
    pj["page_index"] = p.page_index;
    pj["media_box"] = rect_json(p.geometry.media_box);
    pj["rotation"] = p.geometry.rotation;
    ojson anns = ojson::array();
    for (const auto& a : p.annotations) {
      ojson aj;
      aj["class"] = class_code(a.field_class);
      aj["rect"] = rect_json(a.rect);
      aj["source_type"] = std::string(to_string(a.source_type));
      anns.push_back(std::move(aj));
    }
    pj["annotations"] = std::move(anns);
    pages.push_back(std::move(pj));
  }
  j["pages"] = std::move(pages);
  return j.dump();
}

DocumentRecord record_from_json(std::string_view text) {
  try {
    ojson j = ojson::parse(text);
    DocumentRecord r;
    r.doc_id = j.at("doc_id").get<std::string>();
    if (auto it = j.find("source_uri"); it != j.end() && !it->is_null()) {
      r.source_uri = it->get<std::string>();
    }
    auto std_ = form_standard_from_string(j.at("form_standard").get<std::string>());
    if (!std_) throw ConfigError("unknown form_standard");
    r.form_standard = *std_;
    r.page_count = j.at("page_count").get<int>();
    if (auto it = j.find("rejection_reason"); it != j.end() && !it->is_null()) {
      auto rr = rejection_reason_from_string(it->get<std::string>());
      if (!rr) throw ConfigError("unknown rejection_reason");
      r.rejection_reason = *rr;
    }
    if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
    r.encrypted = j.value("encrypted", false);
    if (auto it = j.find("counters"); it != j.end()) r.counters = counters_from(*it);
    for (const auto& pj : j.at("pages")) {
      PageRecord p;
      p.page_index = pj.at("page_index").get<int>();
      p.geometry.media_box = rect_from(pj.at("media_box"));
      p.geometry.rotation = pj.at("rotation").get<int>();
      for (const auto& aj : pj.at("annotations")) {
        FieldAnnotation a;
        a.doc_id = r.doc_id;
        a.page_index = p.page_index;
        if (!field_class_from_code(aj.at("class").get<long long>(), a.field_class)) {
          throw ConfigError("unknown class code");
        }
        a.rect = rect_from(aj.at("rect"));
        auto st = widget_type_from_string(aj.at("source_type").get<std::string>());
        if (!st) throw ConfigError("unknown source_type");
        a.source_type = *st;
        p.annotations.push_back(std::move(a));
      }
      r.pages.push_back(std::move(p));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed document record: ") + e.what());
  }
}

std::string records_to_ndjson(const std::vector<DocumentRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<DocumentRecord> records_from_ndjson(std::string_view text) {
  std::vector<DocumentRecord> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (!line.empty()) out.push_back(record_from_json(line));
  }
  return out;
}

std::vector<DocumentRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open records " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return records_from_ndjson(ss.str());
}

std::string stats_to_json(const MiningStats& s) {
  ojson j;
  j["documents"] = s.documents;
  ojson stages = ojson::array();
  auto stage = [&](const char* name, std::uint64_t rejected) {
    ojson st;
    st["stage"] = name;
    st["rejected"] = rejected;
    stages.push_back(std::move(st));
  };
  stage("ParseError", s.parse_error);
  stage("NoFormObjects", s.no_form_objects);
  stage("XfaDynamicOnly", s.xfa_dynamic_only);
  stage("NoFields", s.no_fields);
  stage("ButtonOnly", s.button_only);
  stage("AllFieldsCleaned", s.all_fields_cleaned);
  j["stages"] = std::move(stages);
  j["rejections"] = {{"ParseError", s.parse_error},
                     {"NoFormObjects", s.no_form_objects},
                     {"XfaDynamicOnly", s.xfa_dynamic_only},
                     {"NoFields", s.no_fields},
                     {"ButtonOnly", s.button_only},
                     {"AllFieldsCleaned", s.all_fields_cleaned}};
  j["encrypted"] = s.encrypted;
  j["accepted"] = s.accepted;
  ojson standards;
  for (auto st : {FormStandard::kNone, FormStandard::kAcroForm, FormStandard::kXfa,
                  FormStandard::kHybrid}) {
    standards[std::string(to_string(st))] = s.form_standards[static_cast<std::size_t>(st)];
  }
  j["form_standards"] = std::move(standards);
  j["pages"] = s.pages;
  j["pages_with_fields"] = s.pages_with_fields;
  ojson anns;
  for (FieldClass c : kAllFieldClasses) {
    anns[std::string(class_display_name(c))] = s.annotations[static_cast<std::size_t>(class_code(c))];
  }
  j["annotations"] = std::move(anns);
  j["widgets"] = counters_json(s.widgets);
  return j.dump(2) + "\n";
}

MiningStats stats_from_json(std::string_view text) {
  try {
    ojson j = ojson::parse(text);
    MiningStats s;
    s.documents = j.at("documents").get<std::uint64_t>();
    const auto& rej = j.at("rejections");
    s.parse_error = rej.at("ParseError").get<std::uint64_t>();
    s.no_form_objects = rej.at("NoFormObjects").get<std::uint64_t>();
    s.xfa_dynamic_only = rej.at("XfaDynamicOnly").get<std::uint64_t>();
    s.no_fields = rej.at("NoFields").get<std::uint64_t>();
    s.button_only = rej.at("ButtonOnly").get<std::uint64_t>();
    s.all_fields_cleaned = rej.at("AllFieldsCleaned").get<std::uint64_t>();
    s.encrypted = j.at("encrypted").get<std::uint64_t>();
    s.accepted = j.at("accepted").get<std::uint64_t>();
    for (auto st : {FormStandard::kNone, FormStandard::kAcroForm, FormStandard::kXfa,
                    FormStandard::kHybrid}) {
      s.form_standards[static_cast<std::size_t>(st)] =
          j.at("form_standards").at(std::string(to_string(st))).get<std::uint64_t>();
    }
    s.pages = j.at("pages").get<std::uint64_t>();
    s.pages_with_fields = j.at("pages_with_fields").get<std::uint64_t>();
    for (FieldClass c : kAllFieldClasses) {
      s.annotations[static_cast<std::size_t>(class_code(c))] =
          j.at("annotations").at(std::string(class_display_name(c))).get<std::uint64_t>();
    }
    s.widgets = counters_from(j.at("widgets"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed stats: ") + e.what());
  }
}

std::string cleaning_config_to_json(const CleaningConfig& cfg) {
  ojson j;
  j["enabled"] = cfg.enabled;
  j["min_field_size_pt"] = cfg.min_field_size_pt;
  j["dedup_iou_threshold"] = cfg.dedup_iou_threshold;
  j["min_onpage_fraction"] = cfg.min_onpage_fraction;
  j["drop_hidden"] = cfg.drop_hidden;
  j["choice_policy"] = cfg.choice_policy == ChoicePolicy::kDrop ? "drop" : "text_input";
  return j.dump();
}

}  // namespace formdet
