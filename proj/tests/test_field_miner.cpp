#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "formdet/errors.hpp"
#include "formdet/field_miner.hpp"
#include "pdf_fixtures.hpp"

using namespace formdet;

namespace {

RawWidget widget(WidgetType t) {
  RawWidget w;
  w.field_type = t;
  w.rect = {10, 10, 100, 30};
  return w;
}

const PageGeometry kLetter{{0, 0, 612, 792}, 0};

PageField text_field(double x0, double y0, double x1, double y1) {
  return {FieldClass::kTextInput, {x0, y0, x1, y1}, WidgetType::kText};
}

}  // namespace

TEST(Stage1, HasForm) {
  EXPECT_TRUE(stage1_has_form(open_document(fixtures::text_and_checkbox_pdf())));
  EXPECT_FALSE(stage1_has_form(open_document(fixtures::flat_pdf())));
  fixtures::Spec xfa;
  xfa.xfa = true;
  EXPECT_TRUE(stage1_has_form(open_document(fixtures::build(xfa))));
}

TEST(Classify, Table) {
  EXPECT_EQ(classify_widget(widget(WidgetType::kRadioButton)), FieldClass::kChoiceButton);
  EXPECT_EQ(classify_widget(widget(WidgetType::kCheckBox)), FieldClass::kChoiceButton);
  EXPECT_EQ(classify_widget(widget(WidgetType::kPushButton)), std::nullopt);
  EXPECT_EQ(classify_widget(widget(WidgetType::kSignature)), FieldClass::kSignature);
  EXPECT_EQ(classify_widget(widget(WidgetType::kText)), FieldClass::kTextInput);
  EXPECT_EQ(classify_widget(widget(WidgetType::kChoice)), FieldClass::kTextInput);
  EXPECT_EQ(classify_widget(widget(WidgetType::kChoice), ChoicePolicy::kDrop), std::nullopt);
}

TEST(Stage2, Examples) {
  EXPECT_FALSE(stage2_has_fillable({widget(WidgetType::kPushButton), widget(WidgetType::kPushButton)}));
  EXPECT_FALSE(stage2_has_fillable({}));
  EXPECT_TRUE(stage2_has_fillable({widget(WidgetType::kPushButton), widget(WidgetType::kText)}));
  EXPECT_FALSE(stage2_has_fillable({widget(WidgetType::kChoice)}, ChoicePolicy::kDrop));
}

TEST(Clean, OutsidePageDropped) {
  CleaningCounters c;
  auto out = clean_page_fields({text_field(700, 900, 800, 950)}, kLetter, {}, &c);
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(c.offpage, 1u);
}

TEST(Clean, IdenticalTextRectsOneKept) {
  CleaningCounters c;
  auto out = clean_page_fields({text_field(10, 10, 100, 30), text_field(10, 10, 100, 30)}, kLetter, {}, &c);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(c.duplicate, 1u);
}

TEST(Clean, ThinRectDropped) {
  CleaningCounters c;
  EXPECT_TRUE(clean_page_fields({text_field(10, 10, 12, 50)}, kLetter, {}, &c).empty());
  EXPECT_EQ(c.too_small, 1u);
}

TEST(Clean, PartiallyOffPageClipped) {
  // 75% on page: kept and clipped to the media box.
  auto out = clean_page_fields({text_field(-10, 100, 30, 120)}, kLetter, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rect, (PdfRect{0, 100, 30, 120}));
  // 25% on page: dropped.
  EXPECT_TRUE(clean_page_fields({text_field(-30, 100, 10, 120)}, kLetter, {}).empty());
}

TEST(Clean, DuplicatesAreSameClassOnly) {
  PageField box{FieldClass::kChoiceButton, {10, 10, 100, 30}, WidgetType::kCheckBox};
  auto out = clean_page_fields({text_field(10, 10, 100, 30), box}, kLetter, {});
  EXPECT_EQ(out.size(), 2u);
}

TEST(Clean, DuplicateThresholdBoundary) {
  // IoU of (0,0,100,20) and (0,0,85,20) is exactly 0.85.
  auto out = clean_page_fields({text_field(0, 0, 100, 20), text_field(0, 0, 85, 20)}, kLetter, {});
  EXPECT_EQ(out.size(), 1u);
  out = clean_page_fields({text_field(0, 0, 100, 20), text_field(0, 0, 84, 20)}, kLetter, {});
  EXPECT_EQ(out.size(), 2u);
}

TEST(Clean, DisabledOnlyClips) {
  CleaningConfig cfg;
  cfg.enabled = false;
  auto out = clean_page_fields({text_field(10, 10, 100, 30), text_field(10, 10, 100, 30),
                                text_field(10, 10, 12, 50), text_field(-30, 100, 10, 120),
                                text_field(700, 900, 800, 950)},
                               kLetter, cfg);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[3].rect, (PdfRect{0, 100, 10, 120}));
}

TEST(Clean, ConfigValidation) {
  CleaningConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.dedup_iou_threshold = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_onpage_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_field_size_pt = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CleanProperties, IdempotentOnRandomFields) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-100, 800), size(0, 120);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PageField> fields;
    int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      double x = pos(rng), y = pos(rng);
      FieldClass c{};
      field_class_from_code(cls(rng), c);
      fields.push_back({c, {x, y, x + size(rng), y + size(rng)}, WidgetType::kText});
    }
    auto once = clean_page_fields(fields, kLetter, {});
    EXPECT_EQ(clean_page_fields(once, kLetter, {}), once);
    // Monotonicity: every survivor is an input field, possibly clipped.
    EXPECT_LE(once.size(), fields.size());
    for (const auto& f : once) {
      EXPECT_GE(f.rect.x0, 0);
      EXPECT_LE(f.rect.x1, 612);
      EXPECT_GE(std::min(f.rect.width(), f.rect.height()), 4.0);
    }
  }
}

TEST(CleanProperties, PermutedClusterKeepsCount) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PageField> fields;
    // A cluster of near-identical boxes (pairwise IoU > 0.85) plus isolated ones.
    for (int i = 0; i < 5; ++i) {
      double j = static_cast<double>(rng() % 100) / 100.0;
      fields.push_back(text_field(100 + j, 100, 200 + j, 130));
    }
    for (int i = 0; i < 4; ++i) fields.push_back(text_field(10, 200 + 50.0 * i, 90, 220 + 50.0 * i));
    auto base = clean_page_fields(fields, kLetter, {}).size();
    std::shuffle(fields.begin(), fields.end(), rng);
    EXPECT_EQ(clean_page_fields(fields, kLetter, {}).size(), base);
    EXPECT_EQ(base, 5u);
  }
}

TEST(Mine, FlatIsNoFormObjects) {
  auto r = mine_document(open_document(fixtures::flat_pdf()), {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kNoFormObjects);
  EXPECT_EQ(r.annotation_count(), 0u);
}

TEST(Mine, PushbuttonOnly) {
  fixtures::Spec s;
  s.fields.push_back(fixtures::pushbutton(0, 10, 10, 100, 30));
  s.fields.push_back(fixtures::pushbutton(0, 10, 50, 100, 70));
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kButtonOnly);
}

TEST(Mine, TextCheckboxAndDuplicate) {
  fixtures::Spec s;
  s.fields.push_back(fixtures::text(0, 100, 700, 300, 720, "t"));
  s.fields.push_back(fixtures::checkbox(0, 100, 650, 112, 662, "c"));
  s.fields.push_back(fixtures::checkbox(0, 100, 650, 112, 662, "c2"));
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_TRUE(r.accepted());
  ASSERT_EQ(r.annotation_count(), 2u);
  EXPECT_EQ(r.form_standard, FormStandard::kAcroForm);
  EXPECT_EQ(r.counters.widgets, 3u);
  EXPECT_EQ(r.counters.cleaning.duplicate, 1u);
  EXPECT_EQ(r.counters.kept, 2u);
  ASSERT_EQ(r.pages.size(), 1u);
  EXPECT_EQ(r.pages[0].annotations[0].field_class, FieldClass::kTextInput);
  EXPECT_EQ(r.pages[0].annotations[1].field_class, FieldClass::kChoiceButton);
  EXPECT_EQ(r.pages[0].annotations[0].doc_id, r.doc_id);
}

TEST(Mine, XfaOnly) {
  fixtures::Spec s;
  s.xfa = true;
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kXfaDynamicOnly);
  EXPECT_EQ(r.form_standard, FormStandard::kXfa);
}

TEST(Mine, EmptyAcroFormWithoutWidgets) {
  fixtures::Spec s;
  s.acroform = true;
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kNoFormObjects);
}

TEST(Mine, AllFieldsCleaned) {
  fixtures::Spec s;
  s.fields.push_back(fixtures::text(0, 700, 900, 800, 950));
  s.fields.push_back(fixtures::text(0, 10, 10, 12, 60));
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kAllFieldsCleaned);
  EXPECT_EQ(r.counters.cleaning.offpage, 1u);
  EXPECT_EQ(r.counters.cleaning.too_small, 1u);
}

TEST(Mine, HiddenWidgetsDroppedByDefault) {
  fixtures::Spec s;
  auto hidden = fixtures::text(0, 10, 10, 100, 30);
  hidden.annot_flags = 2;
  s.fields.push_back(hidden);
  s.fields.push_back(fixtures::text(0, 10, 100, 100, 130));
  auto r = mine_document(open_document(fixtures::build(s)), {});
  EXPECT_EQ(r.annotation_count(), 1u);
  EXPECT_EQ(r.counters.hidden, 1u);
  CleaningConfig keep;
  keep.drop_hidden = false;
  EXPECT_EQ(mine_document(open_document(fixtures::build(s)), keep).annotation_count(), 2u);
}

TEST(Mine, ChoiceDropPolicy) {
  fixtures::Spec s;
  s.fields.push_back(fixtures::choice(0, 10, 10, 100, 30));
  CleaningConfig cfg;
  EXPECT_TRUE(mine_document(open_document(fixtures::build(s)), cfg).accepted());
  cfg.choice_policy = ChoicePolicy::kDrop;
  EXPECT_EQ(mine_document(open_document(fixtures::build(s)), cfg).rejection_reason,
            RejectionReason::kButtonOnly);
}

TEST(Mine, EncryptedIsParseError) {
  fixtures::Spec s;
  s.encrypt = true;
  s.fields.push_back(fixtures::text(0, 10, 10, 100, 30));
  std::string pdf = fixtures::build(s);
  auto r = mine_bytes(pdf, {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kParseError);
  EXPECT_TRUE(r.encrypted);
  EXPECT_EQ(r.doc_id, compute_doc_id(pdf));
}

TEST(Mine, GarbageIsParseError) {
  auto r = mine_bytes("%PDF-1.4\nthis is not a pdf", {});
  EXPECT_EQ(r.rejection_reason, RejectionReason::kParseError);
  EXPECT_FALSE(r.encrypted);
  EXPECT_TRUE(r.error.has_value());
}

TEST(Mine, RejectionIffNoAnnotations) {
  std::vector<std::string> corpus = {fixtures::flat_pdf(), fixtures::text_and_checkbox_pdf()};
  for (const auto& pdf : corpus) {
    auto r = mine_bytes(pdf, {});
    EXPECT_EQ(r.accepted(), r.annotation_count() > 0);
  }
}

TEST(Mine, Deterministic) {
  std::string pdf = fixtures::text_and_checkbox_pdf();
  EXPECT_EQ(mine_bytes(pdf, {}), mine_bytes(pdf, {}));
}

TEST(Stats, PartitionAndMerge) {
  MiningStats a, b;
  a.add(mine_bytes(fixtures::flat_pdf(), {}));
  a.add(mine_bytes(fixtures::text_and_checkbox_pdf(), {}));
  b.add(mine_bytes("garbage", {}));
  MiningStats merged = a;
  merged += b;
  EXPECT_EQ(merged.documents, 3u);
  EXPECT_EQ(merged.accepted + merged.no_form_objects + merged.no_fields + merged.button_only +
                merged.xfa_dynamic_only + merged.all_fields_cleaned + merged.parse_error,
            merged.documents);
  EXPECT_EQ(merged.annotations[class_code(FieldClass::kTextInput)], 1u);
  EXPECT_EQ(merged.annotations[class_code(FieldClass::kChoiceButton)], 1u);
  EXPECT_EQ(merged.pages_with_fields, 1u);
}
