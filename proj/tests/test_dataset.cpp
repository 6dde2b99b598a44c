#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "formdet/dataset.hpp"
#include "formdet/errors.hpp"
#include "pdf_fixtures.hpp"

using namespace formdet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("formdet_ds_" + std::to_string(std::random_device{}()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

NormalizedLabel label(int c, double cx, double cy, double w, double h) {
  NormalizedLabel l;
  field_class_from_code(c, l.field_class);
  l.cx = cx;
  l.cy = cy;
  l.w = w;
  l.h = h;
  return l;
}

std::string two_page_three_fields() {
  fixtures::Spec s;
  s.pages.push_back(fixtures::Page{});
  s.fields.push_back(fixtures::text(0, 72, 720, 144, 756, "a"));
  s.fields.push_back(fixtures::checkbox(0, 300, 400, 312, 412, "b"));
  s.fields.push_back(fixtures::signature(0, 100, 100, 300, 140, "c"));
  return fixtures::build(s);
}

}  // namespace

TEST(Label, Examples) {
  LabeledBox b{FieldClass::kTextInput, {100, 50, 300, 150}};
  auto l = to_normalized_label(b, 1000, 800);
  EXPECT_DOUBLE_EQ(l.cx, 0.25);
  EXPECT_DOUBLE_EQ(l.cy, 0.15625);
  EXPECT_DOUBLE_EQ(l.w, 0.3);
  EXPECT_DOUBLE_EQ(l.h, 0.1875);
  EXPECT_EQ(format_label_line(l), "1 0.250000 0.156250 0.300000 0.187500");

  auto full = to_normalized_label({FieldClass::kSignature, {0, 0, 640, 480}}, 640, 480);
  EXPECT_EQ(format_label_line(full), "2 0.500000 0.500000 1.000000 1.000000");

  auto tiny = to_normalized_label({FieldClass::kChoiceButton, {0, 0, 1, 1}}, 100, 100);
  EXPECT_NEAR(tiny.cx, 0.005, 1e-12);
  EXPECT_NEAR(tiny.w, 0.01, 1e-12);
  EXPECT_EQ(format_label_line(tiny), "0 0.005000 0.005000 0.010000 0.010000");
}

TEST(Label, ParseRoundTrip) {
  auto l = parse_label_line("2 0.123456 0.5 0.2 0.1");
  EXPECT_EQ(l.field_class, FieldClass::kSignature);
  EXPECT_DOUBLE_EQ(l.cx, 0.123456);
  EXPECT_THROW(parse_label_line("3 0.5 0.5 0.1 0.1"), ConfigError);
  EXPECT_THROW(parse_label_line("1 0.5 0.5 0.1"), ConfigError);
  EXPECT_THROW(parse_label_line("x 0.5 0.5 0.1 0.1"), ConfigError);
}

TEST(Label, PrintedBoxStaysInUnitSquare) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int i = 0; i < 5000; ++i) {
    int W = 100 + static_cast<int>(rng() % 2000), H = 100 + static_cast<int>(rng() % 2000);
    double x = u01(rng) * (W - 2), y = u01(rng) * (H - 2);
    double w = 1 + u01(rng) * (W - x - 1), h = 1 + u01(rng) * (H - y - 1);
    if (i % 7 == 0) {
      x = 0;
      w = W;
    }
    auto line = format_label_line(to_normalized_label({FieldClass::kTextInput, {x, y, w, h}}, W, H));
    auto p = parse_label_line(line);
    EXPECT_GE(p.cx - p.w / 2, -1e-12) << line;
    EXPECT_LE(p.cx + p.w / 2, 1 + 1e-12) << line;
    EXPECT_GE(p.cy - p.h / 2, -1e-12) << line;
    EXPECT_LE(p.cy + p.h / 2, 1 + 1e-12) << line;
    EXPECT_GT(p.w, 0);
    EXPECT_GT(p.h, 0);
    PixelBox back = label_to_pixels(p, W, H);
    EXPECT_NEAR(back.x, x, 2e-6 * W);
    EXPECT_NEAR(back.w, w, 2e-6 * W);
  }
}

TEST(Split, OneDocEach) {
  auto a = split_documents({{"a", 10}, {"b", 10}, {"c", 10}}, 42, 10, 10);
  std::multiset<Split> got;
  for (const auto& [d, s] : a.by_doc) got.insert(s);
  EXPECT_EQ(got, (std::multiset<Split>{Split::kTrain, Split::kVal, Split::kTest}));
  EXPECT_EQ(a.seed, 42u);
}

TEST(Split, ZeroTargetsAllTrain) {
  auto a = split_documents({{"a", 3}, {"b", 4}}, 1, 0, 0);
  for (const auto& [d, s] : a.by_doc) EXPECT_EQ(s, Split::kTrain);
}

TEST(Split, Deterministic) {
  std::vector<DocPages> docs;
  for (int i = 0; i < 40; ++i) docs.push_back({"d" + std::to_string(i), 1 + i % 5});
  auto a = split_documents(docs, 9, 20, 30);
  std::vector<DocPages> reversed(docs.rbegin(), docs.rend());
  EXPECT_EQ(a, split_documents(docs, 9, 20, 30));
  EXPECT_EQ(a, split_documents(reversed, 9, 20, 30));
}

TEST(Split, Insufficient) {
  EXPECT_THROW(split_documents({{"a", 3}}, 1, 2, 2), InsufficientPages);
}

TEST(Split, GreedyTotals) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DocPages> docs;
    int total = 0;
    for (int i = 0; i < 50; ++i) {
      int pages = 1 + static_cast<int>(rng() % 12);
      total += pages;
      docs.push_back({"doc" + std::to_string(i), pages});
    }
    int val_target = total / 5, test_target = total / 4;
    auto a = split_documents(docs, trial, val_target, test_target);
    ASSERT_EQ(a.by_doc.size(), docs.size());
    int val = 0, test = 0, max_pages = 12;
    for (const auto& d : docs) {
      Split s = a.by_doc.at(d.doc_id);
      if (s == Split::kVal) val += d.page_count;
      if (s == Split::kTest) test += d.page_count;
    }
    EXPECT_GE(val, val_target);
    EXPECT_LT(val, val_target + max_pages);
    EXPECT_GE(test, test_target);
    EXPECT_LT(test, test_target + max_pages);
  }
}

TEST(Manifest, NdjsonRoundTrip) {
  ManifestRow r;
  r.doc_id = "abc";
  r.page_index = 2;
  r.split = Split::kVal;
  r.image_path = image_rel_path(Split::kVal, "abc", 2);
  r.width_px = 940;
  r.height_px = 1216;
  r.scale = 1216.0 / 792.0;
  r.language = "en";
  r.labels = {label(1, 0.25, 0.15625, 0.3, 0.1875)};
  DatasetManifest m{r, r};
  m[1].page_index = 3;
  m[1].language.reset();
  m[1].domain = "tax";
  auto text = manifest_to_ndjson(m);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(manifest_from_ndjson(text), m);
  EXPECT_THROW(manifest_from_ndjson("{\"doc_id\": 5}\n"), ConfigError);
}

TEST(Tags, Examples) {
  ManifestRow r;
  r.doc_id = "A";
  DatasetManifest m{r};
  DatasetManifest before = m;
  EXPECT_TRUE(attach_tags(m, "").empty());
  EXPECT_EQ(m, before);

  auto w = attach_tags(m, "{\"doc_id\":\"A\",\"page_index\":0,\"language\":\"en\"}\n");
  EXPECT_TRUE(w.empty());
  EXPECT_EQ(m[0].language, "en");
  EXPECT_FALSE(m[0].domain.has_value());

  DatasetManifest m2{r};
  w = attach_tags(m2, "{\"doc_id\":\"A\",\"page_index\":7,\"language\":\"fr\"}\n");
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("A:7"), std::string::npos);
  EXPECT_EQ(m2, DatasetManifest{r});

  w = attach_tags(m2, "{\"doc_id\":\"A\",\"page_index\":0,\"colour\":\"blue\"}\n");
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("colour"), std::string::npos);

  EXPECT_THROW(attach_tags(m2, "not json\n"), MalformedTagFile);
  EXPECT_THROW(attach_tags(m2, "{\"page_index\":0}\n"), MalformedTagFile);
}

TEST(Emit, TwoPagesOneWithFields) {
  TempDir tmp;
  auto rec = mine_bytes(two_page_three_fields(), {});
  ASSERT_TRUE(rec.accepted());
  ASSERT_EQ(rec.annotation_count(), 3u);
  SplitAssignment split;
  split.by_doc[rec.doc_id] = Split::kTrain;
  BlankRenderer renderer;
  auto res = emit_dataset({rec}, split, {}, renderer, {tmp.path, false, 2});
  ASSERT_EQ(res.manifest.size(), 1u);
  EXPECT_EQ(res.render_failures, 0u);

  std::size_t pngs = 0, txts = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path)) {
    pngs += e.path().extension() == ".png";
    txts += e.path().extension() == ".txt";
  }
  EXPECT_EQ(pngs, 1u);
  EXPECT_EQ(txts, 1u);

  const ManifestRow& row = res.manifest[0];
  EXPECT_EQ(row.page_index, 0);
  EXPECT_EQ(row.width_px, 940);
  EXPECT_EQ(row.height_px, 1216);
  RasterImage img = read_png(tmp.path / row.image_path);
  EXPECT_EQ(img.width, 940);
  EXPECT_EQ(img.height, 1216);

  // Expected lines from the fixture rects by hand: s = 1216/792, y flips.
  const double s = 1216.0 / 792.0;
  struct R {
    int c;
    double x0, y0, x1, y1;
  } rects[] = {{1, 72, 720, 144, 756}, {0, 300, 400, 312, 412}, {2, 100, 100, 300, 140}};
  std::string text = slurp(tmp.path / label_rel_path(Split::kTrain, rec.doc_id, 0));
  std::istringstream lines(text);
  std::string line;
  int i = 0;
  while (std::getline(lines, line)) {
    ASSERT_LT(i, 3);
    const R& r = rects[i++];
    auto p = parse_label_line(line);
    EXPECT_EQ(class_code(p.field_class), r.c);
    EXPECT_NEAR(p.cx, (r.x0 + r.x1) / 2 * s / 940, 1e-6);
    EXPECT_NEAR(p.cy, (792 - (r.y0 + r.y1) / 2) * s / 1216, 1e-6);
    EXPECT_NEAR(p.w, (r.x1 - r.x0) * s / 940, 2e-6);
    EXPECT_NEAR(p.h, (r.y1 - r.y0) * s / 1216, 2e-6);
  }
  EXPECT_EQ(i, 3);
}

TEST(Emit, IncludeEmptyPages) {
  TempDir tmp;
  auto rec = mine_bytes(two_page_three_fields(), {});
  SplitAssignment split;
  split.by_doc[rec.doc_id] = Split::kVal;
  BlankRenderer renderer;
  auto res = emit_dataset({rec}, split, {}, renderer, {tmp.path, true, 1});
  ASSERT_EQ(res.manifest.size(), 2u);
  EXPECT_TRUE(res.manifest[1].labels.empty());
  EXPECT_TRUE(fs::exists(tmp.path / label_rel_path(Split::kVal, rec.doc_id, 1)));
}

TEST(Emit, EmptyRecordList) {
  TempDir tmp;
  BlankRenderer renderer;
  auto res = emit_dataset({}, {}, {}, renderer, {tmp.path / "out", false, 1});
  EXPECT_TRUE(res.manifest.empty());
  std::size_t files = 0;
  if (fs::exists(tmp.path / "out")) {
    for (const auto& e : fs::recursive_directory_iterator(tmp.path / "out")) files += e.is_regular_file();
  }
  EXPECT_EQ(files, 0u);
}

TEST(Emit, RejectedRecordsIgnoredAndMissingSplitIsError) {
  TempDir tmp;
  BlankRenderer renderer;
  auto flat = mine_bytes(fixtures::flat_pdf(), {});
  EXPECT_TRUE(emit_dataset({flat}, {}, {}, renderer, {tmp.path, false, 1}).manifest.empty());
  auto rec = mine_bytes(two_page_three_fields(), {});
  EXPECT_THROW(emit_dataset({rec}, {}, {}, renderer, {tmp.path, false, 1}), ConfigError);
}

class FailingRenderer : public PageRenderer {
 public:
  RasterImage render(const RenderRequest&) override { throw RenderFailure("boom"); }
};

TEST(Emit, RenderFailuresCountedNotFatal) {
  TempDir tmp;
  auto rec = mine_bytes(two_page_three_fields(), {});
  SplitAssignment split;
  split.by_doc[rec.doc_id] = Split::kTrain;
  FailingRenderer renderer;
  auto res = emit_dataset({rec}, split, {}, renderer, {tmp.path, false, 1});
  EXPECT_EQ(res.render_failures, 1u);
  EXPECT_TRUE(res.manifest.empty());
  ASSERT_EQ(res.failures.size(), 1u);
}

TEST(Emit, RerunIsByteIdentical) {
  TempDir a, b;
  auto rec1 = mine_bytes(two_page_three_fields(), {});
  auto rec2 = mine_bytes(fixtures::text_and_checkbox_pdf(), {});
  SplitAssignment split;
  split.by_doc[rec1.doc_id] = Split::kTrain;
  split.by_doc[rec2.doc_id] = Split::kTest;
  BlankRenderer renderer;
  auto ra = emit_dataset({rec1, rec2}, split, {}, renderer, {a.path, false, 1});
  auto rb = emit_dataset({rec2, rec1}, split, {}, renderer, {b.path, false, 4});
  EXPECT_EQ(manifest_to_ndjson(ra.manifest), manifest_to_ndjson(rb.manifest));
  for (const auto& row : ra.manifest) {
    EXPECT_EQ(slurp(a.path / label_rel_path(row.split, row.doc_id, row.page_index)),
              slurp(b.path / label_rel_path(row.split, row.doc_id, row.page_index)));
    EXPECT_EQ(slurp(a.path / row.image_path), slurp(b.path / row.image_path));
  }
}

TEST(Png, RoundTrip) {
  TempDir tmp;
  RasterImage img{3, 2, {255, 0, 0, 0, 255, 0, 0, 0, 255, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  write_png(tmp.path / "x.png", img);
  RasterImage back = read_png(tmp.path / "x.png");
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.rgb, img.rgb);
}

TEST(Ppm, Parse) {
  std::string ppm = "P6\n# c\n2 1\n255\n";
  ppm += std::string("\x01\x02\x03\x04\x05\x06", 6);
  RasterImage img = parse_ppm(ppm);
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.rgb[5], 6);
  EXPECT_THROW(parse_ppm("P6\n2 1\n255\n\x01"), RenderFailure);
  EXPECT_THROW(parse_ppm("P3\n1 1\n255\n0 0 0"), RenderFailure);
}
