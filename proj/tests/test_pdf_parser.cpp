#include <gtest/gtest.h>

#include "formdet/errors.hpp"
#include "formdet/pdf/document.hpp"
#include "formdet/pdf/filters.hpp"
#include "formdet/pdf/parser.hpp"
#include "pdf_fixtures.hpp"

using namespace formdet;
using namespace formdet::pdf;

namespace {

Object parse(const std::string& s) {
  Parser p(s);
  return p.parse_object();
}

}  // namespace

TEST(Parser, Scalars) {
  EXPECT_EQ(parse("42").as_int(), 42);
  EXPECT_EQ(parse("-3.5").as_number(), -3.5);
  EXPECT_EQ(parse(".5").as_number(), 0.5);
  EXPECT_EQ(parse("true").as_bool(), true);
  EXPECT_TRUE(parse("null").is_null());
  EXPECT_TRUE(parse("/Name").is_name("Name"));
  EXPECT_TRUE(parse("/A#20B").is_name("A B"));
}

TEST(Parser, Strings) {
  EXPECT_EQ(*parse("(a\\(b\\)c)").as_string(), "a(b)c");
  EXPECT_EQ(*parse("(nested (parens) ok)").as_string(), "nested (parens) ok");
  EXPECT_EQ(*parse("(\\101\\n)").as_string(), "A\n");
  EXPECT_EQ(*parse("<48656C6C6F>").as_string(), "Hello");
  EXPECT_EQ(*parse("<486>").as_string(), std::string("H`"));
}

TEST(Parser, ContainersAndRefs) {
  Object o = parse("<< /Kids [1 0 R 2 0 R] /Count 2 /Nested << /K (v) >> >>");
  ASSERT_TRUE(o.is_dict());
  const Array* kids = find(*o.dict(), "Kids")->array();
  ASSERT_NE(kids, nullptr);
  ASSERT_EQ(kids->size(), 2u);
  EXPECT_EQ((*kids)[1].as_ref()->num, 2u);
  EXPECT_EQ(find(*o.dict(), "Count")->as_int(), 2);
  Object arr = parse("[1 2 R 3]");
  ASSERT_TRUE(arr.is_array());
  ASSERT_EQ(arr.array()->size(), 2u);
  EXPECT_TRUE((*arr.array())[0].is_ref());
  EXPECT_EQ(parse("[1 2 3]").array()->size(), 3u);
}

TEST(Parser, UnterminatedThrows) {
  EXPECT_THROW(parse("[1 2"), MalformedPdf);
  EXPECT_THROW(parse("<< /A"), MalformedPdf);
}

TEST(Filters, FlateRoundTrip) {
  std::string in(5000, 'x');
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<char>('a' + i % 17);
  EXPECT_EQ(flate_decode(flate_encode(in)), in);
}

TEST(Filters, AsciiHexAnd85) {
  EXPECT_EQ(ascii_hex_decode("48 65 6c6c 6F>"), "Hello");
  EXPECT_EQ(ascii85_decode("87cURD]i,\"Ebo80~>"), "Hello World!");
  EXPECT_EQ(ascii85_decode("z~>"), std::string(4, '\0'));
}

TEST(Filters, RunLength) {
  std::string enc = std::string("\x02", 1) + "abc" + std::string("\xfe", 1) + "z" + std::string("\x80", 1);
  EXPECT_EQ(run_length_decode(enc), "abczzz");
}

TEST(Filters, PngUpPredictor) {
  // Two rows of 3 bytes with the Up filter on row 2.
  std::string raw = std::string("\x00\x01\x02\x03", 4) + std::string("\x02\x01\x01\x01", 4);
  EXPECT_EQ(unpredict(raw, 12, 1, 8, 3), std::string("\x01\x02\x03\x02\x03\x04", 6));
}

TEST(Document, ClassicXref) {
  Document doc(fixtures::flat_pdf(3));
  EXPECT_EQ(doc.pages().size(), 3u);
  EXPECT_FALSE(doc.reconstructed());
  EXPECT_FALSE(doc.uses_xref_streams());
}

TEST(Document, XrefStreamAndObjectStream) {
  fixtures::Spec s;
  s.xref_stream = true;
  s.fields.push_back(fixtures::text(0, 10, 10, 100, 30, "a"));
  Document doc(fixtures::build(s));
  EXPECT_TRUE(doc.uses_xref_streams());
  ASSERT_EQ(doc.pages().size(), 1u);
  const Object* af = find(doc.catalog(), "AcroForm");
  ASSERT_NE(af, nullptr);
  const Array* fields = doc.resolve_array(*find(*doc.resolve_dict(*af), "Fields"));
  ASSERT_NE(fields, nullptr);
  EXPECT_EQ(fields->size(), 1u);
}

TEST(Document, RecoversFromBadStartxref) {
  std::string pdf = fixtures::flat_pdf(2);
  std::size_t pos = pdf.rfind("startxref\n");
  ASSERT_NE(pos, std::string::npos);
  pdf = pdf.substr(0, pos) + "startxref\n999999\n%%EOF\n";
  Document doc(pdf);
  EXPECT_TRUE(doc.reconstructed());
  EXPECT_EQ(doc.pages().size(), 2u);
}

TEST(Document, RecoversFromShiftedOffsets) {
  std::string pdf = fixtures::flat_pdf(1);
  pdf.insert(pdf.find("1 0 obj"), "% padding comment that shifts every offset\n");
  Document doc(pdf);
  EXPECT_EQ(doc.pages().size(), 1u);
}

TEST(Document, TruncatedIsMalformed) {
  std::string pdf = fixtures::flat_pdf(1);
  EXPECT_THROW(Document(pdf.substr(0, 100)), MalformedPdf);
  EXPECT_THROW(Document("not a pdf at all"), MalformedPdf);
  EXPECT_THROW(Document(""), MalformedPdf);
}

TEST(Document, EncryptedIsRejected) {
  fixtures::Spec s;
  s.encrypt = true;
  EXPECT_THROW(Document(fixtures::build(s)), EncryptedPdf);
}

TEST(Document, CompressedContentDecodes) {
  fixtures::Spec s;
  s.compress_content = true;
  s.pages[0].text = "Compressed";
  Document doc(fixtures::build(s));
  const Object* contents = find(*doc.pages()[0].dict, "Contents");
  ASSERT_NE(contents, nullptr);
  const Object& stream = doc.resolve(*contents);
  ASSERT_TRUE(stream.is_stream());
  EXPECT_NE(doc.decode(*stream.stream()).find("(Compressed) Tj"), std::string::npos);
}
