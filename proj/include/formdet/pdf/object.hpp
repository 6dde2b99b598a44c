#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace formdet::pdf {

struct Null {
  bool operator==(const Null&) const = default;
};

struct Name {
  std::string value;
  auto operator<=>(const Name&) const = default;
};

struct String {
  std::string bytes;
  bool hex = false;
  bool operator==(const String& o) const { return bytes == o.bytes; }
};

struct Ref {
  std::uint32_t num = 0;
  std::uint16_t gen = 0;
  auto operator<=>(const Ref&) const = default;
};

class Object;
using Array = std::vector<Object>;
using Dict = std::map<std::string, Object, std::less<>>;

// Raw (still encoded) stream bytes together with the stream dictionary.
struct Stream {
  Dict dict;
  std::string data;
};

class Object {
 public:
  using Value = std::variant<Null, bool, std::int64_t, double, Name, String,
                             Ref, Array, Dict, Stream>;

  Object() = default;
  Object(Null) {}
  Object(bool b) : value_(b) {}
  Object(int i) : value_(static_cast<std::int64_t>(i)) {}
  Object(std::int64_t i) : value_(i) {}
  Object(double d) : value_(d) {}
  Object(Name n) : value_(std::move(n)) {}
  Object(String s) : value_(std::move(s)) {}
  Object(Ref r) : value_(r) {}
  Object(Array a) : value_(std::move(a)) {}
  Object(Dict d) : value_(std::move(d)) {}
  Object(Stream s) : value_(std::move(s)) {}

  bool is_null() const { return std::holds_alternative<Null>(value_); }
  bool is_bool() const { return std::holds_alternative<bool>(value_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_real() const { return std::holds_alternative<double>(value_); }
  bool is_number() const { return is_int() || is_real(); }
  bool is_name() const { return std::holds_alternative<Name>(value_); }
  bool is_name(std::string_view n) const {
    const auto* p = std::get_if<Name>(&value_);
    return p != nullptr && p->value == n;
  }
  bool is_string() const { return std::holds_alternative<String>(value_); }
  bool is_ref() const { return std::holds_alternative<Ref>(value_); }
  bool is_array() const { return std::holds_alternative<Array>(value_); }
  bool is_dict() const { return std::holds_alternative<Dict>(value_); }
  bool is_stream() const { return std::holds_alternative<Stream>(value_); }

  std::optional<bool> as_bool() const;
  std::optional<std::int64_t> as_int() const;
  std::optional<double> as_number() const;
  const std::string* as_name() const;
  const std::string* as_string() const;
  std::optional<Ref> as_ref() const;

  const Array* array() const { return std::get_if<Array>(&value_); }
  Array* array() { return std::get_if<Array>(&value_); }
  // Dictionary of a dict object or of a stream object.
  const Dict* dict() const;
  Dict* dict();
  const Stream* stream() const { return std::get_if<Stream>(&value_); }
  Stream* stream() { return std::get_if<Stream>(&value_); }

  const Value& value() const { return value_; }
  Value& value() { return value_; }

  bool operator==(const Object& o) const;

 private:
  Value value_;
};

// Entry lookup returning nullptr when absent.
const Object* find(const Dict& d, std::string_view key);

}  // namespace formdet::pdf
