#include "formdet/pdf/object.hpp"

namespace formdet::pdf {

std::optional<bool> Object::as_bool() const {
  if (const auto* b = std::get_if<bool>(&value_)) return *b;
  return std::nullopt;
}

std::optional<std::int64_t> Object::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&value_)) return *i;
  // Producers occasionally write integral values as reals ("3.0").
  if (const auto* d = std::get_if<double>(&value_)) {
    if (*d == static_cast<double>(static_cast<std::int64_t>(*d))) {
      return static_cast<std::int64_t>(*d);
    }
  }
  return std::nullopt;
}

std::optional<double> Object::as_number() const {
  if (const auto* i = std::get_if<std::int64_t>(&value_)) {
    return static_cast<double>(*i);
  }
  if (const auto* d = std::get_if<double>(&value_)) return *d;
  return std::nullopt;
}

const std::string* Object::as_name() const {
  if (const auto* n = std::get_if<Name>(&value_)) return &n->value;
  return nullptr;
}

const std::string* Object::as_string() const {
  if (const auto* s = std::get_if<String>(&value_)) return &s->bytes;
  return nullptr;
}

std::optional<Ref> Object::as_ref() const {
  if (const auto* r = std::get_if<Ref>(&value_)) return *r;
  return std::nullopt;
}

const Dict* Object::dict() const {
  if (const auto* d = std::get_if<Dict>(&value_)) return d;
  if (const auto* s = std::get_if<Stream>(&value_)) return &s->dict;
  return nullptr;
}

Dict* Object::dict() {
  if (auto* d = std::get_if<Dict>(&value_)) return d;
  if (auto* s = std::get_if<Stream>(&value_)) return &s->dict;
  return nullptr;
}

bool Object::operator==(const Object& o) const {
  if (value_.index() != o.value_.index()) return false;
  return std::visit(
      [&](const auto& a) -> bool {
        using T = std::decay_t<decltype(a)>;
        const auto& b = std::get<T>(o.value_);
        if constexpr (std::is_same_v<T, Stream>) {
          return a.dict == b.dict && a.data == b.data;
        } else {
          return a == b;
        }
      },
      value_);
}

const Object* find(const Dict& d, std::string_view key) {
  auto it = d.find(key);
  return it == d.end() ? nullptr : &it->second;
}

}  // namespace formdet::pdf
