/*
 * Copyright (c) 2026, The sessmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

#include "sessmon/value.hpp"

#include <sstream>

namespace sessmon {

std::string_view to_string(TypeTag tag) {
  switch (tag) {
    case TypeTag::String: return "String";
    case TypeTag::Double: return "Double";
    case TypeTag::Boolean: return "Boolean";
    case TypeTag::Long: return "Long";
    case TypeTag::Any: return "Any";
  }
  return "?";
}

std::optional<TypeTag> parse_type_tag(std::string_view text) {
  for (auto tag : {TypeTag::String, TypeTag::Double, TypeTag::Boolean, TypeTag::Long,
                   TypeTag::Any}) {
    if (to_string(tag) == text) return tag;
  }
  return std::nullopt;
}

TypeTag type_of(const Value& v) {
  struct Visitor {
    TypeTag operator()(std::monostate) const { return TypeTag::Any; }
    TypeTag operator()(bool) const { return TypeTag::Boolean; }
    TypeTag operator()(std::int64_t) const { return TypeTag::Long; }
    TypeTag operator()(double) const { return TypeTag::Double; }
    TypeTag operator()(const std::string&) const { return TypeTag::String; }
    TypeTag operator()(Token t) const { return t.type; }
    TypeTag operator()(Ack) const { return TypeTag::Any; }
  };
  return std::visit(Visitor{}, v);
}

std::string to_string(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "nil"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      std::ostringstream os;
      os.setf(std::ios::fixed);
      os.precision(2);
      os << d;
      return os.str();
    }
    std::string operator()(const std::string& s) const { return '"' + s + '"'; }
    std::string operator()(Token t) const {
      return "<token " + std::string(to_string(t.type)) + ">";
    }
    std::string operator()(Ack) const { return "<ack>"; }
  };
  return std::visit(Visitor{}, v);
}

}  // namespace sessmon
