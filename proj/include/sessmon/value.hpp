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

#ifndef SESSMON_VALUE_HPP_
#define SESSMON_VALUE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace sessmon {

/// Payload type tags understood by the protocol language.
enum class TypeTag { String, Double, Boolean, Long, Any };

std::string_view to_string(TypeTag tag);
std::optional<TypeTag> parse_type_tag(std::string_view text);

/// Exact tag match; `Any` on the declared side accepts everything.
constexpr bool conforms(TypeTag actual, TypeTag declared) {
  return declared == TypeTag::Any || actual == declared;
}

/// Acknowledgment delivered as the value of a completed send.
struct Ack {
  friend bool operator==(Ack, Ack) { return true; }
};

/// Stand-in for a real value on a mock channel; remembers only the type.
struct Token {
  TypeTag type = TypeTag::Any;
  friend bool operator==(Token, Token) = default;
};

/// Dynamic value carried by channels. `std::monostate` plays the role of nil.
using Value =
    std::variant<std::monostate, bool, std::int64_t, double, std::string, Token, Ack>;

/// Type tag of a concrete value. Tokens report the tag they stand for;
/// nil and acknowledgments report `Any`.
TypeTag type_of(const Value& v);

std::string to_string(const Value& v);

}  // namespace sessmon

#endif  // SESSMON_VALUE_HPP_
