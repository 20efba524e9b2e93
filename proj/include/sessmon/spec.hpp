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

#ifndef SESSMON_SPEC_HPP_
#define SESSMON_SPEC_HPP_

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sessmon/value.hpp"

namespace sessmon {

/// Participant name, written `:name` in protocol files.
struct Role {
  std::string name;
  friend auto operator<=>(const Role&, const Role&) = default;
};

enum class CommMode { Async, Sync };

struct SpecNode;
/// Immutable, shareable protocol term.
using SessionSpec = std::shared_ptr<const SpecNode>;

struct End {};
/// `(-->> T :p :q)` or `(--> T :p :q)`.
struct Comm {
  CommMode mode;
  TypeTag type;
  Role sender;
  Role receiver;
};
/// Residual of an async Comm whose send happened and whose receive is owed.
struct RecvPending {
  TypeTag type;
  Role sender;
  Role receiver;
};
struct Cat {
  std::vector<SessionSpec> children;
};
struct Alt {
  std::vector<SessionSpec> children;
};
struct Par {
  std::vector<SessionSpec> children;
};

struct SpecNode {
  std::variant<End, Comm, RecvPending, Cat, Alt, Par> node;
};

namespace spec {
SessionSpec end();
SessionSpec async(TypeTag t, Role p, Role q);
SessionSpec sync(TypeTag t, Role p, Role q);
SessionSpec recv_pending(TypeTag t, Role p, Role q);
SessionSpec cat(std::vector<SessionSpec> children);
SessionSpec alt(std::vector<SessionSpec> children);
SessionSpec par(std::vector<SessionSpec> children);
}  // namespace spec

/// Structural total order; equal specs compare equal regardless of sharing.
std::strong_ordering compare(const SessionSpec& a, const SessionSpec& b);
inline bool equal(const SessionSpec& a, const SessionSpec& b) {
  return compare(a, b) == std::strong_ordering::equal;
}

enum class EventKind { Send, Receive, Sync };

/// A communication observed by the monitor.
struct CommEvent {
  EventKind kind;
  Role sender;
  Role receiver;
  TypeTag type = TypeTag::Any;  // ignored for Receive

  friend bool operator==(const CommEvent& a, const CommEvent& b) {
    return a.kind == b.kind && a.sender == b.sender && a.receiver == b.receiver &&
           (a.kind == EventKind::Receive || a.type == b.type);
  }
};

std::string to_string(const CommEvent& e);

/// Set of residual protocols reached by the trace so far. Kept sorted and
/// duplicate-free so that two sets compare equal iff they hold the same terms.
class ResidualSet {
 public:
  ResidualSet() = default;
  explicit ResidualSet(std::vector<SessionSpec> members);

  const std::vector<SessionSpec>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

  friend bool operator==(const ResidualSet& a, const ResidualSet& b);

 private:
  std::vector<SessionSpec> members_;
};

ResidualSet initial(const SessionSpec& s);

/// Residuals after `e`, or nullopt when no member allows it (forbidden).
std::optional<ResidualSet> step(const ResidualSet& rs, const CommEvent& e);

/// Residuals of a single term after `e`; empty when forbidden.
std::vector<SessionSpec> step(const SessionSpec& s, const CommEvent& e);

bool is_terminated(const SessionSpec& s);
bool is_terminated(const ResidualSet& rs);

/// Event shapes some member would accept next; used for diagnostics.
/// Send/Sync entries carry the declared tag.
std::vector<CommEvent> expected_events(const ResidualSet& rs);

// --- surface syntax ---------------------------------------------------------

struct SessionDef {
  std::string name;  // without the leading colon
  SessionSpec body;
};

struct ProtocolFile {
  std::vector<Role> roles;
  std::vector<SessionDef> sessions;

  const SessionDef* find(std::string_view name) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

ProtocolFile parse_spec(std::string_view text);

/// Body in one-line s-expression form, e.g. `(cat (-->> Long :a :b) ...)`.
std::string to_string(const SessionSpec& s);

/// Whole file with indentation; `parse_spec` reads it back to the same AST.
std::string print_protocol(const ProtocolFile& file);

}  // namespace sessmon

#endif  // SESSMON_SPEC_HPP_
