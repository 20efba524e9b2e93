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

#include <algorithm>
#include <utility>

#include "sessmon/spec.hpp"

namespace sessmon {

namespace spec {

SessionSpec end() {
  static const SessionSpec kEnd = std::make_shared<const SpecNode>(SpecNode{End{}});
  return kEnd;
}
SessionSpec async(TypeTag t, Role p, Role q) {
  return std::make_shared<const SpecNode>(
      SpecNode{Comm{CommMode::Async, t, std::move(p), std::move(q)}});
}
SessionSpec sync(TypeTag t, Role p, Role q) {
  return std::make_shared<const SpecNode>(
      SpecNode{Comm{CommMode::Sync, t, std::move(p), std::move(q)}});
}
SessionSpec recv_pending(TypeTag t, Role p, Role q) {
  return std::make_shared<const SpecNode>(SpecNode{RecvPending{t, std::move(p), std::move(q)}});
}
SessionSpec cat(std::vector<SessionSpec> children) {
  return std::make_shared<const SpecNode>(SpecNode{Cat{std::move(children)}});
}
SessionSpec alt(std::vector<SessionSpec> children) {
  return std::make_shared<const SpecNode>(SpecNode{Alt{std::move(children)}});
}
SessionSpec par(std::vector<SessionSpec> children) {
  return std::make_shared<const SpecNode>(SpecNode{Par{std::move(children)}});
}

}  // namespace spec

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::strong_ordering compare_children(const std::vector<SessionSpec>& a,
                                      const std::vector<SessionSpec>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (auto c = compare(a[i], b[i]); c != 0) return c;
  }
  return a.size() <=> b.size();
}

bool is_end(const SessionSpec& s) { return std::holds_alternative<End>(s->node); }

// Residual constructors for stepping. Finished parts are dropped so that
// equivalent residuals collapse in the set.
SessionSpec make_cat(std::vector<SessionSpec> children) {
  std::erase_if(children, is_end);
  if (children.empty()) return spec::end();
  if (children.size() == 1) return children.front();
  return spec::cat(std::move(children));
}

SessionSpec make_par(std::vector<SessionSpec> children) {
  std::erase_if(children, is_end);
  if (children.empty()) return spec::end();
  if (children.size() == 1) return children.front();
  return spec::par(std::move(children));
}

bool roles_match(const CommEvent& e, const Role& p, const Role& q) {
  return e.sender == p && e.receiver == q;
}

void collect_expected(const SessionSpec& s, std::vector<CommEvent>& out) {
  std::visit(Overloaded{
                 [](const End&) {},
                 [&](const Comm& c) {
                   out.push_back({c.mode == CommMode::Async ? EventKind::Send : EventKind::Sync,
                                  c.sender, c.receiver, c.type});
                 },
                 [&](const RecvPending& r) {
                   out.push_back({EventKind::Receive, r.sender, r.receiver, r.type});
                 },
                 [&](const Cat& c) {
                   for (const auto& child : c.children) {
                     collect_expected(child, out);
                     if (!is_terminated(child)) break;
                   }
                 },
                 [&](const Alt& a) {
                   for (const auto& child : a.children) collect_expected(child, out);
                 },
                 [&](const Par& p) {
                   for (const auto& child : p.children) collect_expected(child, out);
                 },
             },
             s->node);
}

}  // namespace

std::strong_ordering compare(const SessionSpec& a, const SessionSpec& b) {
  if (a == b) return std::strong_ordering::equal;
  if (auto c = a->node.index() <=> b->node.index(); c != 0) return c;
  return std::visit(
      Overloaded{
          [](const End&) { return std::strong_ordering::equal; },
          [&](const Comm& x) {
            const auto& y = std::get<Comm>(b->node);
            if (auto c = x.mode <=> y.mode; c != 0) return c;
            if (auto c = x.type <=> y.type; c != 0) return c;
            if (auto c = x.sender <=> y.sender; c != 0) return c;
            return x.receiver <=> y.receiver;
          },
          [&](const RecvPending& x) {
            const auto& y = std::get<RecvPending>(b->node);
            if (auto c = x.type <=> y.type; c != 0) return c;
            if (auto c = x.sender <=> y.sender; c != 0) return c;
            return x.receiver <=> y.receiver;
          },
          [&](const Cat& x) { return compare_children(x.children, std::get<Cat>(b->node).children); },
          [&](const Alt& x) { return compare_children(x.children, std::get<Alt>(b->node).children); },
          [&](const Par& x) { return compare_children(x.children, std::get<Par>(b->node).children); },
      },
      a->node);
}

std::string to_string(const CommEvent& e) {
  std::string arrow = e.sender.name + "->" + e.receiver.name;
  switch (e.kind) {
    case EventKind::Send: return "send " + arrow + " " + std::string(to_string(e.type));
    case EventKind::Receive: return "receive " + arrow;
    case EventKind::Sync: return "sync " + arrow + " " + std::string(to_string(e.type));
  }
  return arrow;
}

ResidualSet::ResidualSet(std::vector<SessionSpec> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end(),
            [](const SessionSpec& a, const SessionSpec& b) { return compare(a, b) < 0; });
  members_.erase(std::unique(members_.begin(), members_.end(), equal), members_.end());
}

bool operator==(const ResidualSet& a, const ResidualSet& b) {
  return std::equal(a.members_.begin(), a.members_.end(), b.members_.begin(), b.members_.end(),
                    equal);
}

ResidualSet initial(const SessionSpec& s) { return ResidualSet({s}); }

bool is_terminated(const SessionSpec& s) {
  return std::visit(Overloaded{
                        [](const End&) { return true; },
                        [](const Comm&) { return false; },
                        [](const RecvPending&) { return false; },
                        [](const Cat& c) {
                          return std::all_of(c.children.begin(), c.children.end(),
                                             [](const auto& x) { return is_terminated(x); });
                        },
                        [](const Alt& a) {
                          return std::any_of(a.children.begin(), a.children.end(),
                                             [](const auto& x) { return is_terminated(x); });
                        },
                        [](const Par& p) {
                          return std::all_of(p.children.begin(), p.children.end(),
                                             [](const auto& x) { return is_terminated(x); });
                        },
                    },
                    s->node);
}

bool is_terminated(const ResidualSet& rs) {
  return std::any_of(rs.members().begin(), rs.members().end(),
                     [](const SessionSpec& s) { return is_terminated(s); });
}

std::vector<SessionSpec> step(const SessionSpec& s, const CommEvent& e) {
  std::vector<SessionSpec> out;
  std::visit(
      Overloaded{
          [](const End&) {},
          [&](const Comm& c) {
            if (!roles_match(e, c.sender, c.receiver)) return;
            if (e.kind == EventKind::Receive || !conforms(e.type, c.type)) return;
            if (c.mode == CommMode::Async && e.kind == EventKind::Send) {
              out.push_back(spec::recv_pending(c.type, c.sender, c.receiver));
            } else if (e.kind == EventKind::Sync) {
              // A rendezvous is a send and its receive at once, which an async
              // Comm also permits.
              out.push_back(spec::end());
            }
          },
          [&](const RecvPending& r) {
            if (e.kind == EventKind::Receive && roles_match(e, r.sender, r.receiver)) {
              out.push_back(spec::end());
            }
          },
          [&](const Cat& c) {
            for (std::size_t j = 0; j < c.children.size(); ++j) {
              for (auto& r : step(c.children[j], e)) {
                std::vector<SessionSpec> rest;
                rest.push_back(std::move(r));
                rest.insert(rest.end(), c.children.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                            c.children.end());
                out.push_back(make_cat(std::move(rest)));
              }
              if (!is_terminated(c.children[j])) break;
            }
          },
          [&](const Alt& a) {
            for (const auto& child : a.children) {
              auto rs = step(child, e);
              out.insert(out.end(), rs.begin(), rs.end());
            }
          },
          [&](const Par& p) {
            for (std::size_t j = 0; j < p.children.size(); ++j) {
              for (auto& r : step(p.children[j], e)) {
                auto children = p.children;
                children[j] = std::move(r);
                out.push_back(make_par(std::move(children)));
              }
            }
          },
      },
      s->node);
  return out;
}

std::optional<ResidualSet> step(const ResidualSet& rs, const CommEvent& e) {
  std::vector<SessionSpec> next;
  for (const auto& member : rs.members()) {
    auto r = step(member, e);
    next.insert(next.end(), r.begin(), r.end());
  }
  if (next.empty()) return std::nullopt;
  return ResidualSet(std::move(next));
}

std::vector<CommEvent> expected_events(const ResidualSet& rs) {
  std::vector<CommEvent> out;
  for (const auto& member : rs.members()) collect_expected(member, out);
  std::vector<CommEvent> unique;
  for (auto& e : out) {
    if (std::find(unique.begin(), unique.end(), e) == unique.end()) unique.push_back(std::move(e));
  }
  return unique;
}

}  // namespace sessmon
