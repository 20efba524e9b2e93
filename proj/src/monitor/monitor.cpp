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

#include "sessmon/monitor.hpp"

#include <utility>

namespace sessmon {

DetectorOptions Monitor::wire(Monitor* self, MonitorOptions& options) {
  DetectorOptions d = options.detector;
  if (options.on_deadlock) {
    auto user = d.on_deadlock;
    d.on_deadlock = [self, user](DeadlockSite site) {
      if (user) user(site);
      self->options_.on_deadlock(*self, site);
    };
  }
  return d;
}

Monitor::Monitor(SessionSpec spec, std::size_t n, MonitorOptions options)
    : spec_(std::move(spec)),
      n_(n),
      options_(std::move(options)),
      detector_(n == 0 ? throw UsageError("monitor needs n >= 1") : n, wire(this, options_)),
      residual_(initial(spec_)) {}

void Monitor::link(const Channel& ch, const Role& sender, const Role& receiver) {
  if (frozen_) throw UsageError("link after the session started");
  if (sender == receiver) throw UsageError("channel " + ch.name() + ": sender equals receiver");
  auto guard = detector_.enter();
  if (links_.count(ch.id())) throw UsageError("channel " + ch.name() + " linked twice");
  Channel mock(ch.capacity(), "mock:" + ch.name());
  mock_to_real_[mock.id()] = ch.id();
  links_.emplace(ch.id(), LinkEntry{ch, mock, sender, receiver});
}

void Monitor::register_thread(const Role& role) {
  auto guard = detector_.enter();
  std::lock_guard<std::mutex> lk(registry_mu_);
  if (registry_.count(std::this_thread::get_id())) {
    throw UsageError("thread already registered as :" + registry_.at(std::this_thread::get_id())->role.name);
  }
  if (registered_ever_ >= n_) {
    throw UsageError("session of " + std::to_string(n_) + " threads is full");
  }
  auto p = std::make_shared<Participant>();
  p->key = next_key_++;
  p->role = role;
  registry_.emplace(std::this_thread::get_id(), std::move(p));
  ++registered_ever_;
}

void Monitor::unregister_thread() {
  auto guard = detector_.enter();
  {
    std::lock_guard<std::mutex> lk(registry_mu_);
    if (!registry_.erase(std::this_thread::get_id())) {
      throw UsageError("unregister from a thread that is not registered");
    }
  }
  detector_.retire_locked();
}

std::shared_ptr<Monitor::Participant> Monitor::self() const {
  std::lock_guard<std::mutex> lk(registry_mu_);
  auto it = registry_.find(std::this_thread::get_id());
  if (it == registry_.end()) {
    throw RoleViolation("guarded action from a thread not registered with the monitor", "", "");
  }
  return it->second;
}

const LinkEntry& Monitor::link_of(const Channel& real, const Participant& p) const {
  auto it = links_.find(real.id());
  if (it == links_.end()) {
    throw RoleViolation(":" + p.role.name + " used channel " + real.name() +
                            ", which is not linked to the monitor",
                        p.role.name, real.name());
  }
  return it->second;
}

std::exception_ptr Monitor::verify_and_advance(const Participant& p,
                                               const ChannelAction& mock_action,
                                               const LinkEntry& link) {
  try {
    if (!detector_.holds_semaphore()) ++unguarded_updates_;
    if (poisoned_) throw SessionAborted("session stopped after a violation in another thread");

    const bool sending = mock_action.kind == ActionKind::Send;
    const Role& expected = sending ? link.sender : link.receiver;
    if (p.role != expected) {
      poisoned_ = true;
      throw RoleViolation(":" + p.role.name + (sending ? " sent on " : " received on ") +
                              link.real.name() + ", whose " + (sending ? "sender" : "receiver") +
                              " is :" + expected.name,
                          p.role.name, link.real.name());
    }

    CommEvent event{EventKind::Send, link.sender, link.receiver, type_of(mock_action.value)};
    if (link.real.buffered()) {
      if (!sending) event.kind = EventKind::Receive;
    } else {
      // One rendezvous is one event; the sending side reports it.
      if (!sending) return nullptr;
      event.kind = EventKind::Sync;
    }

    std::lock_guard<std::mutex> lk(state_mu_);
    auto next = step(residual_, event);
    if (!next) {
      poisoned_ = true;
      throw SafetyViolation(event, expected_events(residual_), link.real.name());
    }
    residual_ = std::move(*next);
    trace_.push_back(std::move(event));
    return nullptr;
  } catch (...) {
    return std::current_exception();
  }
}

SelectOutcome Monitor::guarded_select(std::span<const ChannelAction> actions) {
  if (actions.empty()) throw std::invalid_argument("guarded select: empty action list");
  auto p = self();
  frozen_ = true;

  std::vector<ChannelAction> mock;
  std::vector<const LinkEntry*> via;
  for (const auto& a : actions) {
    const LinkEntry& l = link_of(a.channel, *p);
    via.push_back(&l);
    mock.push_back(a.kind == ActionKind::Send
                       ? ChannelAction::send(l.mock, Token{type_of(a.value)})
                       : ChannelAction::receive(l.mock));
  }
  {
    std::lock_guard<std::mutex> lk(p->mu);
    p->mock_actions = mock;
  }
  p->phase = Phase::Checking;

  CompletionCheck check = [this, p, mock, via](const SelectOutcome& o) {
    return verify_and_advance(*p, mock[o.index], *via[o.index]);
  };

  try {
    SelectOutcome done = detector_.detect(p->key, mock, check);
    p->phase = Phase::Transferring;
    SelectOutcome out = transfer(*p, actions[done.index], done.index);
    p->phase = Phase::Idle;
    ++p->completed;
    return out;
  } catch (...) {
    p->phase = Phase::Idle;
    throw;
  }
}

SelectOutcome Monitor::transfer(Participant& p, const ChannelAction& real_action,
                                std::size_t index) {
  using Slot = std::variant<SelectOutcome, std::exception_ptr>;
  auto cell = std::make_shared<ResultCell<Slot>>();
  {
    std::lock_guard<std::mutex> lk(p.mu);
    if (detector_.halted()) {
      throw SessionAborted("session stopped before the transfer on " + real_action.channel.name());
    }
    p.real.cell = cell;
    p.real.handle = submit_select(std::span<const ChannelAction>(&real_action, 1),
                                  [cell](const SelectOutcome& o) { cell->try_set(o); });
  }
  Slot slot = cell->get();
  {
    std::lock_guard<std::mutex> lk(p.mu);
    p.real = {};
  }
  if (auto* err = std::get_if<std::exception_ptr>(&slot)) std::rethrow_exception(*err);
  SelectOutcome out = std::get<SelectOutcome>(slot);
  out.index = index;
  return out;
}

void Monitor::guarded_send(const Channel& ch, Value v) {
  guarded_select({ChannelAction::send(ch, std::move(v))});
}

Value Monitor::guarded_receive(const Channel& ch) {
  return guarded_select({ChannelAction::receive(ch)}).value;
}

void Monitor::abort(const std::string& reason) {
  auto error = std::make_exception_ptr(SessionAborted("session aborted: " + reason));
  {
    auto guard = detector_.enter();
    poisoned_ = true;
    detector_.halt_locked(error);
  }
  std::vector<std::shared_ptr<Participant>> live;
  {
    std::lock_guard<std::mutex> lk(registry_mu_);
    for (const auto& [tid, p] : registry_) live.push_back(p);
  }
  for (const auto& p : live) {
    std::lock_guard<std::mutex> lk(p->mu);
    if (p->real.cell && p->real.handle.cancel()) p->real.cell->try_set(error);
  }
}

ResidualSet Monitor::residual() const {
  std::lock_guard<std::mutex> lk(state_mu_);
  return residual_;
}

std::vector<CommEvent> Monitor::trace() const {
  std::lock_guard<std::mutex> lk(state_mu_);
  return trace_;
}

MonitorSnapshot Monitor::snapshot() const {
  MonitorSnapshot snap;
  {
    std::lock_guard<std::mutex> lk(registry_mu_);
    for (const auto& [tid, p] : registry_) {
      ParticipantView v;
      v.key = p->key;
      v.role = p->role;
      v.phase = p->phase.load();
      v.completed = p->completed.load();
      std::lock_guard<std::mutex> plk(p->mu);
      v.mock_actions = p->mock_actions;
      snap.participants.push_back(std::move(v));
    }
  }
  std::vector<Channel> mocks;
  for (const auto& [id, l] : links_) {
    snap.links.push_back(l);
    mocks.push_back(l.mock);
  }
  snap.mocks = sessmon::snapshot(mocks);
  return snap;
}

bool Monitor::lockstep_ok(std::string* why) const {
  for (const auto& [id, l] : links_) {
    std::vector<Channel> pair{l.real, l.mock};
    auto s = sessmon::snapshot(pair);
    const auto& real = s[0].buffer;
    const auto& mock = s[1].buffer;
    bool ok = real.size() == mock.size();
    for (std::size_t i = 0; ok && i < real.size(); ++i) ok = type_of(real[i]) == type_of(mock[i]);
    if (!ok) {
      if (why) {
        *why = l.real.name() + ": real buffer holds " + std::to_string(real.size()) +
               " value(s), mock holds " + std::to_string(mock.size());
      }
      return false;
    }
  }
  return true;
}

}  // namespace sessmon
