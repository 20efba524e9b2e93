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

#ifndef SESSMON_ERRORS_HPP_
#define SESSMON_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sessmon/spec.hpp"

namespace sessmon {

/// Base of every violation the monitor reports to session threads.
class MonitorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How a total deadlock was noticed.
enum class DeadlockSite {
  LastThread,  // the last live thread was about to suspend
  Unregister,  // a thread left and every remaining thread was suspended
};

/// Liveness violation: every live thread of the session is suspended.
class DeadlockException : public MonitorError {
 public:
  DeadlockException(DeadlockSite site, std::size_t live, std::size_t initial_total);

  DeadlockSite site() const { return site_; }
  /// Live thread count when the deadlock was detected.
  std::size_t live() const { return live_; }
  std::size_t initial_total() const { return initial_total_; }

 private:
  DeadlockSite site_;
  std::size_t live_;
  std::size_t initial_total_;
};

/// Safety violation: the protocol does not allow the completed communication.
class SafetyViolation : public MonitorError {
 public:
  SafetyViolation(CommEvent event, std::vector<CommEvent> expected, std::string channel);

  const CommEvent& event() const { return event_; }
  const std::vector<CommEvent>& expected() const { return expected_; }
  const std::string& channel() const { return channel_; }

 private:
  CommEvent event_;
  std::vector<CommEvent> expected_;
  std::string channel_;
};

/// A thread completed a send or receive on a channel where its role is not
/// the linked sender or receiver, or used a channel the monitor does not know.
class RoleViolation : public MonitorError {
 public:
  RoleViolation(const std::string& what, std::string role, std::string channel);

  const std::string& role() const { return role_; }
  const std::string& channel() const { return channel_; }

 private:
  std::string role_;
  std::string channel_;
};

/// The session was stopped because another thread hit a violation, or
/// because a supervisor aborted it.
class SessionAborted : public MonitorError {
 public:
  using MonitorError::MonitorError;
};

/// Misuse of the setup API (double link, over-registration, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Broken internal assumption of the detection algorithm.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sessmon

#endif  // SESSMON_ERRORS_HPP_
