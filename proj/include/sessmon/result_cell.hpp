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

#ifndef SESSMON_RESULT_CELL_HPP_
#define SESSMON_RESULT_CELL_HPP_

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <utility>

namespace sessmon {

/**
 * One-shot slot: written at most once, read by a thread that parks until the
 * write happens. The first write wins; later writes are refused.
 */
template <class T>
class ResultCell {
 public:
  ResultCell() = default;
  ResultCell(const ResultCell&) = delete;
  ResultCell& operator=(const ResultCell&) = delete;

  bool try_set(T value) {
    std::lock_guard<std::mutex> lk(mu_);
    if (slot_) return false;
    slot_.emplace(std::move(value));
    cv_.notify_all();
    return true;
  }

  T get() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [this] { return slot_.has_value(); });
    return *slot_;
  }

  template <class Rep, class Period>
  std::optional<T> get_for(std::chrono::duration<Rep, Period> d) {
    std::unique_lock<std::mutex> lk(mu_);
    if (!cv_.wait_for(lk, d, [this] { return slot_.has_value(); })) return std::nullopt;
    return *slot_;
  }

  bool ready() const {
    std::lock_guard<std::mutex> lk(mu_);
    return slot_.has_value();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<T> slot_;
};

}  // namespace sessmon

#endif  // SESSMON_RESULT_CELL_HPP_
