#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <utility>

namespace neuroavoid {

/// Single-slot latest-value exchange. The writer overwrites, the reader takes
/// the most recent value; nothing queues and neither side waits on the other
/// beyond the slot lock.
template <typename T>
class LatestValue {
 public:
  void write(T value) {
    std::lock_guard lock(mutex_);
    value_ = std::move(value);
    ++version_;
  }

  std::optional<T> read() const {
    std::lock_guard lock(mutex_);
    return value_;
  }

  /// Value plus a counter that increases on every write.
  std::pair<std::optional<T>, std::uint64_t> read_versioned() const {
    std::lock_guard lock(mutex_);
    return {value_, version_};
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
  std::uint64_t version_ = 0;
};

}  // namespace neuroavoid
