#pragma once

#include <deque>
#include <optional>

#include "catnet/core/types.hpp"

namespace catnet::stsync {

// The K most recent fused features, oldest first, one tick apart.
class FeatureBuffer {
 public:
  explicit FeatureBuffer(std::size_t capacity);

  // Appends an entry; its tick must be exactly one after the newest entry.
  // Evicts the oldest entry once the buffer holds `capacity` entries.
  void push(FeatureGrid entry);

  // Appends `entry` when present; otherwise repeats the newest entry under the
  // next tick (forward fill). Throws if the buffer is empty and entry is missing.
  void push_or_fill(std::optional<FeatureGrid> entry, Tick tick);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const FeatureGrid& operator[](std::size_t i) const { return entries_.at(i); }
  const FeatureGrid& newest() const { return entries_.back(); }
  const std::deque<FeatureGrid>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<FeatureGrid> entries_;
};

}  // namespace catnet::stsync
