#include "catnet/stsync/feature_buffer.hpp"

#include <stdexcept>
#include <string>

namespace catnet::stsync {

FeatureBuffer::FeatureBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("feature buffer capacity must be positive");
}

void FeatureBuffer::push(FeatureGrid entry) {
  if (!entries_.empty()) {
    if (entry.tick != entries_.back().tick + 1) {
      throw std::invalid_argument("feature buffer: tick " + std::to_string(entry.tick) +
                                  " does not follow " + std::to_string(entries_.back().tick));
    }
    if (entry.shape() != entries_.back().shape()) {
      throw std::invalid_argument("feature buffer: entry shape " + shape_str(entry.shape()) +
                                  " differs from " + shape_str(entries_.back().shape()));
    }
  }
  entries_.push_back(std::move(entry));
  if (entries_.size() > capacity_) entries_.pop_front();
}

void FeatureBuffer::push_or_fill(std::optional<FeatureGrid> entry, Tick tick) {
  if (entry) {
    entry->tick = tick;
    push(std::move(*entry));
    return;
  }
  if (entries_.empty()) throw std::logic_error("feature buffer: nothing to forward-fill from");
  FeatureGrid filled = entries_.back();
  filled.tick = tick;
  push(std::move(filled));
}

}  // namespace catnet::stsync
