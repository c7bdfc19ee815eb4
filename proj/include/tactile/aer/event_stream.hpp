#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tactile/errors.hpp"

namespace tactile::aer {

inline constexpr std::uint16_t kSensorWidth = 640;
inline constexpr std::uint16_t kSensorHeight = 480;
inline constexpr std::uint32_t kTrialDurationUs = 1'000'000;

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

struct Event {
  std::uint32_t t = 0;  // microseconds since trial start
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Polarity polarity = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

// Time-ordered AER record of one trial. Immutable once constructed; every
// constructor path checks bounds and establishes the ordering invariant.
class EventStream {
public:
  EventStream() = default;

  // Throws ArgumentError if any event lies outside width x height x duration.
  // Unsorted input is stably sorted by t and resorted() reports it.
  EventStream(std::uint16_t width, std::uint16_t height, std::uint32_t duration_us,
              std::vector<Event> events)
      : width_(width), height_(height), duration_us_(duration_us), events_(std::move(events)) {
    for (const auto& e : events_) {
      if (e.x >= width_ || e.y >= height_ || e.t >= duration_us_)
        throw ArgumentError("event (t=" + std::to_string(e.t) + ", x=" + std::to_string(e.x) +
                            ", y=" + std::to_string(e.y) + ") outside " + std::to_string(width_) +
                            "x" + std::to_string(height_) + " over " +
                            std::to_string(duration_us_) + " us");
    }
    const auto by_time = [](const Event& a, const Event& b) { return a.t < b.t; };
    if (!std::is_sorted(events_.begin(), events_.end(), by_time)) {
      std::stable_sort(events_.begin(), events_.end(), by_time);
      resorted_ = true;
    }
  }

  std::uint16_t width() const noexcept { return width_; }
  std::uint16_t height() const noexcept { return height_; }
  std::uint32_t duration_us() const noexcept { return duration_us_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  // True when construction had to reorder the supplied events.
  bool resorted() const noexcept { return resorted_; }

  friend bool operator==(const EventStream& a, const EventStream& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.duration_us_ == b.duration_us_ &&
           a.events_ == b.events_;
  }

private:
  std::uint16_t width_ = 0;
  std::uint16_t height_ = 0;
  std::uint32_t duration_us_ = 0;
  std::vector<Event> events_;
  bool resorted_ = false;
};

}  // namespace tactile::aer
