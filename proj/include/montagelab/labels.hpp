#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

enum class EventClass { SEIZ, BCKG };

inline std::string_view to_string(EventClass c) {
  return c == EventClass::SEIZ ? "SEIZ" : "BCKG";
}

inline std::optional<EventClass> parse_event_class(std::string_view s) {
  const std::string u = to_upper(trim(s));
  if (u == "SEIZ") return EventClass::SEIZ;
  if (u == "BCKG") return EventClass::BCKG;
  return std::nullopt;
}

struct LabelEvent {
  double start_s = 0.0;
  double stop_s = 0.0;
  EventClass cls = EventClass::BCKG;
  friend bool operator==(const LabelEvent&, const LabelEvent&) = default;
};

struct LabelSet {
  std::string recording_id;
  std::vector<LabelEvent> events;

  /// Class covering the largest part of [start, stop); nullopt when the span
  /// touches no event. Ties resolve to BCKG.
  std::optional<EventClass> majority_class(double start, double stop) const {
    double seiz = 0.0;
    double bckg = 0.0;
    for (const auto& e : events) {
      const double overlap = std::min(stop, e.stop_s) - std::max(start, e.start_s);
      if (overlap <= 0.0) continue;
      (e.cls == EventClass::SEIZ ? seiz : bckg) += overlap;
    }
    if (seiz == 0.0 && bckg == 0.0) return std::nullopt;
    return seiz > bckg ? EventClass::SEIZ : EventClass::BCKG;
  }

  /// Rejects events extending past the end of the recording.
  void check_within(double duration_s) const {
    for (const auto& e : events) {
      if (e.stop_s > duration_s + 1e-9) {
        throw Error(ErrorCode::NegativeSpanError,
                    "event ending at " + std::to_string(e.stop_s) + " s exceeds recording duration " +
                        std::to_string(duration_s) + " s");
      }
    }
  }
};

/// Parses "start stop CLASS" lines. Blank lines and lines starting with '#'
/// are ignored. Events are returned sorted by start time.
inline LabelSet parse_labels(std::string_view text, std::string recording_id = {}) {
  LabelSet set;
  set.recording_id = std::move(recording_id);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string a, b, c, extra;
    if (!(fields >> a >> b >> c) || (fields >> extra)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'start stop class'");
    }
    auto number = [&](const std::string& s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
      return v;
    };
    LabelEvent ev;
    ev.start_s = number(a);
    ev.stop_s = number(b);
    const auto cls = parse_event_class(c);
    if (!cls) {
      throw Error(ErrorCode::UnknownClassError, "line " + std::to_string(line_no) + ": unknown class '" + c + "'");
    }
    ev.cls = *cls;
    if (ev.start_s < 0.0 || !(ev.start_s < ev.stop_s)) {
      throw Error(ErrorCode::NegativeSpanError, "line " + std::to_string(line_no) + ": event [" + a + ", " + b +
                                                    ") has non-positive span");
    }
    set.events.push_back(ev);
  }
  std::stable_sort(set.events.begin(), set.events.end(),
                   [](const LabelEvent& x, const LabelEvent& y) { return x.start_s < y.start_s; });
  for (std::size_t i = 1; i < set.events.size(); ++i) {
    if (set.events[i].start_s < set.events[i - 1].stop_s) {
      throw Error(ErrorCode::OverlapError, "event starting at " + std::to_string(set.events[i].start_s) +
                                               " s overlaps the previous event");
    }
  }
  return set;
}

inline std::string format_labels(const LabelSet& set) {
  std::string out = "# start_s stop_s class\n";
  char buf[128];
  for (const auto& e : set.events) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %s\n", e.start_s, e.stop_s, std::string(to_string(e.cls)).c_str());
    out += buf;
  }
  return out;
}

}  // namespace mlab
