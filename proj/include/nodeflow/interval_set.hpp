#ifndef NODEFLOW_INTERVAL_SET_HPP
#define NODEFLOW_INTERVAL_SET_HPP

#include <algorithm>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nodeflow {

/// Closed span [lo, hi] inside the unit interval.
struct Span {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Finite union of disjoint closed subintervals of [0,1].
///
/// Spans are kept sorted, merged when they overlap or touch, and zero-length
/// spans are dropped, so an empty set means "no restriction" and {[0,1]}
/// means "full restriction". Values are immutable once built.
class IntervalSet {
 public:
  IntervalSet() = default;

  /// Builds a normalized set; throws std::invalid_argument when an endpoint
  /// lies outside [0,1] or lo > hi.
  static IntervalSet make(std::span<const Span> spans) {
    std::vector<Span> sorted;
    sorted.reserve(spans.size());
    for (const Span& s : spans) {
      if (!(s.lo >= 0.0 && s.hi <= 1.0 && s.lo <= s.hi)) {
        throw std::invalid_argument("interval [" + std::to_string(s.lo) + ", " +
                                    std::to_string(s.hi) +
                                    "] is not a subinterval of [0,1]");
      }
      if (s.hi > s.lo) sorted.push_back(s);
    }
    return IntervalSet(normalize(std::move(sorted)));
  }

  static IntervalSet make(std::initializer_list<Span> spans) {
    return make(std::span<const Span>(spans.begin(), spans.size()));
  }

  static IntervalSet full() { return IntervalSet({Span{0.0, 1.0}}); }
  static IntervalSet empty() { return IntervalSet(); }

  const std::vector<Span>& spans() const { return spans_; }
  bool is_empty() const { return spans_.empty(); }

  /// True iff the set is exactly [0,1].
  bool is_full() const {
    return spans_.size() == 1 && spans_[0].lo == 0.0 && spans_[0].hi == 1.0;
  }

  double measure() const {
    double total = 0.0;
    for (const Span& s : spans_) total += s.length();
    return total;
  }

  bool contains(double y) const {
    auto it = std::upper_bound(spans_.begin(), spans_.end(), y,
                               [](double v, const Span& s) { return v < s.lo; });
    if (it == spans_.begin()) return false;
    return y <= std::prev(it)->hi;
  }

  friend IntervalSet unite(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Span> all;
    all.reserve(a.spans_.size() + b.spans_.size());
    std::merge(a.spans_.begin(), a.spans_.end(), b.spans_.begin(), b.spans_.end(),
               std::back_inserter(all),
               [](const Span& x, const Span& y) { return x.lo < y.lo; });
    return IntervalSet(normalize(std::move(all)));
  }

  friend IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Span> out;
    auto i = a.spans_.begin();
    auto j = b.spans_.begin();
    while (i != a.spans_.end() && j != b.spans_.end()) {
      const double lo = std::max(i->lo, j->lo);
      const double hi = std::min(i->hi, j->hi);
      if (hi > lo) out.push_back({lo, hi});
      if (i->hi < j->hi) ++i; else ++j;
    }
    return IntervalSet(std::move(out));
  }

  /// Lebesgue measure of a ∩ b without materializing the intersection.
  friend double intersect_measure(const IntervalSet& a, const IntervalSet& b) {
    double total = 0.0;
    auto i = a.spans_.begin();
    auto j = b.spans_.begin();
    while (i != a.spans_.end() && j != b.spans_.end()) {
      const double lo = std::max(i->lo, j->lo);
      const double hi = std::min(i->hi, j->hi);
      if (hi > lo) total += hi - lo;
      if (i->hi < j->hi) ++i; else ++j;
    }
    return total;
  }

  /// a \ b, used when splitting the unit interval into restriction strata.
  friend IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Span> out;
    auto j = b.spans_.begin();
    for (Span cur : a.spans_) {
      while (j != b.spans_.end() && j->hi <= cur.lo) ++j;
      auto k = j;
      while (k != b.spans_.end() && k->lo < cur.hi) {
        if (k->lo > cur.lo) out.push_back({cur.lo, k->lo});
        cur.lo = std::max(cur.lo, k->hi);
        if (cur.lo >= cur.hi) break;
        ++k;
      }
      if (cur.hi > cur.lo) out.push_back(cur);
    }
    return IntervalSet(std::move(out));
  }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  explicit IntervalSet(std::vector<Span> normalized) : spans_(std::move(normalized)) {}

  // Input must be sorted by lo with positive-length spans.
  static std::vector<Span> normalize(std::vector<Span> spans) {
    std::sort(spans.begin(), spans.end(),
              [](const Span& x, const Span& y) { return x.lo < y.lo; });
    std::vector<Span> out;
    for (const Span& s : spans) {
      if (s.hi <= s.lo) continue;
      if (!out.empty() && s.lo <= out.back().hi) {
        out.back().hi = std::max(out.back().hi, s.hi);
      } else {
        out.push_back(s);
      }
    }
    return out;
  }

  std::vector<Span> spans_;
};

}  // namespace nodeflow

#endif  // NODEFLOW_INTERVAL_SET_HPP
