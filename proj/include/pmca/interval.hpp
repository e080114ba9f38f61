#pragma once

#include <map>

#include "pmca/ratfunc.hpp"

namespace pmca {

/// Closed exact interval [lo, hi].
struct Interval {
    Rational lo;
    Rational hi;

    static Interval point(const Rational& v) { return {v, v}; }

    bool contains(const Rational& v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
    bool is_point() const { return lo == hi; }
    Rational width() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-parameter closed intervals.
using ParamBox = std::map<ParamName, Interval, std::less<>>;

inline Valuation box_midpoint(const ParamBox& box) {
    Valuation v;
    for (const auto& [name, iv] : box) v.emplace(name, iv.midpoint());
    return v;
}

inline bool box_contains(const ParamBox& outer, const ParamBox& inner) {
    for (const auto& [name, iv] : inner) {
        auto it = outer.find(name);
        if (it == outer.end() || !it->second.contains(iv)) return false;
    }
    return true;
}

}  // namespace pmca
