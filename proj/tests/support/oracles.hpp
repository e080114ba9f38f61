#pragma once

// Independent oracles and hand-rolled generators shared by the unit and acceptance tests.
// Nothing here calls into the symbolic engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmca/dtmc.hpp"

namespace pmca::testing {

/// splitmix64; small, seedable and independent of the library's generator.
class Gen {
  public:
    explicit Gen(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    /// Uniform integer in [lo, hi].
    long range(long lo, long hi) { return lo + static_cast<long>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool coin(double p = 0.5) { return uniform() < p; }
    /// Dyadic rational with denominator 2^bits in [lo, hi].
    Rational rational(const Rational& lo, const Rational& hi, unsigned bits = 20) {
        Rational u(static_cast<long>(next() >> (64 - bits)), 1L << bits);
        u.canonicalize();
        return lo + (hi - lo) * u;
    }

  private:
    std::uint64_t state_;
};

/// Canonical a/b (gmp leaves two-argument construction unreduced).
inline Rational ratio(long a, long b) {
    Rational r(a, b);
    r.canonicalize();
    return r;
}

inline Valuation random_valuation(Gen& g, const ParamBox& box) {
    Valuation v;
    for (const auto& [name, iv] : box) v.emplace(name, g.rational(iv.lo, iv.hi));
    return v;
}

/// Substitutes a valuation into a model, giving a concrete stochastic matrix in doubles.
inline std::vector<std::vector<std::pair<std::size_t, double>>> concrete_matrix(const Dtmc& m, const Valuation& v) {
    std::vector<std::vector<std::pair<std::size_t, double>>> out(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) {
        Rational rest = 1;
        std::optional<std::size_t> complement;
        for (const auto& [dest, expr] : m.rows()[s]) {
            if (std::holds_alternative<Complement>(expr)) {
                complement = dest.index;
                continue;
            }
            Rational p;
            if (const auto* c = std::get_if<Constant>(&expr)) p = c->value;
            if (const auto* q = std::get_if<Param>(&expr)) p = v.at(q->name);
            if (const auto* mix = std::get_if<PolicyMix>(&expr)) {
                p = mix->constant;
                for (const auto& [w, name] : mix->terms) p += w * v.at(name);
            }
            rest -= p;
            if (sgn(p) != 0) out[s].emplace_back(dest.index, p.get_d());
        }
        if (complement && sgn(rest) != 0) out[s].emplace_back(*complement, rest.get_d());
    }
    return out;
}

/// Probability of eventually reaching `target` (optionally through `allowed` states), by interval
/// iteration: a lower sequence from 0 and an upper sequence from 1 after removing states that
/// cannot reach the target. Returns the midpoint once the gap closes below `tolerance`.
inline double reach_probability(const std::vector<std::vector<std::pair<std::size_t, double>>>& p,
                                const std::vector<bool>& target, const std::vector<bool>& allowed, std::size_t init,
                                double tolerance = 1e-12) {
    std::size_t n = p.size();
    std::vector<bool> can(n, false);
    for (std::size_t s = 0; s < n; ++s) can[s] = target[s];
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (can[s] || !allowed[s]) continue;
            for (const auto& [d, q] : p[s]) {
                if (q > 0 && can[d]) {
                    can[s] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<double> lo(n, 0.0);
    std::vector<double> hi(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        lo[s] = target[s] ? 1.0 : 0.0;
        hi[s] = can[s] ? 1.0 : 0.0;
    }
    for (int it = 0; it < 10000000; ++it) {
        double gap = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (target[s] || !can[s]) continue;
            double l = 0;
            double h = 0;
            for (const auto& [d, q] : p[s]) {
                l += q * lo[d];
                h += q * hi[d];
            }
            lo[s] = l;
            hi[s] = std::min(h, 1.0);
            gap = std::max(gap, hi[s] - lo[s]);
        }
        if (gap < tolerance) break;
    }
    return (lo[init] + hi[init]) / 2;
}

inline std::vector<bool> label_mask(const Dtmc& m, const std::string& label) {
    std::vector<bool> out(m.size(), false);
    for (StateId s : m.states_with_label(label)) out[s.index] = true;
    return out;
}

struct RandomChain {
    Dtmc model;
    std::string target = "goal";
};

/// Random validating parametric chain: up to `max_states` states, up to `max_params` parameters,
/// two absorbing sinks ("goal" and "fail"); each parameter sits in exactly one row next to
/// constants and a remainder entry so every row stays stochastic over the declared box.
inline RandomChain random_chain(Gen& g, std::size_t max_states = 20, std::size_t max_params = 6) {
    std::size_t n = static_cast<std::size_t>(g.range(3, static_cast<long>(max_states)));
    std::size_t transient = n - 2;
    std::size_t params = static_cast<std::size_t>(g.range(0, static_cast<long>(std::min(max_params, transient))));

    std::vector<State> states(n);
    for (std::size_t s = 0; s < n; ++s) states[s].name = "s" + std::to_string(s);
    states[n - 2].labels = {"goal"};
    states[n - 1].labels = {"fail"};
    states[n - 1].tag = {Layer::Failure, false};

    std::vector<std::size_t> param_rows;
    for (std::size_t s = 0; s < transient; ++s) param_rows.push_back(s);
    for (std::size_t i = param_rows.size(); i > 1; --i) std::swap(param_rows[i - 1], param_rows[g.range(0, static_cast<long>(i - 1))]);
    param_rows.resize(params);

    ParamBox box;
    std::vector<Row> rows(n);
    for (std::size_t s = 0; s < transient; ++s) {
        Row row;
        std::size_t fanout = static_cast<std::size_t>(g.range(1, 3));
        Rational budget(3, 5);
        auto pick = [&]() {
            for (;;) {
                StateId d{static_cast<std::uint32_t>(g.range(0, static_cast<long>(n - 1)))};
                if (d.index != s && !row.count(d)) return d;
            }
        };
        auto it = std::find(param_rows.begin(), param_rows.end(), s);
        if (it != param_rows.end()) {
            std::string name = "p" + std::to_string(it - param_rows.begin());
            Rational lo = ratio(g.range(1, 10), 100);
            Rational hi = lo + ratio(g.range(1, 20), 100);
            box.emplace(name, Interval{lo, hi});
            row.emplace(pick(), Param{name});
            budget -= hi;
            --fanout;
        }
        for (std::size_t k = 0; k < fanout && row.size() + 1 < n; ++k) {
            Rational c = ratio(g.range(1, 20), 100);
            if (c > budget) break;
            budget -= c;
            row.emplace(pick(), Constant{c});
        }
        row.emplace(StateId{static_cast<std::uint32_t>(s)}, Complement{});
        rows[s] = std::move(row);
    }
    for (std::size_t s = transient; s < n; ++s) {
        rows[s].emplace(StateId{static_cast<std::uint32_t>(s)}, Constant{1});
    }
    return {Dtmc::from_rows(std::move(states), StateId{0}, std::move(rows), std::move(box))};
}

}  // namespace pmca::testing
