// Range enclosures, sign proofs, monotonicity analysis and box bounds for closed forms.

#include <algorithm>
#include <optional>

#include "pmca/paramcheck.hpp"

namespace pmca {

namespace {

Interval mul(const Interval& a, const Interval& b) {
    Rational p1 = a.lo * b.lo;
    Rational p2 = a.lo * b.hi;
    Rational p3 = a.hi * b.lo;
    Rational p4 = a.hi * b.hi;
    return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

Interval power(const Interval& a, unsigned e) {
    if (e == 0) return Interval::point(1);
    if (e == 1) return a;
    Rational lo = pow(a.lo, e);
    Rational hi = pow(a.hi, e);
    if (e % 2 == 0 && sgn(a.lo) < 0 && sgn(a.hi) > 0) return {Rational(0), std::max(lo, hi)};
    if (lo > hi) std::swap(lo, hi);
    return {lo, hi};
}

const Interval& lookup(const ParamBox& box, const ParamName& name) {
    auto it = box.find(name);
    if (it == box.end()) throw EvaluationError("parameter '" + name + "' has no interval in the box");
    return it->second;
}

struct SignSet {
    bool pos = false;
    bool neg = false;
    bool zero = false;

    static SignSet of(const Interval& enc) {
        SignSet s;
        s.pos = sgn(enc.hi) > 0;
        s.neg = sgn(enc.lo) < 0;
        s.zero = enc.contains(Rational(0));
        return s;
    }
    SignSet& operator|=(const SignSet& o) {
        pos |= o.pos;
        neg |= o.neg;
        zero |= o.zero;
        return *this;
    }
    Sign sign() const {
        if (pos && neg) return Sign::Mixed;
        if (pos) return zero ? Sign::NonNegative : Sign::Positive;
        if (neg) return zero ? Sign::NonPositive : Sign::Negative;
        return Sign::Zero;
    }
};

/// Parameters whose degree is at least 2 and whose interval is not a point: the only
/// directions in which the enclosure can overestimate.
std::vector<ParamName> nonlinear_parameters(const Polynomial& p, const ParamBox& box) {
    std::vector<ParamName> out;
    for (const auto& name : p.parameters()) {
        if (p.degree_in(name) >= 2 && !lookup(box, name).is_point()) out.push_back(name);
    }
    return out;
}

std::optional<SignSet> sign_rec(const Polynomial& p, const ParamBox& box, int depth) {
    SignSet s = SignSet::of(range_enclosure(p, box));
    if (!(s.pos && s.neg)) return s;
    auto nonlinear = nonlinear_parameters(p, box);
    if (nonlinear.empty() || depth <= 0) return std::nullopt;
    ParamName widest = nonlinear.front();
    for (const auto& name : nonlinear) {
        if (lookup(box, name).width() > lookup(box, widest).width()) widest = name;
    }
    const Interval& iv = lookup(box, widest);
    Rational mid = iv.midpoint();
    ParamBox left = box;
    ParamBox right = box;
    left[widest] = {iv.lo, mid};
    right[widest] = {mid, iv.hi};
    auto a = sign_rec(p, left, depth - 1);
    if (!a || (a->pos && a->neg)) return std::nullopt;
    auto b = sign_rec(p, right, depth - 1);
    if (!b) return std::nullopt;
    *a |= *b;
    if (a->pos && a->neg) return std::nullopt;
    return a;
}

Monotonicity from_sign(Sign s) {
    switch (s) {
        case Sign::Positive:
        case Sign::NonNegative:
            return Monotonicity::Increasing;
        case Sign::Negative:
        case Sign::NonPositive:
            return Monotonicity::Decreasing;
        case Sign::Zero:
            return Monotonicity::Constant;
        case Sign::Mixed:
            return Monotonicity::Indeterminate;
    }
    return Monotonicity::Indeterminate;
}

/// Numerator of the quotient-rule derivative, N'D - ND'; same sign as the derivative wherever D != 0.
Polynomial derivative_sign_polynomial(const RationalFunction& f, const ParamName& name) {
    return f.numerator().derivative(name) * f.denominator() - f.numerator() * f.denominator().derivative(name);
}

/// Denominator enclosure, required to exclude zero.
Interval denominator_enclosure(const RationalFunction& f, const ParamBox& box) {
    const Polynomial& d = f.denominator();
    if (d.is_constant()) return Interval::point(*d.constant_value());
    Interval enc = range_enclosure(d, box);
    if (sgn(enc.lo) > 0 || sgn(enc.hi) < 0) return enc;
    Sign s = polynomial_sign(d, box);
    if (s == Sign::Positive || s == Sign::Negative) return enc;
    throw SingularAtBoundary("singular at boundary: denominator of '" + f.to_string() +
                             "' may vanish inside the box; restrict the box to its interior");
}

Valuation corner(const ParamBox& box, const std::map<ParamName, Monotonicity>& mono, bool upper) {
    Valuation v;
    for (const auto& [name, iv] : box) {
        auto it = mono.find(name);
        Monotonicity m = it == mono.end() ? Monotonicity::Constant : it->second;
        bool take_hi = (m == Monotonicity::Increasing) == upper;
        if (m == Monotonicity::Constant) take_hi = false;
        v.emplace(name, take_hi ? iv.hi : iv.lo);
    }
    return v;
}

ParamBox restrict_to(const ParamBox& box, const std::set<ParamName>& names) {
    ParamBox out;
    for (const auto& name : names) out.emplace(name, lookup(box, name));
    return out;
}

/// Adaptive bisection over the parameters whose derivative sign is not provable.
class FallbackBounder {
  public:
    FallbackBounder(const RationalFunction& f, std::vector<ParamName> params) : f_(f), params_(std::move(params)) {
        for (const auto& p : params_) derivative_numerators_.emplace(p, derivative_sign_polynomial(f_, p));
    }

    BoundResult run(const ParamBox& box) {
        std::map<ParamName, int> depth;
        visit(box, depth);
        BoundResult r;
        r.bounds = {*lo_, *hi_};
        r.exact = !conservative_;
        r.conservative = conservative_;
        return r;
    }

  private:
    static constexpr int kMaxDepth = 8;

    void update(const Rational& lo, const Rational& hi) {
        if (!lo_ || lo < *lo_) lo_ = lo;
        if (!hi_ || hi > *hi_) hi_ = hi;
    }

    void visit(const ParamBox& cell, std::map<ParamName, int>& depth) {
        Interval den = denominator_enclosure(f_, cell);
        if (lo_ && hi_) {
            // Skip cells whose crude enclosure cannot move the current bounds.
            Interval num = range_enclosure(f_.numerator(), cell);
            Interval inv = sgn(den.lo) > 0 ? Interval{1 / den.hi, 1 / den.lo} : Interval{1 / den.hi, 1 / den.lo};
            if (inv.lo > inv.hi) std::swap(inv.lo, inv.hi);
            Interval crude = mul(num, inv);
            if (crude.lo >= *lo_ && crude.hi <= *hi_) return;
        }

        std::map<ParamName, Monotonicity> mono;
        std::vector<ParamName> open;
        for (const auto& p : params_) {
            Monotonicity m = from_sign(polynomial_sign(derivative_numerators_.at(p), cell, 4));
            mono[p] = m;
            if (m == Monotonicity::Indeterminate) open.push_back(p);
        }
        for (const auto& [name, m] : fixed_) mono[name] = m;

        if (open.empty()) {
            update(f_.evaluate(corner(cell, mono, false)), f_.evaluate(corner(cell, mono, true)));
            return;
        }

        std::optional<ParamName> split;
        for (const auto& p : open) {
            if (depth[p] >= kMaxDepth) continue;
            if (!split || cell.at(p).width() > cell.at(*split).width()) split = p;
        }
        if (split) {
            const Interval& iv = cell.at(*split);
            Rational mid = iv.midpoint();
            ParamBox left = cell;
            ParamBox right = cell;
            left[*split] = {iv.lo, mid};
            right[*split] = {mid, iv.hi};
            ++depth[*split];
            visit(left, depth);
            visit(right, depth);
            --depth[*split];
            return;
        }

        // Leaf: corners over the open parameters, widened by the derivative bound times half-width.
        Rational den_sq_min = std::min(den.lo * den.lo, den.hi * den.hi);
        Rational slack = 0;
        for (const auto& p : open) {
            Interval g = range_enclosure(derivative_numerators_.at(p), cell);
            Rational bound = std::max(abs(g.lo), abs(g.hi)) / den_sq_min;
            slack += bound * cell.at(p).width() / 2;
        }
        conservative_ = true;
        std::optional<Rational> lo;
        std::optional<Rational> hi;
        for (std::size_t mask = 0; mask < (std::size_t{1} << open.size()); ++mask) {
            for (bool upper : {false, true}) {
                Valuation v = corner(cell, mono, upper);
                for (std::size_t i = 0; i < open.size(); ++i) {
                    const Interval& iv = cell.at(open[i]);
                    v[open[i]] = (mask >> i) & 1 ? iv.hi : iv.lo;
                }
                Rational value = f_.evaluate(v);
                if (!upper && (!lo || value < *lo)) lo = value;
                if (upper && (!hi || value > *hi)) hi = value;
            }
        }
        update(*lo - slack, *hi + slack);
    }

  public:
    std::map<ParamName, Monotonicity> fixed_;

  private:
    const RationalFunction& f_;
    std::vector<ParamName> params_;
    std::map<ParamName, Polynomial> derivative_numerators_;
    std::optional<Rational> lo_;
    std::optional<Rational> hi_;
    bool conservative_ = false;
};

}  // namespace

Interval range_enclosure(const Polynomial& p, const ParamBox& box) {
    if (p.is_zero()) return Interval::point(0);
    std::vector<ParamName> linear;
    std::vector<ParamName> other;
    for (const auto& name : p.parameters()) {
        const Interval& iv = lookup(box, name);
        if (!iv.is_point() && p.degree_in(name) <= 1 && linear.size() < 12) {
            linear.push_back(name);
        } else {
            other.push_back(name);
        }
    }
    std::optional<Interval> hull;
    Valuation at;
    for (const auto& name : other) {
        const Interval& iv = lookup(box, name);
        if (iv.is_point()) at[name] = iv.lo;
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << linear.size()); ++mask) {
        for (std::size_t i = 0; i < linear.size(); ++i) {
            const Interval& iv = lookup(box, linear[i]);
            at[linear[i]] = (mask >> i) & 1 ? iv.hi : iv.lo;
        }
        Interval total = Interval::point(0);
        for (const auto& [m, c] : p.terms()) {
            Rational scalar = c;
            Interval iv = Interval::point(1);
            bool ranged = false;
            for (const auto& [name, e] : m.factors()) {
                auto it = at.find(name);
                if (it != at.end()) {
                    scalar *= e == 1 ? it->second : pow(it->second, e);
                } else {
                    iv = mul(iv, power(lookup(box, name), e));
                    ranged = true;
                }
            }
            if (ranged) {
                Interval t = mul(iv, Interval::point(scalar));
                total.lo += t.lo;
                total.hi += t.hi;
            } else {
                total.lo += scalar;
                total.hi += scalar;
            }
        }
        if (!hull) {
            hull = total;
        } else {
            hull->lo = std::min(hull->lo, total.lo);
            hull->hi = std::max(hull->hi, total.hi);
        }
    }
    return *hull;
}

Sign polynomial_sign(const Polynomial& p, const ParamBox& box, int max_depth) {
    if (p.is_zero()) return Sign::Zero;
    auto s = sign_rec(p, box, max_depth);
    return s ? s->sign() : Sign::Mixed;
}

ClosedForm analyze_monotonicity(ClosedForm cf, const ParamBox& box) {
    cf.monotonicity.clear();
    auto params = cf.function.parameters();
    ParamBox local = restrict_to(box, params);
    if (!params.empty()) denominator_enclosure(cf.function, local);
    for (const auto& name : params) {
        Polynomial g = derivative_sign_polynomial(cf.function, name);
        cf.monotonicity[name] = from_sign(polynomial_sign(g, local));
    }
    for (const auto& [name, _] : box) {
        if (!params.count(name)) cf.monotonicity[name] = Monotonicity::Constant;
    }
    return cf;
}

BoundResult bound_evaluate(const ClosedForm& cf, const ParamBox& box, const ParamBox& analyzed_box) {
    auto params = cf.function.parameters();
    ParamBox local = restrict_to(box, params);
    if (auto c = cf.function.constant_value()) return {Interval::point(*c), true, false};

    // Analysis over a covering box has already shown the denominator nonzero there.
    std::map<ParamName, Monotonicity> mono;
    bool covered = box_contains(analyzed_box, local);
    for (const auto& name : params) {
        auto it = cf.monotonicity.find(name);
        if (!covered || it == cf.monotonicity.end()) {
            mono = analyze_monotonicity(cf, local).monotonicity;
            break;
        }
        mono[name] = it->second;
    }

    std::vector<ParamName> open;
    for (const auto& name : params) {
        if (mono.at(name) == Monotonicity::Indeterminate && !local.at(name).is_point()) open.push_back(name);
    }
    if (open.empty()) {
        return {{cf.function.evaluate(corner(local, mono, false)), cf.function.evaluate(corner(local, mono, true))},
                true,
                false};
    }
    FallbackBounder bounder(cf.function, open);
    for (const auto& [name, m] : mono) {
        if (std::find(open.begin(), open.end(), name) == open.end()) bounder.fixed_[name] = m;
    }
    return bounder.run(local);
}

BoundResult bound_evaluate(const ClosedForm& cf, const ParamBox& box) { return bound_evaluate(cf, box, box); }

}  // namespace pmca
