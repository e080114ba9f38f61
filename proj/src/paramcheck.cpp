#include "pmca/paramcheck.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <limits>
#include <set>

namespace pmca {

std::string to_string(QueryForm form) {
    switch (form) {
        case QueryForm::UnboundedUntil:
            return "until";
        case QueryForm::BoundedUntil:
            return "bounded-until";
        case QueryForm::Next:
            return "next";
    }
    return "until";
}

QueryForm parse_query_form(std::string_view text) {
    if (text == "until") return QueryForm::UnboundedUntil;
    if (text == "bounded-until") return QueryForm::BoundedUntil;
    if (text == "next") return QueryForm::Next;
    throw ParseError("unknown query form '" + std::string(text) + "'");
}

std::string to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::Increasing:
            return "increasing";
        case Monotonicity::Decreasing:
            return "decreasing";
        case Monotonicity::Constant:
            return "constant";
        case Monotonicity::Indeterminate:
            return "indeterminate";
    }
    return "indeterminate";
}

Monotonicity parse_monotonicity(std::string_view text) {
    if (text == "increasing") return Monotonicity::Increasing;
    if (text == "decreasing") return Monotonicity::Decreasing;
    if (text == "constant") return Monotonicity::Constant;
    if (text == "indeterminate") return Monotonicity::Indeterminate;
    throw ParseError("unknown monotonicity '" + std::string(text) + "'");
}

namespace {

std::atomic<std::uint64_t> eliminations{0};

constexpr std::uint32_t kRhs = std::numeric_limits<std::uint32_t>::max();

std::vector<bool> label_set(const Dtmc& m, std::string_view label) {
    std::vector<bool> out(m.size(), false);
    for (StateId s : m.states_with_label(label)) out[s.index] = true;
    return out;
}

/// States outside the target set, inside the constraint set, that reach a target through
/// constraint states along transitions whose functions are not identically zero.
std::vector<bool> maybe_states(const ParametricMatrix& matrix, const std::vector<bool>& target,
                               const std::vector<bool>& allowed) {
    std::size_t n = matrix.size();
    std::vector<std::vector<std::uint32_t>> predecessors(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& [dest, f] : matrix[s]) {
            if (!f.is_zero()) predecessors[dest.index].push_back(static_cast<std::uint32_t>(s));
        }
    }
    std::vector<bool> reaches(n, false);
    std::deque<std::uint32_t> queue;
    for (std::uint32_t s = 0; s < n; ++s) {
        if (target[s]) queue.push_back(s);
    }
    while (!queue.empty()) {
        std::uint32_t t = queue.front();
        queue.pop_front();
        for (std::uint32_t p : predecessors[t]) {
            if (target[p] || !allowed[p] || reaches[p]) continue;
            reaches[p] = true;
            queue.push_back(p);
        }
    }
    return reaches;
}

using SparseRow = std::map<std::uint32_t, Polynomial>;

/// Multiplies a row of rational functions through by its denominators so that every
/// coefficient of the linear system is a polynomial.
SparseRow polynomial_row(const std::map<std::uint32_t, RationalFunction>& row) {
    Polynomial scale(1);
    std::vector<Polynomial> seen;
    for (const auto& [_, f] : row) {
        if (f.denominator().is_constant()) continue;
        if (std::find(seen.begin(), seen.end(), f.denominator()) != seen.end()) continue;
        seen.push_back(f.denominator());
        scale = scale * f.denominator();
    }
    SparseRow out;
    for (const auto& [col, f] : row) {
        Polynomial coefficient = f.numerator() * scale;
        if (auto q = coefficient.divide_exact(f.denominator())) coefficient = std::move(*q);
        if (!coefficient.is_zero()) out.emplace(col, std::move(coefficient));
    }
    return out;
}

}  // namespace

std::uint64_t elimination_count() { return eliminations.load(); }

ClosedForm eliminate(const Dtmc& m, const ReachQuery& query) {
    eliminations.fetch_add(1);
    if (query.form == QueryForm::Next) return check_next(m, query);
    if (query.form == QueryForm::BoundedUntil) {
        throw ValidationError("bounded until has no closed form; use check_bounded");
    }
    ClosedForm cf{query, RationalFunction(0), {}, {}};
    ParametricMatrix matrix = to_parametric_matrix(m);
    if (query.initial.index >= m.size()) throw ValidationError("query initial state does not exist");

    std::vector<bool> target = label_set(m, query.target_label);
    if (std::none_of(target.begin(), target.end(), [](bool b) { return b; })) {
        cf.warnings.push_back("target label '" + query.target_label + "' matches no state");
        return cf;
    }
    std::vector<bool> allowed(m.size(), true);
    if (query.constraint_label) allowed = label_set(m, *query.constraint_label);

    std::uint32_t init = query.initial.index;
    if (target[init]) {
        cf.function = RationalFunction(1);
        return cf;
    }
    std::vector<bool> maybe = maybe_states(matrix, target, allowed);
    if (!maybe[init]) return cf;

    // Linear system (I - Q) x = b over the maybe states, with polynomial coefficients.
    std::map<std::uint32_t, SparseRow> rows;
    for (std::uint32_t s = 0; s < m.size(); ++s) {
        if (!maybe[s]) continue;
        std::map<std::uint32_t, RationalFunction> row;
        row[s] = RationalFunction(1);
        for (const auto& [dest, f] : matrix[s]) {
            std::uint32_t d = dest.index;
            if (target[d]) {
                row[kRhs] = row[kRhs] + f;
            } else if (maybe[d]) {
                row[d] = row[d] - f;
            }
        }
        rows.emplace(s, polynomial_row(row));
    }

    // Fraction-free (Bareiss) state elimination. Eliminating state k rewrites every remaining
    // row i as (A[k][k] * row_i - A[i][k] * row_k) / previous_pivot, which is state elimination
    // with the 1/(1 - loop) rescaling carried as a common factor; the division is exact.
    Polynomial previous_pivot(1);
    auto incident = [&](std::uint32_t k) {
        std::size_t count = 0;
        for (const auto& [col, _] : rows.at(k)) count += (col != k && col != kRhs);
        for (const auto& [i, row] : rows) count += (i != k && row.count(k));
        return count;
    };
    while (rows.size() > 1) {
        std::uint32_t pivot_state = kRhs;
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (const auto& [s, _] : rows) {
            if (s == init) continue;
            std::size_t d = incident(s);
            if (d < best) {
                best = d;
                pivot_state = s;
            }
        }
        SparseRow pivot_row = std::move(rows.at(pivot_state));
        rows.erase(pivot_state);
        auto pivot_it = pivot_row.find(pivot_state);
        if (pivot_it == pivot_row.end() || pivot_it->second.is_zero()) {
            throw ValidationError("state '" + m.states()[pivot_state].name + "' cannot leave itself symbolically");
        }
        Polynomial pivot = pivot_it->second;
        pivot_row.erase(pivot_it);

        for (auto& [i, row] : rows) {
            Polynomial factor;
            if (auto it = row.find(pivot_state); it != row.end()) {
                factor = std::move(it->second);
                row.erase(it);
            }
            SparseRow updated;
            std::set<std::uint32_t> columns;
            for (const auto& [col, _] : row) columns.insert(col);
            for (const auto& [col, _] : pivot_row) columns.insert(col);
            for (std::uint32_t col : columns) {
                Polynomial value;
                if (auto it = row.find(col); it != row.end()) value = pivot * it->second;
                if (!factor.is_zero()) {
                    if (auto it = pivot_row.find(col); it != pivot_row.end()) value -= factor * it->second;
                }
                if (value.is_zero()) continue;
                auto q = value.divide_exact(previous_pivot);
                if (!q) throw std::logic_error("fraction-free elimination lost exact divisibility");
                updated.emplace(col, std::move(*q));
            }
            row = std::move(updated);
        }
        previous_pivot = std::move(pivot);
    }

    const SparseRow& last = rows.at(init);
    auto rhs = last.find(kRhs);
    auto diag = last.find(init);
    if (diag == last.end() || diag->second.is_zero()) {
        throw ValidationError("initial state cannot leave itself symbolically");
    }
    if (rhs != last.end()) cf.function = RationalFunction(rhs->second, diag->second).simplified();
    return cf;
}

ClosedForm check_next(const Dtmc& m, const ReachQuery& query) {
    ClosedForm cf{query, RationalFunction(0), {}, {}};
    ParametricMatrix matrix = to_parametric_matrix(m);
    if (query.initial.index >= m.size()) throw ValidationError("query initial state does not exist");
    std::vector<bool> target = label_set(m, query.target_label);
    if (std::none_of(target.begin(), target.end(), [](bool b) { return b; })) {
        cf.warnings.push_back("target label '" + query.target_label + "' matches no state");
        return cf;
    }
    RationalFunction sum(0);
    for (const auto& [dest, f] : matrix[query.initial.index]) {
        if (target[dest.index]) sum = sum + f;
    }
    cf.function = sum.simplified();
    return cf;
}

ClosedForm closed_form(const Dtmc& m, const ReachQuery& query) {
    return query.form == QueryForm::Next ? check_next(m, query) : eliminate(m, query);
}

Rational check_bounded(const Dtmc& m, const ReachQuery& query, const Valuation& valuation) {
    for (const auto& [name, iv] : m.parameters()) {
        auto it = valuation.find(name);
        if (it == valuation.end()) throw EvaluationError("parameter '" + name + "' has no value");
        if (!iv.contains(it->second)) throw EvaluationError("valuation of '" + name + "' lies outside its box");
    }
    ParametricMatrix matrix = to_parametric_matrix(m);
    std::size_t n = m.size();
    std::vector<std::vector<std::pair<std::uint32_t, Rational>>> concrete(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& [dest, f] : matrix[s]) {
            Rational p = f.evaluate(valuation);
            if (!is_zero(p)) concrete[s].emplace_back(dest.index, std::move(p));
        }
    }
    std::vector<bool> target = label_set(m, query.target_label);
    std::vector<bool> allowed(n, true);
    if (query.constraint_label) allowed = label_set(m, *query.constraint_label);

    std::vector<Rational> x(n, Rational(0));
    for (std::size_t s = 0; s < n; ++s) {
        if (target[s]) x[s] = 1;
    }
    std::vector<Rational> next(n);
    for (unsigned step = 0; step < query.bound; ++step) {
        for (std::size_t s = 0; s < n; ++s) {
            if (target[s]) {
                next[s] = 1;
            } else if (!allowed[s]) {
                next[s] = 0;
            } else {
                Rational acc = 0;
                for (const auto& [d, p] : concrete[s]) {
                    if (!is_zero(x[d])) acc += p * x[d];
                }
                next[s] = std::move(acc);
            }
        }
        std::swap(x, next);
    }
    return x.at(query.initial.index);
}

}  // namespace pmca
