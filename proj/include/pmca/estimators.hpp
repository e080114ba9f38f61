#pragma once

// Bayesian learners for transition parameters: the conjugate Dirichlet point estimate,
// sets-of-priors interval bounds with prior-data conflict, and the conservative bound for
// catastrophic-failure parameters under failure-free operation.

#include <cstdint>
#include <map>

#include "pmca/dtmc.hpp"
#include "pmca/interval.hpp"
#include "pmca/rational.hpp"

namespace pmca {

/// Outgoing transitions observed from one state (optionally one action of it).
struct TransitionCounts {
    std::uint64_t total = 0;
    std::map<StateId, std::uint64_t> to;

    void add(StateId destination, std::uint64_t k = 1) {
        total += k;
        to[destination] += k;
    }
    std::uint64_t count(StateId destination) const {
        auto it = to.find(destination);
        return it == to.end() ? 0 : it->second;
    }
    TransitionCounts& operator+=(const TransitionCounts& other);

    friend bool operator==(const TransitionCounts&, const TransitionCounts&) = default;
};

struct DirichletPrior {
    Rational pseudo_count;
    std::map<StateId, Rational> expectations;  // sums to 1 over the row

    friend bool operator==(const DirichletPrior&, const DirichletPrior&) = default;
};

struct DirichletPosterior {
    DirichletPrior posterior;              // pseudo-count n0 + n, expectations = estimates
    std::map<StateId, Rational> estimates;
};

/// Weighted sum of the prior expectation and the observed frequency:
/// (n0 * p0 + n_ij) / (n0 + n_i).
Rational point_estimate(const Rational& pseudo_count, const Rational& expectation, std::uint64_t n,
                        std::uint64_t n_j);

/// Conjugate update. Throws ValidationError if the expectations do not sum to 1, the
/// pseudo-count is not positive, or counts name a destination the prior lacks.
DirichletPosterior dirichlet_update(const DirichletPrior& prior, const TransitionCounts& counts);

struct ImprecisePrior {
    Interval pseudo_count;  // [n_lo, n_hi], 0 < n_lo
    Interval expectation;   // [p_lo, p_hi] within [0, 1]

    friend bool operator==(const ImprecisePrior&, const ImprecisePrior&) = default;
};

struct PosteriorInterval {
    Rational lower;
    Rational upper;
    bool conflict = false;
    std::uint64_t sample_size = 0;

    friend bool operator==(const PosteriorInterval&, const PosteriorInterval&) = default;
};

/// Throws ValidationError unless 0 < n_lo <= n_hi and 0 <= p_lo <= p_hi <= 1.
void check_prior(const ImprecisePrior& prior);

/// Posterior lower/upper bounds over the prior set. The lower bound uses the large
/// pseudo-count when the observed frequency is at or above p_lo and the small one otherwise;
/// the upper bound mirrors this at p_hi. conflict is set iff the frequency leaves [p_lo, p_hi].
/// With n = 0 the prior expectation interval is returned without conflict.
PosteriorInterval imprecise_update(const ImprecisePrior& prior, std::uint64_t n, std::uint64_t n_j);
PosteriorInterval imprecise_update(const ImprecisePrior& prior, const TransitionCounts& counts, StateId j);

struct CbiPrior {
    Rational theta;  // prior confidence that the parameter is exactly 0, in (0, 1)

    friend bool operator==(const CbiPrior&, const CbiPrior&) = default;
};

/// Closed-form upper bound on the posterior expectation after n failure-free transitions:
/// (1 - theta) / (theta (n + 1)) * (n / (n + 1))^n, with 0^0 = 1. Exact.
Rational cbi_bound(const CbiPrior& prior, std::uint64_t n);

/// As above, but first checks the counts: any observed transition into `catastrophic`
/// throws CbiRegimeViolated.
Rational cbi_bound(const CbiPrior& prior, const TransitionCounts& counts, StateId catastrophic);

/// Maximum over q in (0, 1) of the two-point-prior posterior expectation
/// (1 - theta) q (1 - q)^n / (theta + (1 - theta)(1 - q)^n), by a coarse scan and
/// golden-section refinement to 1e-12 in q.
double cbi_bound_numeric(const CbiPrior& prior, std::uint64_t n);

/// Smallest dyadic rational with `bits` significant bits that is >= value (value >= 0).
/// Keeps long-running exact bounds small without losing conservativeness.
Rational round_up(const Rational& value, unsigned bits = 64);

}  // namespace pmca
