#include "pmca/estimators.hpp"

#include <cmath>

#include "pmca/error.hpp"

namespace pmca {

TransitionCounts& TransitionCounts::operator+=(const TransitionCounts& other) {
    for (const auto& [dest, k] : other.to) add(dest, k);
    return *this;
}

Rational point_estimate(const Rational& pseudo_count, const Rational& expectation, std::uint64_t n,
                        std::uint64_t n_j) {
    Rational nn(static_cast<unsigned long>(n));
    Rational nj(static_cast<unsigned long>(n_j));
    Rational denom = pseudo_count + nn;
    if (sgn(denom) == 0) return expectation;
    return (pseudo_count * expectation + nj) / denom;
}

DirichletPosterior dirichlet_update(const DirichletPrior& prior, const TransitionCounts& counts) {
    if (sgn(prior.pseudo_count) <= 0) throw ValidationError("Dirichlet pseudo-count must be positive");
    Rational total = 0;
    for (const auto& [_, p] : prior.expectations) {
        if (sgn(p) < 0 || p > 1) throw ValidationError("Dirichlet expectation outside [0, 1]");
        total += p;
    }
    if (total != 1) throw ValidationError("Dirichlet expectations must sum to 1");
    for (const auto& [dest, _] : counts.to) {
        if (!prior.expectations.count(dest)) throw ValidationError("counts name a destination outside the prior row");
    }

    DirichletPosterior out;
    out.posterior.pseudo_count = prior.pseudo_count + Rational(static_cast<unsigned long>(counts.total));
    for (const auto& [dest, p] : prior.expectations) {
        Rational e = point_estimate(prior.pseudo_count, p, counts.total, counts.count(dest));
        out.estimates.emplace(dest, e);
        out.posterior.expectations.emplace(dest, e);
    }
    return out;
}

void check_prior(const ImprecisePrior& prior) {
    const auto& n = prior.pseudo_count;
    const auto& p = prior.expectation;
    if (sgn(n.lo) <= 0 || n.lo > n.hi) throw ValidationError("pseudo-count interval must satisfy 0 < lo <= hi");
    if (sgn(p.lo) < 0 || p.lo > p.hi || p.hi > 1) {
        throw ValidationError("expectation interval must satisfy 0 <= lo <= hi <= 1");
    }
}

PosteriorInterval imprecise_update(const ImprecisePrior& prior, std::uint64_t n, std::uint64_t n_j) {
    check_prior(prior);
    if (n_j > n) throw ValidationError("destination count exceeds the row total");
    const auto& [n_lo, n_hi] = prior.pseudo_count;
    const auto& [p_lo, p_hi] = prior.expectation;
    if (n == 0) return {p_lo, p_hi, false, 0};

    Rational freq(static_cast<unsigned long>(n_j), static_cast<unsigned long>(n));
    freq.canonicalize();
    PosteriorInterval out;
    out.sample_size = n;
    out.lower = point_estimate(freq >= p_lo ? n_hi : n_lo, p_lo, n, n_j);
    out.upper = point_estimate(freq <= p_hi ? n_hi : n_lo, p_hi, n, n_j);
    out.conflict = freq < p_lo || freq > p_hi;
    return out;
}

PosteriorInterval imprecise_update(const ImprecisePrior& prior, const TransitionCounts& counts, StateId j) {
    return imprecise_update(prior, counts.total, counts.count(j));
}

namespace {

void check_theta(const CbiPrior& prior) {
    if (sgn(prior.theta) <= 0 || prior.theta >= 1) throw ValidationError("CBI confidence theta must lie in (0, 1)");
}

}  // namespace

Rational cbi_bound(const CbiPrior& prior, std::uint64_t n) {
    check_theta(prior);
    Rational n1(static_cast<unsigned long>(n + 1));
    Rational ratio = Rational(static_cast<unsigned long>(n)) / n1;
    Rational tail = n == 0 ? Rational(1) : pow(ratio, n);
    return (1 - prior.theta) / (prior.theta * n1) * tail;
}

Rational cbi_bound(const CbiPrior& prior, const TransitionCounts& counts, StateId catastrophic) {
    if (counts.count(catastrophic) > 0) {
        throw CbiRegimeViolated("CBI regime violated: " + std::to_string(counts.count(catastrophic)) +
                                " catastrophic transition(s) observed; the model must be revised");
    }
    return cbi_bound(prior, counts.total);
}

double cbi_bound_numeric(const CbiPrior& prior, std::uint64_t n) {
    check_theta(prior);
    double theta = to_double(prior.theta);
    double nn = static_cast<double>(n);
    auto objective = [&](double q) {
        double tail = std::exp(nn * std::log1p(-q));
        return (1 - theta) * q * tail / (theta + (1 - theta) * tail);
    };

    // Coarse scan on a log grid towards both ends of (0, 1), then golden section around the best point.
    std::vector<double> grid;
    for (int k = 400; k >= 1; --k) grid.push_back(std::pow(10.0, -12.0 * k / 400.0));
    for (int k = 1; k <= 400; ++k) grid.push_back(1 - std::pow(10.0, -12.0 * k / 400.0));
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (objective(grid[i]) > objective(grid[best])) best = i;
    }
    double lo = best == 0 ? 0.0 : grid[best - 1];
    double hi = best + 1 == grid.size() ? 1.0 : grid[best + 1];
    const double inv_phi = (std::sqrt(5.0) - 1) / 2;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = objective(c);
    double fd = objective(d);
    while (hi - lo > 1e-12) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    return std::max({objective((lo + hi) / 2), fc, fd, objective(grid[best])});
}

Rational round_up(const Rational& value, unsigned bits) {
    if (sgn(value) <= 0) return value;
    // value = m * 2^e with 2^(bits-1) <= m < 2^bits after scaling.
    long shift = static_cast<long>(bits) - static_cast<long>(mpz_sizeinbase(value.get_num_mpz_t(), 2)) +
                 static_cast<long>(mpz_sizeinbase(value.get_den_mpz_t(), 2));
    mpz_class num = value.get_num();
    mpz_class den = value.get_den();
    if (shift >= 0) {
        num <<= static_cast<mp_bitcnt_t>(shift);
    } else {
        den <<= static_cast<mp_bitcnt_t>(-shift);
    }
    mpz_class m;
    mpz_cdiv_q(m.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    Rational out(m);
    if (shift >= 0) {
        mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(shift));
    } else {
        mpq_mul_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(-shift));
    }
    return out;
}

}  // namespace pmca
