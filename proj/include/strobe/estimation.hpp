#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "strobe/common.hpp"
#include "strobe/rng.hpp"

// Turns raw trajectory records into the reported quantities: PSN-normalized
// oscillator noises, the Gaussian conditional variance, the squeezing metrics
// and the inferred thermal occupancy, with seeded percentile-bootstrap
// confidence intervals.

namespace strobe::est {

struct RecordEnsemble {
    std::vector<double> qa;
    std::vector<double> qb;
    double psn_a = 0.0;
    double psn_b = 0.0;
    double f_d = 1.0;  // mean-spin survival J_x(tau_A) / J_x(0)

    void validate() const {
        if (qa.size() != qb.size() || qa.size() < 2)
            throw DegenerateError("RecordEnsemble: qa and qb must have equal length >= 2");
        if (!(psn_a > 0.0) || !(psn_b > 0.0))
            throw DegenerateError("RecordEnsemble: shot-noise references must be positive");
        if (!(f_d > 0.0) || f_d > 1.0)
            throw DegenerateError("RecordEnsemble: f_d must be in (0,1]");
    }
};

namespace detail {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
}

// unbiased (n-1) sample variance
inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / (a.size() - 1);
}

} // namespace detail

struct ConditionalVariance {
    double var_b;
    double cov_ab;
    double var_b_given_a;
};

// Plug-in Gaussian conditioning: Var(qb | qa) = Var(qb) - Cov^2 / Var(qa),
// the residual variance of the least-squares linear predictor.  Never
// exceeds Var(qb) by construction.
inline ConditionalVariance conditional_variance(const std::vector<double>& qa,
                                                const std::vector<double>& qb) {
    if (qa.size() != qb.size() || qa.size() < 2)
        throw DegenerateError("conditional_variance: need equal-length samples, n >= 2");
    const double var_a = detail::variance(qa);
    if (!(var_a > 0.0))
        throw DegenerateError("conditional_variance: Var(q_A) vanishes");
    ConditionalVariance r;
    r.var_b = detail::variance(qb);
    r.cov_ab = detail::covariance(qa, qb);
    r.var_b_given_a = r.var_b - r.cov_ab * r.cov_ab / var_a;
    return r;
}

// PSN-normalized oscillator noise: Var(record)/PSN - 1.  A negative value is
// statistically possible and flags a miscalibrated shot-noise reference;
// callers should surface it as a warning rather than an error.
inline double oscillator_noise(double var_record, double psn) {
    if (!(psn > 0.0)) throw DegenerateError("oscillator_noise: PSN must be positive");
    return var_record / psn - 1.0;
}

struct SqueezingReport {
    double var_xm_a = 0.0;          // unconditional A-pulse oscillator noise (PSN units)
    double var_xm_b = 0.0;          // unconditional B-pulse oscillator noise
    double var_xm_b_given_a = 0.0;  // conditional B-pulse oscillator noise
    double xi_tilde_sq = 0.0;       // conditional / (unconditional * f_d)
    double xi_w_sq = 0.0;           // Wineland: conditional / (f_d^2 * ground_ref)
    double n_bar = 0.0;             // occupancy inferred from the B-pulse ratio
    double ground_ref = 0.0;        // expected ground-state B-pulse noise (PSN units)
    double xi_tilde_db = 0.0;
    double xi_w_db = 0.0;
};

// ground_ref is the predicted PSN-normalized B-pulse oscillator noise for a
// ground-state oscillator with undecayed spin; the spin decay enters through
// f_d.  n_bar uses the symmetric-quadrature convention
// n = Var(X)+Var(P)-1 = measured/expected ratio - 1.
inline SqueezingReport squeezing_report(const RecordEnsemble& records, double ground_ref) {
    records.validate();
    if (!(ground_ref > 0.0))
        throw DegenerateError("squeezing_report: ground_ref must be positive");
    const ConditionalVariance cv = conditional_variance(records.qa, records.qb);
    SqueezingReport r;
    r.ground_ref = ground_ref;
    r.var_xm_a = oscillator_noise(detail::variance(records.qa), records.psn_a);
    r.var_xm_b = oscillator_noise(cv.var_b, records.psn_b);
    r.var_xm_b_given_a = oscillator_noise(cv.var_b_given_a, records.psn_b);
    r.xi_tilde_sq = r.var_xm_b_given_a / (r.var_xm_b * records.f_d);
    r.xi_w_sq = r.var_xm_b_given_a / (records.f_d * records.f_d * ground_ref);
    r.n_bar = r.var_xm_b / (records.f_d * ground_ref) - 1.0;
    r.xi_tilde_db = to_db(r.xi_tilde_sq);
    r.xi_w_db = to_db(r.xi_w_sq);
    return r;
}

using Metric = std::function<double(const RecordEnsemble&)>;

struct BootstrapInterval {
    double lo;
    double hi;
};

// Percentile bootstrap 68% interval of a metric over jointly resampled
// (qa, qb) pairs.  Deterministic for a given seed.
inline BootstrapInterval bootstrap_ci(const Metric& metric, const RecordEnsemble& records,
                                      int n_resamples, std::uint64_t seed) {
    records.validate();
    if (n_resamples < 100)
        throw DomainError("bootstrap_ci: need at least 100 resamples");
    const std::size_t n = records.qa.size();
    std::vector<double> stats(n_resamples);
    RecordEnsemble resampled = records;
    rng::TrajectoryRng rng(seed, 0x626f6f74ull);
    for (int r = 0; r < n_resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rng.uniform_index(n);
            resampled.qa[i] = records.qa[j];
            resampled.qb[i] = records.qb[j];
        }
        stats[r] = metric(resampled);
    }
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double q) {
        const double pos = q * (n_resamples - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= stats.size()) return stats.back();
        const double frac = pos - i;
        return stats[i] * (1.0 - frac) + stats[i + 1] * frac;
    };
    return {quantile(0.16), quantile(0.84)};
}

} // namespace strobe::est
