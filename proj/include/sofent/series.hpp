#pragma once

// Entropy series: per model size d, count (or bound) the microstate space,
// take (1/d) log of the separated count, and line the rows up against the
// classical entropy oracle.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sofent/group.hpp"
#include "sofent/microstates.hpp"
#include "sofent/sofic.hpp"
#include "sofent/subshift.hpp"

namespace sofent {

struct SoficSequenceSpec {
    enum class Kind { Cyclic, Torus, Folner };
    Kind kind = Kind::Cyclic;
    Group group;
    std::vector<std::array<std::uint64_t, 2>> sizes;  // Z: {d, 0}; Z2: {n1, n2}
    std::optional<std::uint64_t> completion_seed;     // folner completion

    std::uint64_t model_size(std::size_t i) const {
        return group.rank() == 2 ? sizes[i][0] * sizes[i][1] : sizes[i][0];
    }
};

inline SoficApproximation build_model(const SoficSequenceSpec& seq, std::size_t i,
                                      const FiniteSubset& support_base) {
    const auto& sz = seq.sizes.at(i);
    switch (seq.kind) {
        case SoficSequenceSpec::Kind::Cyclic:
            return cyclic_approximation(sz[0], support_base);
        case SoficSequenceSpec::Kind::Torus:
            return torus_approximation(sz[0], sz[1], support_base);
        case SoficSequenceSpec::Kind::Folner: {
            std::vector<std::int64_t> sides{static_cast<std::int64_t>(sz[0])};
            if (seq.group.rank() == 2) sides.push_back(static_cast<std::int64_t>(sz[1]));
            return from_folner(seq.group, folner_box(seq.group, sides), support_base,
                               seq.completion_seed);
        }
    }
    throw std::logic_error("build_model: unreachable");
}

struct EntropySeriesRow {
    std::uint64_t d = 0;
    std::string window;
    double eps = 0.0;
    double delta_equiv = 0.0;
    double delta_adm = 0.0;
    double delta_meas = 0.0;
    MetricMode metric = MetricMode::RhoInf;
    std::optional<std::uint64_t> exact_count;
    double log_count = 0.0;
    std::string strategy;
    double entropy_per_site = 0.0;
    std::optional<double> oracle;
    std::optional<double> gap;
};

struct EntropySeries {
    std::vector<EntropySeriesRow> rows;
    std::optional<double> oracle;
    // largest |entropy - oracle| over the last two rows
    double max_tail_gap = 0.0;
};

struct SeriesOptions {
    FiniteSubset window;
    double eps = 0.5;
    MetricMode metric = MetricMode::RhoInf;
    double delta_equiv = 0.0;
    double delta_adm = 0.0;
    double delta_meas = 0.0;
    std::optional<MeasureModel> measure;
    std::vector<Pattern> test_patterns;  // defaults to single-site cylinders
    std::string strategy = "auto";       // auto | closed-form | transfer | enumerate | greedy
    std::uint64_t node_budget = 0;
};

namespace detail {

inline std::string describe_window(const FiniteSubset& F) {
    std::string s = "{";
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (i) s += ";";
        s += element_name(F.elems[i]);
    }
    return s + "}";
}

// Cycle lengths of the inverse-generator orbit structure of sigma.
inline std::vector<std::uint64_t> cycle_lengths(const Perm& p) {
    std::vector<bool> seen(p.size(), false);
    std::vector<std::uint64_t> out;
    for (std::size_t a = 0; a < p.size(); ++a) {
        if (seen[a]) continue;
        std::uint64_t len = 0;
        std::size_t b = a;
        while (!seen[b]) {
            seen[b] = true;
            b = p[b];
            ++len;
        }
        out.push_back(len);
    }
    return out;
}

struct TraceResult {
    std::optional<std::uint64_t> exact;
    double log_value = 0.0;
};

// trace(T^n) with exact u64 arithmetic when it fits, scaled doubles otherwise
inline TraceResult transfer_trace(const std::vector<std::vector<std::uint8_t>>& t,
                                  std::uint64_t n) {
    const std::size_t k = t.size();
    using mat_u = std::vector<std::vector<unsigned __int128>>;
    bool overflow = false;
    auto mul_u = [&](const mat_u& a, const mat_u& b) {
        mat_u c(k, std::vector<unsigned __int128>(k, 0));
        for (std::size_t i = 0; i < k && !overflow; ++i)
            for (std::size_t l = 0; l < k; ++l) {
                if (a[i][l] == 0) continue;
                for (std::size_t j = 0; j < k; ++j) {
                    c[i][j] += a[i][l] * b[l][j];
                    if (c[i][j] > static_cast<unsigned __int128>(UINT64_MAX)) {
                        overflow = true;
                        return c;
                    }
                }
            }
        return c;
    };
    mat_u base(k, std::vector<unsigned __int128>(k, 0)), acc(k, std::vector<unsigned __int128>(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
        acc[i][i] = 1;
        for (std::size_t j = 0; j < k; ++j) base[i][j] = t[i][j];
    }
    std::uint64_t e = n;
    while (e && !overflow) {
        if (e & 1) acc = mul_u(acc, base);
        if (!overflow && e > 1) base = mul_u(base, base);
        e >>= 1;
    }
    TraceResult res;
    if (!overflow) {
        unsigned __int128 tr = 0;
        for (std::size_t i = 0; i < k; ++i) tr += acc[i][i];
        if (tr <= static_cast<unsigned __int128>(UINT64_MAX)) {
            res.exact = static_cast<std::uint64_t>(tr);
            res.log_value = tr == 0 ? -INFINITY : std::log(static_cast<double>(res.exact.value()));
            return res;
        }
    }
    // scaled double matrix power for the logarithm
    using mat_d = std::vector<std::vector<double>>;
    auto norm = [&](mat_d& m, double& logscale) {
        double mx = 0;
        for (auto& row : m)
            for (double v : row) mx = std::max(mx, v);
        if (mx > 0) {
            for (auto& row : m)
                for (double& v : row) v /= mx;
            logscale += std::log(mx);
        }
    };
    auto mul_d = [&](const mat_d& a, const mat_d& b) {
        mat_d c(k, std::vector<double>(k, 0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t l = 0; l < k; ++l)
                for (std::size_t j = 0; j < k; ++j) c[i][j] += a[i][l] * b[l][j];
        return c;
    };
    mat_d bd(k, std::vector<double>(k, 0)), ad(k, std::vector<double>(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
        ad[i][i] = 1;
        for (std::size_t j = 0; j < k; ++j) bd[i][j] = t[i][j];
    }
    double log_acc = 0, log_base = 0;
    e = n;
    while (e) {
        if (e & 1) {
            ad = mul_d(ad, bd);
            log_acc += log_base;
            norm(ad, log_acc);
        }
        bd = mul_d(bd, bd);
        log_base *= 2;
        norm(bd, log_base);
        e >>= 1;
    }
    double tr = 0;
    for (std::size_t i = 0; i < k; ++i) tr += ad[i][i];
    res.log_value = tr <= 0 ? -INFINITY : std::log(tr) + log_acc;
    return res;
}

// log of sum over symbol-count vectors (c_0..c_{k-1}) with each constrained
// band respected, of the multinomial d! / prod c_v!
struct MultinomialSum {
    double log_value = -INFINITY;
    std::optional<std::uint64_t> exact;
};

inline void logsumexp_add(double& acc, double v) {
    if (v == -INFINITY) return;
    if (acc == -INFINITY) {
        acc = v;
        return;
    }
    double hi = std::max(acc, v), lo = std::min(acc, v);
    acc = hi + std::log1p(std::exp(lo - hi));
}

// C(n, r) in 128-bit arithmetic, or nullopt past 64-bit range.
inline std::optional<unsigned __int128> binom_u128(std::uint64_t n, std::uint64_t r) {
    if (r > n) return static_cast<unsigned __int128>(0);
    r = std::min(r, n - r);
    unsigned __int128 acc = 1;
    for (std::uint64_t i = 1; i <= r; ++i) {
        if (acc > (static_cast<unsigned __int128>(UINT64_MAX) << 32)) return std::nullopt;
        acc = acc * (n - r + i) / i;
    }
    return acc;
}

inline MultinomialSum multinomial_band_sum(std::uint64_t d, int k,
                                           const std::vector<std::int64_t>& lo,
                                           const std::vector<std::int64_t>& hi) {
    MultinomialSum out;
    unsigned __int128 exact_acc = 0;
    bool exact_ok = true;
    std::function<void(int, std::int64_t, double, unsigned __int128)> rec =
        [&](int v, std::int64_t left, double log_coeff, unsigned __int128 coeff) {
            if (v == k - 1) {
                if (left < lo[v] || left > hi[v]) return;
                logsumexp_add(out.log_value, log_coeff);
                if (exact_ok) {
                    exact_acc += coeff;
                    if (exact_acc > static_cast<unsigned __int128>(UINT64_MAX)) exact_ok = false;
                }
                return;
            }
            for (std::int64_t c = std::max<std::int64_t>(0, lo[v]);
                 c <= std::min<std::int64_t>(left, hi[v]); ++c) {
                double lg = log_coeff + std::lgamma(double(left) + 1.0) -
                            std::lgamma(double(c) + 1.0) - std::lgamma(double(left - c) + 1.0);
                unsigned __int128 nc = 0;
                if (exact_ok) {
                    auto b = binom_u128(static_cast<std::uint64_t>(left),
                                        static_cast<std::uint64_t>(c));
                    if (!b) {
                        exact_ok = false;
                    } else {
                        nc = coeff * *b;
                        if (*b != 0 && nc / *b != coeff) exact_ok = false;
                    }
                }
                rec(v + 1, left - c, lg, nc);
            }
        };
    rec(0, static_cast<std::int64_t>(d), 0.0, 1);
    if (exact_ok) out.exact = static_cast<std::uint64_t>(exact_acc);
    return out;
}

}  // namespace detail

// One size of the sequence: count (or bound) the space and separated set.
inline EntropySeriesRow series_row(const SoficApproximation& sig, const Subshift& X,
                                   const SeriesOptions& opt) {
    MicrostateSpaceSpec spec =
        make_space_spec(sig, X, opt.window, opt.delta_equiv, opt.delta_adm, opt.measure,
                        opt.test_patterns, opt.measure ? opt.delta_meas : 0.0);
    EntropySeriesRow row;
    row.d = sig.d;
    row.window = detail::describe_window(opt.window);
    row.eps = opt.eps;
    row.delta_equiv = opt.delta_equiv;
    row.delta_adm = opt.delta_adm;
    row.delta_meas = opt.measure ? opt.delta_meas : 0.0;
    row.metric = opt.metric;

    const Perm& pe = sig.perm(identity(sig.group));
    bool sigma_e_trivial = true;
    for (std::uint32_t a = 0; a < sig.d; ++a)
        if (pe[a] != a) {
            sigma_e_trivial = false;
            break;
        }

    auto finish_count = [&](double log_count, std::optional<std::uint64_t> exact,
                            const std::string& strategy) {
        // under rho_inf at eps <= 1 the separated count equals the member count
        row.log_count = log_count;
        row.exact_count = exact;
        row.strategy = strategy;
        row.entropy_per_site = log_count / double(sig.d);
    };

    std::string strat = opt.strategy;
    if (strat == "auto") {
        if (opt.metric == MetricMode::RhoInf && !opt.measure && X.kind == ShiftKind::Full &&
            sigma_e_trivial && opt.delta_adm >= 0)
            strat = "closed-form";
        else if (opt.metric == MetricMode::RhoInf && !opt.measure && X.kind == ShiftKind::Sft &&
                 X.group.kind == GroupKind::Z && opt.delta_adm == 0.0 && sigma_e_trivial)
            strat = "transfer";
        else if (opt.metric == MetricMode::RhoInf && opt.measure &&
                 opt.measure->kind == MeasureKind::Bernoulli && X.kind == ShiftKind::Full &&
                 sigma_e_trivial && sig.d > 40)
            strat = "closed-form";
        else
            strat = "enumerate";
    }

    if (strat == "closed-form") {
        if (X.kind != ShiftKind::Full || !sigma_e_trivial || opt.metric != MetricMode::RhoInf)
            throw std::invalid_argument("series: closed-form path needs a full shift, trivial "
                                        "sigma_e and the rho_inf metric");
        if (!opt.measure) {
            double log_count = double(sig.d) * std::log(double(X.alphabet));
            std::optional<std::uint64_t> exact;
            if (double(sig.d) * std::log2(double(X.alphabet)) < 63.5) {
                std::uint64_t c = 1;
                for (std::uint64_t i = 0; i < sig.d; ++i) c *= std::uint64_t(X.alphabet);
                exact = c;
            }
            finish_count(log_count, exact, "closed-form");
        } else {
            if (opt.measure->kind != MeasureKind::Bernoulli)
                throw std::invalid_argument("series: closed-form measure path needs Bernoulli");
            std::vector<std::int64_t> lo(X.alphabet, 0), hi(X.alphabet, std::int64_t(sig.d));
            for (const auto& pat : spec.test_patterns) {
                if (pat.shape.size() != 1 || !(pat.shape.elems[0] == identity(sig.group)))
                    throw std::invalid_argument(
                        "series: closed-form measure path needs single-site cylinders");
                double mu = cylinder_measure(*spec.measure, pat);
                int v = pat.labels[0];
                lo[v] = std::max(lo[v], detail::min_count_above(double(sig.d) *
                                                                (mu - spec.delta_meas)));
                hi[v] = std::min(hi[v], detail::max_count_below(double(sig.d) *
                                                                (mu + spec.delta_meas)));
            }
            auto ms = detail::multinomial_band_sum(sig.d, X.alphabet, lo, hi);
            finish_count(ms.log_value, ms.exact, "closed-form");
        }
    } else if (strat == "transfer") {
        if (X.kind != ShiftKind::Sft || X.group.kind != GroupKind::Z || opt.delta_adm != 0.0 ||
            !sigma_e_trivial || opt.measure || opt.metric != MetricMode::RhoInf)
            throw std::invalid_argument(
                "series: transfer path needs a Z nearest-neighbour SFT, delta_adm=0, trivial "
                "sigma_e, no measure and the rho_inf metric");
        const Perm& inv1 = sig.perm(make_element(sig.group, -1, 0));
        auto cycles = detail::cycle_lengths(inv1);
        double log_count = 0.0;
        std::optional<std::uint64_t> exact(1ull);
        for (auto len : cycles) {
            auto tr = detail::transfer_trace(X.transitions_h, len);
            log_count += tr.log_value;
            if (exact && tr.exact) {
                unsigned __int128 prod =
                    static_cast<unsigned __int128>(*exact) * static_cast<unsigned __int128>(*tr.exact);
                if (prod > static_cast<unsigned __int128>(UINT64_MAX))
                    exact.reset();
                else
                    exact = static_cast<std::uint64_t>(prod);
            } else {
                exact.reset();
            }
        }
        finish_count(log_count, exact, "transfer");
    } else if (strat == "enumerate") {
        if (opt.metric == MetricMode::RhoInf) {
            std::uint64_t c = enumerate_microstates(spec, nullptr, opt.node_budget);
            finish_count(c == 0 ? -INFINITY : std::log(double(c)), c, "enumerate");
        } else {
            std::vector<Microstate> space;
            enumerate_microstates(spec, [&](const Microstate& m) { space.push_back(m); },
                                  opt.node_budget);
            SeparationReport sep =
                count_separated(space, sig.d, opt.eps, opt.metric, CountStrategy::Exact);
            finish_count(sep.log_count, sep.exact_count, "enumerate+exact-packing");
        }
    } else if (strat == "greedy") {
        std::vector<Microstate> space;
        enumerate_microstates(spec, [&](const Microstate& m) { space.push_back(m); },
                              opt.node_budget);
        SeparationReport sep =
            count_separated(space, sig.d, opt.eps, opt.metric, CountStrategy::Greedy);
        finish_count(sep.log_count, std::nullopt, "greedy");
    } else {
        throw std::invalid_argument("series: unknown strategy '" + strat + "'");
    }
    return row;
}

inline EntropySeries sofic_entropy_series(const SoficSequenceSpec& seq, const Subshift& X,
                                          const SeriesOptions& opt) {
    if (seq.sizes.empty()) throw std::invalid_argument("sofic_entropy_series: no model sizes");
    std::optional<double> oracle;
    if (opt.measure) {
        oracle = ks_entropy(*opt.measure);
    } else if (X.kind == ShiftKind::Full || X.group.kind == GroupKind::Z) {
        oracle = classical_topological_entropy(X);
    }
    // default cylinders live on {e}, already covered by the generator base
    FiniteSubset base = opt.window;
    base = set_union(base, default_generators(seq.group));
    for (const auto& pat : opt.test_patterns) base = set_union(base, pat.shape);
    EntropySeries series;
    series.oracle = oracle;
    for (std::size_t i = 0; i < seq.sizes.size(); ++i) {
        SoficApproximation sig = build_model(seq, i, base);
        EntropySeriesRow row = series_row(sig, X, opt);
        row.oracle = oracle;
        if (oracle) row.gap = std::abs(row.entropy_per_site - *oracle);
        series.rows.push_back(std::move(row));
    }
    std::sort(series.rows.begin(), series.rows.end(),
              [](const EntropySeriesRow& a, const EntropySeriesRow& b) { return a.d < b.d; });
    series.max_tail_gap = 0.0;
    std::size_t n = series.rows.size();
    for (std::size_t i = n >= 2 ? n - 2 : 0; i < n; ++i)
        if (series.rows[i].gap) series.max_tail_gap = std::max(series.max_tail_gap, *series.rows[i].gap);
    return series;
}

}  // namespace sofent
