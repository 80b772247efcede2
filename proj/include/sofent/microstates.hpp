#pragma once

// Microstate spaces over a sofic model: labelings omega of {1..d} standing for
// approximately equivariant maps into a subshift, with membership tests,
// exact branch-and-bound enumeration, separated-set counting, and entropy
// series against the classical oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sofent/bitset.hpp"
#include "sofent/group.hpp"
#include "sofent/sofic.hpp"
#include "sofent/subshift.hpp"

namespace sofent {

using Microstate = std::vector<symbol_t>;

struct BudgetExceeded : std::runtime_error {
    std::uint64_t nodes;
    explicit BudgetExceeded(std::uint64_t n)
        : std::runtime_error("enumeration node budget exceeded after " + std::to_string(n) +
                             " nodes; use the greedy strategy or raise SOFIC_NODE_BUDGET"),
          nodes(n) {}
};

inline std::uint64_t default_node_budget() {
    if (const char* env = std::getenv("SOFIC_NODE_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return 100000000ull;  // 1e8
}

struct MicrostateSpaceSpec {
    const SoficApproximation* sigma = nullptr;
    Subshift shift;
    FiniteSubset window;  // F, the equivariance window
    double delta_equiv = 0.0;
    double delta_adm = 0.0;
    std::optional<MeasureModel> measure;
    std::vector<Pattern> test_patterns;  // cylinder indicators (the set L)
    double delta_meas = 0.0;
};

inline std::vector<Pattern> single_site_cylinders(const Group& g, int alphabet) {
    std::vector<Pattern> out;
    FiniteSubset shape(g, {identity(g)});
    for (int v = 0; v < alphabet; ++v)
        out.push_back(Pattern(shape, {static_cast<symbol_t>(v)}));
    return out;
}

inline MicrostateSpaceSpec make_space_spec(const SoficApproximation& sigma, Subshift shift,
                                           FiniteSubset window, double delta_equiv,
                                           double delta_adm,
                                           std::optional<MeasureModel> measure = std::nullopt,
                                           std::vector<Pattern> test_patterns = {},
                                           double delta_meas = 0.0) {
    if (window.empty()) throw std::invalid_argument("microstate spec: empty window");
    if (window.group != sigma.group || shift.group != sigma.group)
        throw std::invalid_argument("microstate spec: mismatched groups");
    if (delta_equiv < 0 || delta_adm < 0)
        throw std::invalid_argument("microstate spec: negative tolerance");
    if (measure) {
        if (delta_meas <= 0) throw std::invalid_argument("microstate spec: delta_meas must be positive");
        if (measure->alphabet() != shift.alphabet)
            throw std::invalid_argument("microstate spec: measure alphabet mismatch");
        if (measure->kind == MeasureKind::Markov && shift.kind == ShiftKind::Sft) {
            for (int i = 0; i < shift.alphabet; ++i)
                for (int j = 0; j < shift.alphabet; ++j)
                    if (measure->P[i][j] > 0 && !shift.allowed_h(symbol_t(i), symbol_t(j)))
                        throw std::invalid_argument(
                            "microstate spec: measure charges a transition forbidden by the subshift");
        }
        if (test_patterns.empty())
            test_patterns = single_site_cylinders(sigma.group, shift.alphabet);
    }
    MicrostateSpaceSpec spec;
    spec.sigma = &sigma;
    spec.shift = std::move(shift);
    spec.window = std::move(window);
    spec.delta_equiv = delta_equiv;
    spec.delta_adm = delta_adm;
    spec.measure = std::move(measure);
    spec.test_patterns = std::move(test_patterns);
    spec.delta_meas = delta_meas;
    return spec;
}

// The window of the point represented by omega at a: labels[s] = omega(sigma_{s^-1}(a)).
inline Pattern induced_pattern(const Microstate& omega, const SoficApproximation& sig,
                               std::uint32_t a, const FiniteSubset& F) {
    std::vector<symbol_t> labels;
    labels.reserve(F.size());
    for (const auto& s : F.elems) labels.push_back(omega[sig.perm(invert(s))[a]]);
    return Pattern(F, std::move(labels));
}

namespace detail {

// max integer strictly below x (x > 0), with a small tolerance so exact
// rational boundaries land on the mathematically intended side
inline std::int64_t max_count_below(double x) {
    return static_cast<std::int64_t>(std::ceil(x - 1e-9)) - 1;
}
// min integer strictly above x
inline std::int64_t min_count_above(double x) {
    return static_cast<std::int64_t>(std::floor(x + 1e-9)) + 1;
}

// One admissibility window per point: the pair constraints toward both axes.
struct AdmCheck {
    std::uint32_t a = 0;
    std::uint32_t h = 0;
    std::uint32_t v = 0;
    bool has_v = false;
};

struct CylinderInstance {
    std::uint32_t pattern_id = 0;
    std::vector<std::uint32_t> sites;  // aligned with the pattern's labels
};

struct CompiledSpec {
    std::uint32_t d = 0;
    int k = 2;
    const Subshift* shift = nullptr;
    std::int64_t adm_budget = 0;
    std::int64_t equiv_budget = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> equiv_pairs;  // (b, sigma_e(b)), b != image
    std::vector<AdmCheck> adm_checks;
    std::vector<CylinderInstance> cylinder_instances;
    std::vector<std::vector<symbol_t>> pattern_labels;
    std::vector<std::int64_t> lo, hi;  // per pattern, allowed match-count band
    // per position: which checks become fully labelled there
    std::vector<std::vector<std::uint32_t>> adm_at, eq_at, cyl_at;
};

inline CompiledSpec compile_spec(const MicrostateSpaceSpec& spec) {
    const SoficApproximation& sig = *spec.sigma;
    CompiledSpec cs;
    cs.d = static_cast<std::uint32_t>(sig.d);
    cs.k = spec.shift.alphabet;
    cs.shift = &spec.shift;
    cs.adm_budget = static_cast<std::int64_t>(std::floor(spec.delta_adm * double(cs.d) + 1e-9));
    cs.equiv_budget = spec.delta_equiv == 0.0
                          ? 0
                          : max_count_below(spec.delta_equiv * spec.delta_equiv * double(cs.d));

    const Perm& pe = sig.perm(identity(sig.group));
    for (std::uint32_t b = 0; b < cs.d; ++b)
        if (pe[b] != b) cs.equiv_pairs.emplace_back(b, pe[b]);

    if (spec.shift.kind == ShiftKind::Sft) {
        const Perm& ih = sig.perm(make_element(sig.group, -1, 0));
        const Perm* iv =
            sig.group.rank() == 2 ? &sig.perm(make_element(sig.group, 0, -1)) : nullptr;
        for (std::uint32_t a = 0; a < cs.d; ++a)
            cs.adm_checks.push_back({a, ih[a], iv ? (*iv)[a] : 0, iv != nullptr});
    }

    for (std::uint32_t pid = 0; spec.measure && pid < spec.test_patterns.size(); ++pid) {
        const Pattern& pat = spec.test_patterns[pid];
        cs.pattern_labels.push_back(pat.labels);
        double mu = cylinder_measure(*spec.measure, pat);
        cs.lo.push_back(std::max<std::int64_t>(
            0, min_count_above(double(cs.d) * (mu - spec.delta_meas))));
        cs.hi.push_back(std::min<std::int64_t>(
            cs.d, max_count_below(double(cs.d) * (mu + spec.delta_meas))));
        std::vector<const Perm*> invs;
        for (const auto& s : pat.shape.elems) invs.push_back(&sig.perm(invert(s)));
        for (std::uint32_t a = 0; a < cs.d; ++a) {
            CylinderInstance inst;
            inst.pattern_id = pid;
            inst.sites.reserve(invs.size());
            for (const auto* p : invs) inst.sites.push_back((*p)[a]);
            cs.cylinder_instances.push_back(std::move(inst));
        }
    }

    cs.adm_at.assign(cs.d, {});
    cs.eq_at.assign(cs.d, {});
    cs.cyl_at.assign(cs.d, {});
    for (std::uint32_t i = 0; i < cs.adm_checks.size(); ++i) {
        const auto& chk = cs.adm_checks[i];
        std::uint32_t last = std::max(chk.a, chk.h);
        if (chk.has_v) last = std::max(last, chk.v);
        cs.adm_at[last].push_back(i);
    }
    for (std::uint32_t i = 0; i < cs.equiv_pairs.size(); ++i)
        cs.eq_at[std::max(cs.equiv_pairs[i].first, cs.equiv_pairs[i].second)].push_back(i);
    for (std::uint32_t i = 0; i < cs.cylinder_instances.size(); ++i) {
        std::uint32_t last = 0;
        for (auto s : cs.cylinder_instances[i].sites) last = std::max(last, s);
        cs.cyl_at[last].push_back(i);
    }
    return cs;
}

}  // namespace detail

struct MembershipReport {
    bool is_member = false;
    std::vector<double> equiv_defects;       // aligned with the window elements
    double admissibility_defect = 0.0;
    std::vector<double> empirical;           // aligned with test_patterns
    std::vector<double> deviations;          // |empirical - mu(pattern)|
    bool measure_ok = true;
};

// Equivariance and admissibility part of membership.
inline MembershipReport map_membership(const Microstate& omega, const MicrostateSpaceSpec& spec) {
    const SoficApproximation& sig = *spec.sigma;
    if (omega.size() != sig.d) throw std::invalid_argument("map_membership: labeling size mismatch");
    for (auto v : omega)
        if (v >= spec.shift.alphabet)
            throw std::invalid_argument("map_membership: symbol out of alphabet");
    MembershipReport rep;
    const double d = double(sig.d);
    const Perm& pe = sig.perm(identity(sig.group));
    bool equiv_ok = true;
    for (const auto& s : spec.window.elems) {
        const Perm& ps = sig.perm(s);
        std::uint64_t bad = 0;
        for (std::uint32_t a = 0; a < sig.d; ++a) {
            std::uint32_t b = ps[a];  // the two routes to the label over sigma_s(a)
            if (omega[pe[b]] != omega[b]) ++bad;
        }
        double defect = double(bad) / d;
        rep.equiv_defects.push_back(defect);
        equiv_ok = equiv_ok &&
                   (defect == 0.0 || defect < spec.delta_equiv * spec.delta_equiv);
    }
    std::uint64_t bad_windows = 0;
    if (spec.shift.kind == ShiftKind::Sft) {
        const Perm& ih = sig.perm(make_element(sig.group, -1, 0));
        const Perm* iv = sig.group.rank() == 2 ? &sig.perm(make_element(sig.group, 0, -1)) : nullptr;
        for (std::uint32_t a = 0; a < sig.d; ++a) {
            bool ok = spec.shift.allowed_h(omega[a], omega[ih[a]]);
            if (ok && iv) ok = spec.shift.allowed_v(omega[a], omega[(*iv)[a]]);
            if (!ok) ++bad_windows;
        }
    }
    rep.admissibility_defect = double(bad_windows) / d;
    rep.is_member = equiv_ok && rep.admissibility_defect <= spec.delta_adm + 1e-12;
    return rep;
}

// Full membership including the empirical-measure conditions.
inline MembershipReport measure_membership(const Microstate& omega,
                                           const MicrostateSpaceSpec& spec) {
    MembershipReport rep = map_membership(omega, spec);
    if (!spec.measure) return rep;
    const SoficApproximation& sig = *spec.sigma;
    const double d = double(sig.d);
    for (const auto& pat : spec.test_patterns) {
        std::vector<const Perm*> invs;
        for (const auto& s : pat.shape.elems) invs.push_back(&sig.perm(invert(s)));
        std::uint64_t matches = 0;
        for (std::uint32_t a = 0; a < sig.d; ++a) {
            bool match = true;
            for (std::size_t i = 0; i < invs.size(); ++i)
                if (omega[(*invs[i])[a]] != pat.labels[i]) {
                    match = false;
                    break;
                }
            if (match) ++matches;
        }
        double emp = double(matches) / d;
        double mu = cylinder_measure(*spec.measure, pat);
        rep.empirical.push_back(emp);
        rep.deviations.push_back(std::abs(emp - mu));
        if (!(std::abs(emp - mu) < spec.delta_meas)) rep.measure_ok = false;
    }
    rep.is_member = rep.is_member && rep.measure_ok;
    return rep;
}

// Depth-first enumeration of the member labelings in orbit order with
// pruning: a branch dies as soon as a completed window is inadmissible beyond
// budget or an empirical-frequency band becomes unreachable.
inline std::uint64_t enumerate_microstates(
    const MicrostateSpaceSpec& spec,
    const std::function<void(const Microstate&)>& sink = nullptr,
    std::uint64_t node_budget = 0) {
    detail::CompiledSpec cs = detail::compile_spec(spec);
    if (node_budget == 0) node_budget = default_node_budget();
    const std::uint32_t d = cs.d;
    const int k = cs.k;
    Microstate omega(d, 0);
    std::uint64_t count = 0, nodes = 0;
    std::int64_t bad_adm = 0, bad_eq = 0;
    const std::size_t npat = cs.pattern_labels.size();
    std::vector<std::int64_t> matched(npat, 0), determined(npat, 0);

    // total windows per pattern equal d, so undetermined = d - determined
    std::function<void(std::uint32_t)> descend = [&](std::uint32_t pos) {
        if (pos == d) {
            ++count;
            if (sink) sink(omega);
            return;
        }
        for (int v = 0; v < k; ++v) {
            omega[pos] = static_cast<symbol_t>(v);
            if (++nodes > node_budget) throw BudgetExceeded(nodes);
            std::int64_t d_adm = 0, d_eq = 0;
            for (auto ci : cs.adm_at[pos]) {
                const auto& chk = cs.adm_checks[ci];
                bool ok = cs.shift->allowed_h(omega[chk.a], omega[chk.h]);
                if (ok && chk.has_v) ok = cs.shift->allowed_v(omega[chk.a], omega[chk.v]);
                if (!ok) ++d_adm;
            }
            if (bad_adm + d_adm > cs.adm_budget) continue;
            for (auto ei : cs.eq_at[pos]) {
                const auto& pr = cs.equiv_pairs[ei];
                if (omega[pr.first] != omega[pr.second]) ++d_eq;
            }
            if (bad_eq + d_eq > cs.equiv_budget) continue;
            bool feasible = true;
            std::size_t applied = 0;
            for (auto ii : cs.cyl_at[pos]) {
                const auto& inst = cs.cylinder_instances[ii];
                bool match = true;
                const auto& labels = cs.pattern_labels[inst.pattern_id];
                for (std::size_t i = 0; i < inst.sites.size(); ++i)
                    if (omega[inst.sites[i]] != labels[i]) {
                        match = false;
                        break;
                    }
                ++determined[inst.pattern_id];
                if (match) ++matched[inst.pattern_id];
                ++applied;
                std::uint32_t pid = inst.pattern_id;
                if (matched[pid] > cs.hi[pid] ||
                    matched[pid] + (std::int64_t(d) - determined[pid]) < cs.lo[pid]) {
                    feasible = false;
                    break;
                }
            }
            if (feasible) {
                bad_adm += d_adm;
                bad_eq += d_eq;
                descend(pos + 1);
                bad_adm -= d_adm;
                bad_eq -= d_eq;
            }
            // roll back the cylinder counters actually applied
            for (std::size_t i = 0; i < applied; ++i) {
                const auto& inst = cs.cylinder_instances[cs.cyl_at[pos][i]];
                const auto& labels = cs.pattern_labels[inst.pattern_id];
                bool match = true;
                for (std::size_t j = 0; j < inst.sites.size(); ++j)
                    if (omega[inst.sites[j]] != labels[j]) {
                        match = false;
                        break;
                    }
                --determined[inst.pattern_id];
                if (match) --matched[inst.pattern_id];
            }
        }
    };
    descend(0);
    return count;
}

enum class MetricMode { Rho2, RhoInf };
enum class CountStrategy { Exact, Greedy, Spanning };

inline std::string metric_name(MetricMode m) { return m == MetricMode::Rho2 ? "rho2" : "rho_inf"; }

struct SeparationReport {
    MetricMode metric = MetricMode::RhoInf;
    double epsilon = 0.0;
    std::optional<std::uint64_t> exact_count;
    std::uint64_t greedy_lower = 0;
    std::uint64_t spanning_upper = 0;
    double log_count = 0.0;        // natural log of the count the strategy produced
    double entropy_per_site = 0.0; // log_count / d
    std::string strategy_used;

    std::uint64_t best_count() const {
        return exact_count ? *exact_count : greedy_lower;
    }
};

namespace detail {

inline std::uint32_t hamming(const Microstate& a, const Microstate& b) {
    std::uint32_t h = 0;
    for (std::size_t i = 0; i < a.size(); ++i) h += a[i] != b[i];
    return h;
}

// Ostergard-style exact maximum packing: vertices are microstates, edges join
// pairs at Hamming distance >= min_ham.
inline std::uint64_t exact_packing(const std::vector<Microstate>& space, std::uint32_t min_ham) {
    const std::size_t n = space.size();
    if (n == 0) return 0;
    const std::size_t words = (n + 63) / 64;
    std::vector<std::vector<std::uint64_t>> adj(n, std::vector<std::uint64_t>(words, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (hamming(space[i], space[j]) >= min_ham) {
                adj[i][j >> 6] |= 1ull << (j & 63);
                adj[j][i >> 6] |= 1ull << (i & 63);
            }
    std::vector<std::size_t> best_suffix(n + 1, 0);
    std::size_t best = 0;
    bool found = false;
    std::function<void(std::vector<std::uint64_t>&, std::size_t)> expand =
        [&](std::vector<std::uint64_t>& cand, std::size_t size) {
            if (size > best) {
                best = size;
                found = true;
            }
            std::size_t pc = 0;
            for (auto w : cand) pc += static_cast<std::size_t>(__builtin_popcountll(w));
            while (pc > 0) {
                if (size + pc <= best) return;
                std::size_t i = 0;
                for (std::size_t w = 0; w < words; ++w)
                    if (cand[w]) {
                        i = w * 64 + static_cast<std::size_t>(__builtin_ctzll(cand[w]));
                        break;
                    }
                if (size + best_suffix[i] <= best) return;
                cand[i >> 6] &= ~(1ull << (i & 63));
                --pc;
                std::vector<std::uint64_t> next(words);
                for (std::size_t w = 0; w < words; ++w) next[w] = cand[w] & adj[i][w];
                expand(next, size + 1);
                if (found) return;
            }
        };
    for (std::size_t i = n; i-- > 0;) {
        found = false;
        std::vector<std::uint64_t> cand(words, 0);
        for (std::size_t j = i + 1; j < n; ++j)
            if (adj[i][j >> 6] & (1ull << (j & 63))) cand[j >> 6] |= 1ull << (j & 63);
        expand(cand, 1);
        best_suffix[i] = best;
    }
    return best;
}

}  // namespace detail

// Separated-set counting under rho_2 or rho_inf with the identity pseudometric
// on the target: rho_inf separates every pair of distinct labelings at
// distance one, and rho_2 squared is normalized Hamming distance.
inline SeparationReport count_separated(const std::vector<Microstate>& space, std::uint64_t d,
                                        double eps, MetricMode metric, CountStrategy strategy,
                                        std::size_t exact_guard = 4096) {
    if (eps <= 0.0) throw std::invalid_argument("count_separated: eps must be positive");
    if (eps > 1.0) throw std::invalid_argument("count_separated: eps exceeds the metric diameter 1");
    SeparationReport rep;
    rep.metric = metric;
    rep.epsilon = eps;
    const std::uint64_t n = space.size();
    if (metric == MetricMode::RhoInf) {
        // distinct labelings differ somewhere, hence lie at rho_inf distance 1
        rep.exact_count = n;
        rep.greedy_lower = n;
        rep.spanning_upper = n;
        rep.strategy_used = "exact";
    } else {
        std::uint32_t min_ham = static_cast<std::uint32_t>(
            std::max<std::int64_t>(0, static_cast<std::int64_t>(
                                          std::ceil(eps * eps * double(d) - 1e-9))));
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < space.size(); ++i) {
            bool ok = true;
            for (auto j : kept)
                if (detail::hamming(space[i], space[j]) < min_ham) {
                    ok = false;
                    break;
                }
            if (ok) kept.push_back(i);
        }
        rep.greedy_lower = kept.size();
        std::uint32_t cover_ham = static_cast<std::uint32_t>(std::max<std::int64_t>(
            0, detail::max_count_below(eps * eps * double(d) / 4.0) + 1));
        std::vector<std::size_t> centers;
        for (std::size_t i = 0; i < space.size(); ++i) {
            bool covered = false;
            for (auto j : centers)
                if (detail::hamming(space[i], space[j]) < cover_ham) {
                    covered = true;
                    break;
                }
            if (!covered) centers.push_back(i);
        }
        rep.spanning_upper = centers.size();
        if (strategy == CountStrategy::Exact) {
            if (space.size() > exact_guard)
                throw std::invalid_argument("count_separated: space too large for exact packing");
            rep.exact_count = detail::exact_packing(space, min_ham);
            if (!(rep.greedy_lower <= *rep.exact_count && *rep.exact_count <= rep.spanning_upper))
                throw std::logic_error("count_separated: packing bounds out of order");
            rep.strategy_used = "exact";
        } else {
            rep.strategy_used = strategy == CountStrategy::Greedy ? "greedy" : "spanning";
        }
    }
    std::uint64_t c = strategy == CountStrategy::Spanning && metric == MetricMode::Rho2
                          ? rep.spanning_upper
                          : rep.best_count();
    rep.log_count = c == 0 ? -INFINITY : std::log(double(c));
    rep.entropy_per_site = rep.log_count / double(d);
    return rep;
}

}  // namespace sofent
