#pragma once

// Even coverings, greedy epsilon-disjoint subcollections with witnesses, the
// Rokhlin quasitiling recursion over a sofic model space, disjointification,
// and an independent verifier for the tiling conditions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sofent/bitset.hpp"
#include "sofent/group.hpp"
#include "sofent/sofic.hpp"

namespace sofent {

struct SetFamily {
    std::size_t ground_size = 0;
    std::vector<IndexSet> sets;
    std::vector<std::pair<std::size_t, std::uint32_t>> labels;  // optional (k, center)

    void push(IndexSet s) {
        if (s.ground_size() != ground_size)
            throw std::invalid_argument("SetFamily: ground size mismatch");
        sets.push_back(std::move(s));
    }
};

struct EvenCoveringCertificate {
    double delta = 0.0;                         // the delta the family was checked against
    std::size_t multiplicity = 0;               // minimal M = max pointwise count
    std::vector<std::uint32_t> pointwise_count;
    std::uint64_t total_mass = 0;               // sum |A_i|
    bool valid = false;                         // total_mass >= (1-delta) M d
    double delta_min = 0.0;                     // smallest delta this family certifies
};

inline EvenCoveringCertificate even_covering_check(const SetFamily& family, double delta) {
    if (family.sets.empty()) throw std::invalid_argument("even_covering_check: empty family");
    if (delta < 0 || delta >= 1) throw std::invalid_argument("even_covering_check: delta outside [0,1)");
    EvenCoveringCertificate cert;
    cert.delta = delta;
    cert.pointwise_count.assign(family.ground_size, 0);
    for (const auto& a : family.sets) {
        std::size_t n = a.count();
        if (n == 0) throw std::invalid_argument("even_covering_check: empty set in family");
        cert.total_mass += n;
        a.for_each([&](std::size_t i) { ++cert.pointwise_count[i]; });
    }
    cert.multiplicity = *std::max_element(cert.pointwise_count.begin(), cert.pointwise_count.end());
    long double md = static_cast<long double>(cert.multiplicity) *
                     static_cast<long double>(family.ground_size);
    cert.valid = static_cast<long double>(cert.total_mass) >= (1.0L - delta) * md;
    long double ratio = static_cast<long double>(cert.total_mass) / md;
    cert.delta_min = ratio >= 1.0L ? 0.0 : static_cast<double>(1.0L - ratio);
    return cert;
}

struct DisjointnessWitness {
    double epsilon = 0.0;
    std::vector<std::vector<std::uint32_t>> hats;  // aligned with the chosen sets
};

struct DisjointSelection {
    std::vector<std::size_t> chosen;  // indices into the input family
    DisjointnessWitness witness;
    double coverage = 0.0;            // |union of chosen sets| / d
    double delta = 0.0;               // delta certified for the input family
};

// Default admission order: descending set size, ties by index.
inline std::vector<std::size_t> default_order(const SetFamily& family) {
    std::vector<std::size_t> order(family.sets.size());
    std::vector<std::size_t> sizes(family.sets.size());
    for (std::size_t i = 0; i < family.sets.size(); ++i) {
        order[i] = i;
        sizes[i] = family.sets[i].count();
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    return order;
}

namespace detail {

// Greedy carving core over point lists; the public bitset entry point and the
// tiling recursion both run through here.
inline DisjointSelection greedy_disjoint_core(std::size_t ground,
                                              const std::vector<std::vector<std::uint32_t>>& sets,
                                              double eps, double delta,
                                              const std::vector<std::size_t>& order) {
    DisjointSelection sel;
    sel.witness.epsilon = eps;
    sel.delta = delta;
    IndexSet claimed(ground);
    IndexSet covered(ground);
    std::vector<char> taken(sets.size(), 0);
    for (std::size_t idx : order) {
        const auto& a = sets[idx];
        std::size_t fresh = 0;
        for (auto p : a) fresh += !claimed.test(p);
        if (static_cast<double>(fresh) + 1e-9 >= (1.0 - eps) * static_cast<double>(a.size())) {
            std::vector<std::uint32_t> hat_points;
            hat_points.reserve(fresh);
            for (auto p : a) {
                covered.set(p);
                if (!claimed.test(p)) {
                    hat_points.push_back(p);
                    claimed.set(p);
                }
            }
            std::sort(hat_points.begin(), hat_points.end());  // canonical witness order
            sel.chosen.push_back(idx);
            sel.witness.hats.push_back(std::move(hat_points));
            taken[idx] = 1;
        }
    }
    // maximality: no rejected set can still carve a big enough hat
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (taken[i]) continue;
        std::size_t fresh = 0;
        for (auto p : sets[i]) fresh += !claimed.test(p);
        if (static_cast<double>(fresh) + 1e-9 >= (1.0 - eps) * static_cast<double>(sets[i].size()))
            throw std::logic_error("maximal_eps_disjoint: greedy result not maximal");
    }
    sel.coverage = static_cast<double>(covered.count()) / static_cast<double>(ground);
    if (sel.coverage + 1e-9 < eps * (1.0 - delta))
        throw std::logic_error("maximal_eps_disjoint: coverage below eps*(1-delta)");
    return sel;
}

}  // namespace detail

// Greedy pass in the given order: a set is admitted iff the hat carved from it
// (the set minus everything already claimed) keeps a (1-eps) fraction. The
// result is maximal and covers at least eps*(1-delta) of the ground set.
inline DisjointSelection maximal_eps_disjoint(const SetFamily& family, double eps,
                                              std::optional<double> delta = std::nullopt,
                                              std::vector<std::size_t> order = {}) {
    if (eps < 0 || eps >= 1) throw std::invalid_argument("maximal_eps_disjoint: eps outside [0,1)");
    EvenCoveringCertificate cert = even_covering_check(family, delta.value_or(0.0));
    double del = delta.value_or(cert.delta_min);
    if (delta && !cert.valid)
        throw std::invalid_argument("maximal_eps_disjoint: family is not a delta-even covering");
    if (order.empty()) order = default_order(family);
    std::vector<std::vector<std::uint32_t>> sets;
    sets.reserve(family.sets.size());
    for (const auto& s : family.sets) sets.push_back(s.to_indices());
    return detail::greedy_disjoint_core(family.ground_size, sets, eps, del, order);
}

struct RokhlinParameters {
    double tau = 0.0;
    double eta = 0.0;
    double eta_prime = 0.0;
    double eta_double_prime = 0.0;
    std::size_t ell = 0;
    std::vector<double> t;  // t[0] = t_1, ..., t[ell-1] = t_ell
};

// t_1 = eta (1 - tau - eta''); t_{n+1} = eta (1 - tau - eta'' - c t_n) + t_n
// with c = 1 + eta'/(1-eta), stationary once the inner term goes negative.
inline std::vector<double> rokhlin_t_sequence(double tau, double eta, double eta_prime,
                                              double eta_double_prime, std::size_t ell) {
    double c = 1.0 + eta_prime / (1.0 - eta);
    double head = 1.0 - tau - eta_double_prime;
    std::vector<double> t;
    t.reserve(ell);
    double cur = eta * head;
    t.push_back(cur);
    while (t.size() < ell) {
        double inner = head - c * cur;
        cur = inner >= 0 ? eta * inner + cur : cur;
        t.push_back(cur);
    }
    return t;
}

// Parameters with the number of stages fixed by the caller (the shapes in
// hand); the t array still gives valid per-stage coverage bounds, but t_ell
// may fall short of 1 - tau - eta.
inline RokhlinParameters rokhlin_parameters_for(double tau, double eta, double eta_prime,
                                                double eta_double_prime, std::size_t ell) {
    if (tau < 0 || tau >= 1) throw std::invalid_argument("rokhlin parameters: tau outside [0,1)");
    if (eta <= 0 || eta >= 1) throw std::invalid_argument("rokhlin parameters: eta outside (0,1)");
    if (eta_prime <= 0 || eta_double_prime <= 0)
        throw std::invalid_argument("rokhlin parameters: eta' and eta'' must be positive");
    if (eta * (1.0 + eta_prime / (1.0 - eta)) >= 1.0)
        throw std::invalid_argument("rokhlin parameters: eta (1 + eta'/(1-eta)) must be below 1");
    if (ell == 0) throw std::invalid_argument("rokhlin parameters: need at least one stage");
    RokhlinParameters p{tau, eta, eta_prime, eta_double_prime, ell, {}};
    p.t = rokhlin_t_sequence(tau, eta, eta_prime, eta_double_prime, ell);
    return p;
}

// Canonical selection: eta'' = min(eta, 1-tau)/8 and eta' = (1-eta) times the
// same, both halved until the three strict inequalities hold; the t recursion
// then runs until 1 - tau - eta'' - c t_ell < eta'', which forces
// t_ell > 1 - tau - eta.
inline RokhlinParameters rokhlin_parameters(double tau, double eta) {
    if (tau < 0 || tau >= 1) throw std::invalid_argument("rokhlin_parameters: tau outside [0,1)");
    if (eta <= 0 || eta >= 1) throw std::invalid_argument("rokhlin_parameters: eta outside (0,1)");
    double base = std::min(eta, 1.0 - tau) / 8.0;
    double epp = base;
    double ep = (1.0 - eta) * base;
    auto ok = [&]() {
        double c = 1.0 + ep / (1.0 - eta);
        return 1.0 - tau - 2.0 * epp > 0 && eta * c < 1.0 &&
               (1.0 - tau - 2.0 * epp) / c > 1.0 - tau - eta;
    };
    while (!ok()) {
        epp /= 2;
        ep /= 2;
        if (epp < 1e-300) throw std::logic_error("rokhlin_parameters: halving did not terminate");
    }
    double c = 1.0 + ep / (1.0 - eta);
    double head = 1.0 - tau - epp;
    std::vector<double> t{eta * head};
    while (head - c * t.back() >= epp) {
        t.push_back(eta * (head - c * t.back()) + t.back());
        if (t.size() > 1000000)
            throw std::logic_error("rokhlin_parameters: t recursion exceeded iteration cap");
    }
    RokhlinParameters p{tau, eta, ep, epp, t.size(), std::move(t)};
    return p;
}

struct Quasitiling {
    Group group;
    std::uint64_t d = 0;
    double tau = 0.0;
    double eta = 0.0;
    std::vector<FiniteSubset> shapes;                            // F_1 c ... c F_ell
    std::vector<std::vector<std::uint32_t>> centers;             // per shape
    std::vector<std::vector<std::vector<std::uint32_t>>> hats;   // witness, per (k, center)
    double coverage = 0.0;                                       // |union sigma(F_k) C_k| / d
    // per (k, center): indices into shapes[k].elems whose images are disjoint
    std::vector<std::vector<std::vector<std::uint32_t>>> cores;

    bool has_cores() const { return !cores.empty(); }
    std::size_t center_count() const {
        std::size_t n = 0;
        for (const auto& c : centers) n += c.size();
        return n;
    }
};

inline std::vector<std::uint32_t> tile_points(const SoficApproximation& sig,
                                              const FiniteSubset& shape, std::uint32_t c) {
    std::vector<std::uint32_t> out;
    out.reserve(shape.size());
    for (const auto& s : shape.elems) out.push_back(sig.perm(s)[c]);
    return out;
}

// The reverse recursion of the Rokhlin lemma: stage k admits tiles sigma(F_k)c
// around centers from B n V that avoid everything already tiled, then takes a
// maximal eta-disjoint subfamily. Cumulative coverage is checked against the
// t sequence stage by stage.
inline Quasitiling rokhlin_quasitiling(const SoficApproximation& sig, const GoodSet& B,
                                       const IndexSet& V, std::vector<FiniteSubset> shapes,
                                       double tau, double eta, const RokhlinParameters& params) {
    const std::uint64_t d = sig.d;
    if (shapes.empty()) throw std::invalid_argument("rokhlin_quasitiling: need at least one shape");
    if (shapes.size() != params.ell)
        throw std::invalid_argument("rokhlin_quasitiling: shape count differs from params.ell");
    if (!shapes.front().contains(identity(sig.group)))
        throw std::invalid_argument("rokhlin_quasitiling: F_1 must contain the identity");
    for (std::size_t k = 1; k < shapes.size(); ++k) {
        if (!shapes[k - 1].subset_of(shapes[k]))
            throw std::invalid_argument("rokhlin_quasitiling: shapes must be nested");
        FiniteSubset prod = product_set(inverse_set(shapes[k - 1]), shapes[k]);
        std::size_t outside = 0;
        for (const auto& e : prod.elems)
            if (!shapes[k].contains(e)) ++outside;
        if (static_cast<double>(outside) >
            params.eta_prime * static_cast<double>(shapes[k].size()) + 1e-9)
            throw std::invalid_argument(
                "rokhlin_quasitiling: |(F_" + std::to_string(k) + "^-1 F_" + std::to_string(k + 1) +
                ") \\ F_" + std::to_string(k + 1) + "| exceeds eta' |F_" + std::to_string(k + 1) + "|");
    }
    if (static_cast<double>(B.members.count()) + 1e-9 <
        (1.0 - params.eta_double_prime) * static_cast<double>(d))
        throw std::invalid_argument("rokhlin_quasitiling: |B| below (1 - eta'') d");
    if (static_cast<double>(V.count()) + 1e-9 < (1.0 - tau) * static_cast<double>(d))
        throw std::invalid_argument("rokhlin_quasitiling: |V| below (1 - tau) d");
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    if (!big.subset_of(B.window))
        throw std::invalid_argument(
            "rokhlin_quasitiling: B must be a good set for F_ell united with its inverse");

    const std::size_t ell = shapes.size();
    Quasitiling qt;
    qt.group = sig.group;
    qt.d = d;
    qt.tau = tau;
    qt.eta = eta;
    qt.shapes = std::move(shapes);
    qt.centers.assign(ell, {});
    qt.hats.assign(ell, {});

    IndexSet bv = B.members & V;
    IndexSet covered(d);
    for (std::size_t stage = 0; stage < ell; ++stage) {
        std::size_t k = ell - 1 - stage;  // construct in reverse order
        const FiniteSubset& shape = qt.shapes[k];
        std::vector<std::vector<std::uint32_t>> tiles;
        std::vector<std::uint32_t> candidates;
        bv.for_each([&](std::size_t c) {
            auto pts = tile_points(sig, shape, static_cast<std::uint32_t>(c));
            for (auto p : pts)
                if (covered.test(p)) return;
            tiles.push_back(std::move(pts));
            candidates.push_back(static_cast<std::uint32_t>(c));
        });
        if (!candidates.empty()) {
            // minimal even-covering delta for the stage family
            std::vector<std::uint32_t> pointwise(d, 0);
            std::uint64_t total = 0;
            for (const auto& t : tiles) {
                total += t.size();
                for (auto p : t) ++pointwise[p];
            }
            std::uint32_t mult = *std::max_element(pointwise.begin(), pointwise.end());
            long double ratio = static_cast<long double>(total) /
                                (static_cast<long double>(mult) * static_cast<long double>(d));
            double delta_min = ratio >= 1.0L ? 0.0 : static_cast<double>(1.0L - ratio);
            std::vector<std::size_t> order(tiles.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return tiles[a].size() > tiles[b].size();
            });
            DisjointSelection sel = detail::greedy_disjoint_core(d, tiles, eta, delta_min, order);
            for (std::size_t i = 0; i < sel.chosen.size(); ++i) {
                std::uint32_t c = candidates[sel.chosen[i]];
                qt.centers[k].push_back(c);
                qt.hats[k].push_back(sel.witness.hats[i]);
                for (auto p : tiles[sel.chosen[i]]) covered.set(p);
            }
        }
        double bound = params.t[stage];
        if (static_cast<double>(covered.count()) <
            bound * static_cast<double>(d) - 1e-6 * static_cast<double>(d))
            throw std::logic_error("rokhlin_quasitiling: stage coverage below the t bound");
    }
    qt.coverage = static_cast<double>(covered.count()) / static_cast<double>(d);
    return qt;
}

// Passes from the eta-disjoint family to genuinely disjoint cores: the part of
// each shape whose image lands in the stored witness hat.
inline Quasitiling disjointify(const Quasitiling& qt, const SoficApproximation& sig) {
    Quasitiling out = qt;
    out.cores.assign(qt.shapes.size(), {});
    for (std::size_t k = 0; k < qt.shapes.size(); ++k) {
        if (qt.hats[k].size() != qt.centers[k].size())
            throw std::invalid_argument("disjointify: missing witness hats");
        for (std::size_t ci = 0; ci < qt.centers[k].size(); ++ci) {
            auto pts = tile_points(sig, qt.shapes[k], qt.centers[k][ci]);
            std::vector<std::uint32_t> hat = qt.hats[k][ci];
            std::sort(hat.begin(), hat.end());
            std::vector<std::uint32_t> core;
            core.reserve(hat.size());
            for (std::uint32_t i = 0; i < pts.size(); ++i)
                if (std::binary_search(hat.begin(), hat.end(), pts[i])) core.push_back(i);
            out.cores[k].push_back(std::move(core));
        }
    }
    return out;
}

struct QuasitilingReport {
    bool bijectivity_ok = true;
    bool witness_ok = true;
    bool blocks_disjoint_ok = true;
    bool cores_ok = true;
    double coverage = 0.0;
    bool coverage_ok = true;
    std::vector<std::string> failures;

    bool all_ok() const {
        return bijectivity_ok && witness_ok && blocks_disjoint_ok && cores_ok && coverage_ok;
    }
};

// Recomputes every tiling condition from the raw permutations; shares no state
// with the constructor.
inline QuasitilingReport verify_quasitiling(const Quasitiling& qt, const SoficApproximation& sig,
                                            double tau, double eta) {
    QuasitilingReport rep;
    const std::uint64_t d = sig.d;
    IndexSet all_tiles(d);
    IndexSet hat_claimed(d);
    std::vector<IndexSet> blocks;
    for (std::size_t k = 0; k < qt.shapes.size(); ++k) {
        IndexSet block(d);
        const FiniteSubset& shape = qt.shapes[k];
        for (std::size_t ci = 0; ci < qt.centers[k].size(); ++ci) {
            std::uint32_t c = qt.centers[k][ci];
            std::vector<std::uint32_t> img;
            img.reserve(shape.size());
            for (const auto& s : shape.elems) img.push_back(sig.perm(s)[c]);
            std::vector<std::uint32_t> sorted = img;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                rep.bijectivity_ok = false;
                rep.failures.push_back("bijectivity fails at k=" + std::to_string(k + 1) +
                                       " c=" + std::to_string(c));
            }
            for (auto p : img) {
                block.set(p);
                all_tiles.set(p);
            }
            if (ci < qt.hats[k].size()) {
                const auto& hat = qt.hats[k][ci];
                if (static_cast<double>(hat.size()) + 1e-9 <
                    (1.0 - eta) * static_cast<double>(shape.size())) {
                    rep.witness_ok = false;
                    rep.failures.push_back("witness hat below (1-eta)|F| at k=" +
                                           std::to_string(k + 1) + " c=" + std::to_string(c));
                }
                for (auto p : hat) {
                    if (std::find(img.begin(), img.end(), p) == img.end()) {
                        rep.witness_ok = false;
                        rep.failures.push_back("witness hat leaves its set at k=" +
                                               std::to_string(k + 1) + " c=" + std::to_string(c));
                        break;
                    }
                }
                for (auto p : hat) {
                    if (hat_claimed.test(p)) {
                        rep.witness_ok = false;
                        rep.failures.push_back("witness hats overlap at k=" + std::to_string(k + 1) +
                                               " c=" + std::to_string(c));
                        break;
                    }
                }
                for (auto p : hat) hat_claimed.set(p);
            } else {
                rep.witness_ok = false;
                rep.failures.push_back("missing witness hat at k=" + std::to_string(k + 1) +
                                       " c=" + std::to_string(c));
            }
        }
        blocks.push_back(std::move(block));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = i + 1; j < blocks.size(); ++j)
            if (blocks[i].intersects(blocks[j])) {
                rep.blocks_disjoint_ok = false;
                rep.failures.push_back("blocks k=" + std::to_string(i + 1) + " and k=" +
                                       std::to_string(j + 1) + " intersect");
            }
    if (qt.has_cores()) {
        IndexSet core_claimed(d);
        for (std::size_t k = 0; k < qt.shapes.size(); ++k) {
            for (std::size_t ci = 0; ci < qt.centers[k].size(); ++ci) {
                const auto& core = qt.cores[k][ci];
                if (static_cast<double>(core.size()) + 1e-9 <
                    (1.0 - eta) * static_cast<double>(qt.shapes[k].size())) {
                    rep.cores_ok = false;
                    rep.failures.push_back("core below (1-eta)|F| at k=" + std::to_string(k + 1));
                }
                for (auto si : core) {
                    std::uint32_t p = sig.perm(qt.shapes[k].elems[si])[qt.centers[k][ci]];
                    if (core_claimed.test(p)) {
                        rep.cores_ok = false;
                        rep.failures.push_back("core images overlap at k=" + std::to_string(k + 1));
                        break;
                    }
                    core_claimed.set(p);
                }
            }
        }
    }
    rep.coverage = static_cast<double>(all_tiles.count()) / static_cast<double>(d);
    rep.coverage_ok = rep.coverage + 1e-12 >= 1.0 - tau - eta;
    if (!rep.coverage_ok)
        rep.failures.push_back("coverage below 1 - tau - eta");
    return rep;
}

}  // namespace sofent
