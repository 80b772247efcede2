#pragma once

// Finite models sigma: G -> Sym(d) with measured sofic defects, built either
// as exact quotients (cyclic shift, torus shift) or from a Folner set with a
// deterministic completion of the partial translation action.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sofent/bitset.hpp"
#include "sofent/group.hpp"
#include "sofent/rng.hpp"

namespace sofent {

using Perm = std::vector<std::uint32_t>;

inline bool is_permutation(const Perm& p) {
    std::vector<bool> seen(p.size(), false);
    for (auto v : p) {
        if (v >= p.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

inline Perm inverse_perm(const Perm& p) {
    Perm inv(p.size());
    for (std::uint32_t a = 0; a < p.size(); ++a) inv[p[a]] = a;
    return inv;
}

struct SoficApproximation {
    Group group;
    std::uint64_t d = 0;
    FiniteSubset support;               // elements s with a materialized permutation
    std::vector<Perm> perms;            // aligned with support.elems
    std::vector<Perm> inv_perms;        // inverse arrays, same alignment
    std::string label;

    bool has(const GroupElement& s) const { return support.index_of(s) != FiniteSubset::npos; }

    const Perm& perm(const GroupElement& s) const {
        auto i = support.index_of(s);
        if (i == FiniteSubset::npos)
            throw std::invalid_argument("sofic approximation: element " + element_name(s) +
                                        " not in support");
        return perms[i];
    }
    const Perm& inv_perm(const GroupElement& s) const {
        auto i = support.index_of(s);
        if (i == FiniteSubset::npos)
            throw std::invalid_argument("sofic approximation: element " + element_name(s) +
                                        " not in support");
        return inv_perms[i];
    }
    std::uint32_t apply(const GroupElement& s, std::uint32_t a) const { return perm(s)[a]; }

    void finalize() {
        inv_perms.clear();
        inv_perms.reserve(perms.size());
        for (const auto& p : perms) {
            if (p.size() != d || !is_permutation(p))
                throw std::invalid_argument("sofic approximation: stored array is not a permutation of {1..d}");
            inv_perms.push_back(inverse_perm(p));
        }
    }
};

// T = S u S^-1 u {e} closed under one round of products; every word st the
// downstream defect and good-set scans ask about is materialized eagerly.
inline FiniteSubset support_closure(const FiniteSubset& base) {
    FiniteSubset t = set_union(set_union(base, inverse_set(base)),
                               FiniteSubset(base.group, {identity(base.group)}));
    return set_union(t, product_set(t, t));
}

inline FiniteSubset default_generators(const Group& g) {
    if (g.rank() == 1) return make_subset(g, {{-1, 0}, {0, 0}, {1, 0}});
    return make_subset(g, {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {0, 0}});
}

// sigma_s(a) = a + s mod d on {0..d-1}; an exact homomorphism Z -> Sym(d).
inline SoficApproximation cyclic_approximation(std::uint64_t d,
                                               const FiniteSubset& support_base) {
    if (d == 0) throw std::invalid_argument("cyclic_approximation: d must be positive");
    if (support_base.group.kind != GroupKind::Z)
        throw std::invalid_argument("cyclic_approximation: support must live in Z");
    SoficApproximation s;
    s.group = group_z();
    s.d = d;
    s.support = support_closure(support_base);
    s.label = "cyclic(" + std::to_string(d) + ")";
    for (const auto& e : s.support.elems) {
        Perm p(d);
        std::int64_t shift = mod_reduce(e.c[0], static_cast<std::int64_t>(d));
        for (std::uint64_t a = 0; a < d; ++a)
            p[a] = static_cast<std::uint32_t>((a + static_cast<std::uint64_t>(shift)) % d);
        s.perms.push_back(std::move(p));
    }
    s.finalize();
    return s;
}

inline SoficApproximation cyclic_approximation(std::uint64_t d) {
    return cyclic_approximation(d, default_generators(group_z()));
}

// Componentwise shift on the n1 x n2 torus, point (x,y) stored as x*n2 + y.
inline SoficApproximation torus_approximation(std::uint64_t n1, std::uint64_t n2,
                                              const FiniteSubset& support_base) {
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("torus_approximation: sides must be positive");
    if (support_base.group.kind != GroupKind::Z2)
        throw std::invalid_argument("torus_approximation: support must live in Z2");
    SoficApproximation s;
    s.group = group_z2();
    s.d = n1 * n2;
    s.support = support_closure(support_base);
    s.label = "torus(" + std::to_string(n1) + "x" + std::to_string(n2) + ")";
    for (const auto& e : s.support.elems) {
        Perm p(s.d);
        std::int64_t s1 = mod_reduce(e.c[0], static_cast<std::int64_t>(n1));
        std::int64_t s2 = mod_reduce(e.c[1], static_cast<std::int64_t>(n2));
        for (std::uint64_t x = 0; x < n1; ++x)
            for (std::uint64_t y = 0; y < n2; ++y) {
                std::uint64_t xx = (x + static_cast<std::uint64_t>(s1)) % n1;
                std::uint64_t yy = (y + static_cast<std::uint64_t>(s2)) % n2;
                p[x * n2 + y] = static_cast<std::uint32_t>(xx * n2 + yy);
            }
        s.perms.push_back(std::move(p));
    }
    s.finalize();
    return s;
}

inline SoficApproximation torus_approximation(std::uint64_t n1, std::uint64_t n2) {
    return torus_approximation(n1, n2, default_generators(group_z2()));
}

// Exact quotient model of Z/n acting on itself.
inline SoficApproximation regular_approximation(std::int64_t n) {
    Group g = group_zmod(n);
    std::vector<GroupElement> all;
    for (std::int64_t x = 0; x < n; ++x) all.push_back(make_element(g, x));
    SoficApproximation s;
    s.group = g;
    s.d = static_cast<std::uint64_t>(n);
    s.support = FiniteSubset(g, all);
    s.label = "regular(Z/" + std::to_string(n) + ")";
    for (const auto& e : s.support.elems) {
        Perm p(s.d);
        for (std::int64_t a = 0; a < n; ++a)
            p[static_cast<std::size_t>(a)] =
                static_cast<std::uint32_t>(mod_reduce(a + e.c[0], n));
        s.perms.push_back(std::move(p));
    }
    s.finalize();
    return s;
}

// Points of {1..d} are the elements of F in lexicographic order. For s in the
// support, sigma_s moves a to s*a whenever s*a stays in F; the leftover
// sources {a : s*a not in F} are matched to the holes F \ sF, in lexicographic
// order by default or by a seeded shuffle of the holes.
inline SoficApproximation from_folner(const Group& group, const FiniteSubset& F,
                                      const FiniteSubset& support_base,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
    if (F.empty()) throw std::invalid_argument("from_folner: F must be nonempty");
    if (F.group != group || support_base.group != group)
        throw std::invalid_argument("from_folner: mismatched groups");
    SoficApproximation s;
    s.group = group;
    s.d = F.size();
    s.support = support_closure(support_base);
    s.label = "folner(|F|=" + std::to_string(F.size()) + (seed ? ",seeded" : ",lex") + ")";
    for (std::size_t si = 0; si < s.support.size(); ++si) {
        const GroupElement& g = s.support.elems[si];
        Perm p(s.d, UINT32_MAX);
        std::vector<bool> hit(s.d, false);
        std::vector<std::uint32_t> leftover;
        for (std::uint32_t a = 0; a < s.d; ++a) {
            GroupElement img = compose(g, F.elems[a]);
            std::size_t idx = F.index_of(img);
            if (idx != FiniteSubset::npos) {
                p[a] = static_cast<std::uint32_t>(idx);
                hit[idx] = true;
            } else {
                leftover.push_back(a);
            }
        }
        std::vector<std::uint32_t> holes;
        for (std::uint32_t b = 0; b < s.d; ++b)
            if (!hit[b]) holes.push_back(b);
        // leftover and holes are both ascending; |leftover| == |holes|
        if (seed) {
            CounterRng rng{*seed, si};
            for (std::size_t i = holes.size(); i > 1; --i)
                std::swap(holes[i - 1], holes[rng.below(i, i)]);
        }
        for (std::size_t i = 0; i < leftover.size(); ++i) p[leftover[i]] = holes[i];
        s.perms.push_back(std::move(p));
    }
    s.finalize();
    return s;
}

// Exhaustive multiplicativity / freeness / identity defect fractions over K.
struct DefectReport {
    // (s, t) -> fraction of a with sigma_st(a) != sigma_s(sigma_t(a))
    std::vector<std::tuple<GroupElement, GroupElement, double>> mult_defect;
    // (s, s') with s < s' -> fraction of a with sigma_s(a) == sigma_s'(a)
    std::vector<std::tuple<GroupElement, GroupElement, double>> free_defect;
    double id_defect = 0.0;  // fraction of a with sigma_e(a) != a

    double max_mult() const {
        double m = 0;
        for (const auto& [s, t, v] : mult_defect) m = std::max(m, v);
        return m;
    }
    double max_free() const {
        double m = 0;
        for (const auto& [s, t, v] : free_defect) m = std::max(m, v);
        return m;
    }
    double mult(const GroupElement& s, const GroupElement& t) const {
        for (const auto& [a, b, v] : mult_defect)
            if (a == s && b == t) return v;
        throw std::invalid_argument("DefectReport: pair not measured");
    }
    double free(const GroupElement& s, const GroupElement& t) const {
        for (const auto& [a, b, v] : free_defect)
            if ((a == s && b == t) || (a == t && b == s)) return v;
        throw std::invalid_argument("DefectReport: pair not measured");
    }
};

inline DefectReport defect_report(const SoficApproximation& sig, const FiniteSubset& K) {
    if (K.group != sig.group) throw std::invalid_argument("defect_report: mismatched groups");
    DefectReport rep;
    const double d = double(sig.d);
    for (const auto& s : K.elems)
        for (const auto& t : K.elems) {
            const Perm& ps = sig.perm(s);
            const Perm& pt = sig.perm(t);
            const Perm& pst = sig.perm(compose(s, t));  // throws naming st if missing
            std::uint64_t bad = 0;
            for (std::uint64_t a = 0; a < sig.d; ++a)
                if (pst[a] != ps[pt[a]]) ++bad;
            rep.mult_defect.emplace_back(s, t, double(bad) / d);
        }
    for (std::size_t i = 0; i < K.size(); ++i)
        for (std::size_t j = i + 1; j < K.size(); ++j) {
            const Perm& ps = sig.perm(K.elems[i]);
            const Perm& pt = sig.perm(K.elems[j]);
            std::uint64_t agree = 0;
            for (std::uint64_t a = 0; a < sig.d; ++a)
                if (ps[a] == pt[a]) ++agree;
            rep.free_defect.emplace_back(K.elems[i], K.elems[j], double(agree) / d);
        }
    const Perm& pe = sig.perm(identity(sig.group));
    std::uint64_t moved = 0;
    for (std::uint64_t a = 0; a < sig.d; ++a)
        if (pe[a] != a) ++moved;
    rep.id_defect = double(moved) / d;
    return rep;
}

// Points where sigma behaves exactly like a free homomorphism over the window.
struct GoodSet {
    FiniteSubset window;
    IndexSet members;

    double density() const {
        return members.ground_size() == 0 ? 0.0
                                          : double(members.count()) / double(members.ground_size());
    }
};

inline GoodSet good_set(const SoficApproximation& sig, const FiniteSubset& F) {
    if (F.group != sig.group) throw std::invalid_argument("good_set: mismatched groups");
    GoodSet gs{F, IndexSet::full(sig.d)};
    const Perm& pe = sig.perm(identity(sig.group));
    for (std::uint64_t a = 0; a < sig.d; ++a)
        if (pe[a] != a) gs.members.reset(a);
    std::vector<const Perm*> fp;
    for (const auto& s : F.elems) fp.push_back(&sig.perm(s));
    for (std::size_t i = 0; i < F.size(); ++i)
        for (std::size_t j = 0; j < F.size(); ++j) {
            const Perm& pst = sig.perm(compose(F.elems[i], F.elems[j]));
            const Perm& ps = *fp[i];
            const Perm& pt = *fp[j];
            for (std::uint64_t a = 0; a < sig.d; ++a)
                if (pst[a] != ps[pt[a]]) gs.members.reset(a);
            if (i != j) {
                for (std::uint64_t a = 0; a < sig.d; ++a)
                    if (ps[a] == pt[a]) gs.members.reset(a);
            }
        }
    return gs;
}

}  // namespace sofent
