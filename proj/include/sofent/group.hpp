#pragma once

// Concrete amenable groups (Z, Z^2, Z/n): elements, products, boxes and
// invariance defects of finite subsets.

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sofent {

enum class GroupKind { Z, Z2, Zmod };

struct Group {
    GroupKind kind = GroupKind::Z;
    std::int64_t modulus = 0;  // Zmod only

    int rank() const { return kind == GroupKind::Z2 ? 2 : 1; }

    bool operator==(const Group& o) const {
        return kind == o.kind && (kind != GroupKind::Zmod || modulus == o.modulus);
    }
    bool operator!=(const Group& o) const { return !(*this == o); }

    std::string name() const {
        switch (kind) {
            case GroupKind::Z: return "Z";
            case GroupKind::Z2: return "Z2";
            case GroupKind::Zmod: return "Z/" + std::to_string(modulus);
        }
        return "?";
    }
};

inline Group group_z() { return {GroupKind::Z, 0}; }
inline Group group_z2() { return {GroupKind::Z2, 0}; }
inline Group group_zmod(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("Zmod modulus must be positive");
    return {GroupKind::Zmod, n};
}

using Coords = std::array<std::int64_t, 2>;

struct GroupElement {
    Group group;
    Coords c{0, 0};

    bool operator==(const GroupElement& o) const { return group == o.group && c == o.c; }
    bool operator!=(const GroupElement& o) const { return !(*this == o); }
    // lexicographic order on coordinates; keeps every set operation deterministic
    bool operator<(const GroupElement& o) const { return c < o.c; }
};

inline std::int64_t mod_reduce(std::int64_t x, std::int64_t n) {
    std::int64_t r = x % n;
    return r < 0 ? r + n : r;
}

inline GroupElement make_element(const Group& g, std::int64_t x, std::int64_t y = 0) {
    GroupElement e{g, {x, y}};
    if (g.kind == GroupKind::Zmod) e.c[0] = mod_reduce(x, g.modulus);
    if (g.rank() == 1) e.c[1] = 0;
    return e;
}

inline GroupElement identity(const Group& g) { return make_element(g, 0, 0); }

inline GroupElement compose(const GroupElement& a, const GroupElement& b) {
    if (a.group != b.group) throw std::invalid_argument("compose: mismatched groups");
    return make_element(a.group, a.c[0] + b.c[0], a.c[1] + b.c[1]);
}

inline GroupElement invert(const GroupElement& a) {
    return make_element(a.group, -a.c[0], -a.c[1]);
}

inline std::string element_name(const GroupElement& e) {
    if (e.group.rank() == 1) return std::to_string(e.c[0]);
    return "(" + std::to_string(e.c[0]) + "," + std::to_string(e.c[1]) + ")";
}

// Ordered, duplicate-free finite subset of a group.
struct FiniteSubset {
    Group group;
    std::vector<GroupElement> elems;

    FiniteSubset() = default;
    FiniteSubset(Group g, std::vector<GroupElement> es) : group(g), elems(std::move(es)) {
        for (auto& e : elems) {
            if (e.group != group) throw std::invalid_argument("FiniteSubset: mixed groups");
        }
        std::sort(elems.begin(), elems.end());
        elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    }

    std::size_t size() const { return elems.size(); }
    bool empty() const { return elems.empty(); }
    bool contains(const GroupElement& e) const {
        return std::binary_search(elems.begin(), elems.end(), e);
    }
    // index of e in the lexicographic enumeration, or npos
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t index_of(const GroupElement& e) const {
        auto it = std::lower_bound(elems.begin(), elems.end(), e);
        if (it == elems.end() || !(*it == e)) return npos;
        return static_cast<std::size_t>(it - elems.begin());
    }

    bool operator==(const FiniteSubset& o) const { return group == o.group && elems == o.elems; }

    bool subset_of(const FiniteSubset& o) const {
        for (const auto& e : elems)
            if (!o.contains(e)) return false;
        return true;
    }
};

inline FiniteSubset make_subset(const Group& g, const std::vector<Coords>& cs) {
    std::vector<GroupElement> es;
    es.reserve(cs.size());
    for (const auto& c : cs) es.push_back(make_element(g, c[0], c[1]));
    return FiniteSubset(g, std::move(es));
}

// The box {0..n1-1} (resp. {0..n1-1} x {0..n2-1}); always contains e.
inline FiniteSubset folner_box(const Group& g, const std::vector<std::int64_t>& sides) {
    if (static_cast<int>(sides.size()) != g.rank())
        throw std::invalid_argument("folner_box: side count does not match group rank");
    for (auto s : sides)
        if (s <= 0) throw std::invalid_argument("folner_box: sides must be positive");
    if (g.kind == GroupKind::Zmod && sides[0] > g.modulus)
        throw std::invalid_argument("folner_box: side exceeds modulus");
    std::vector<GroupElement> es;
    if (g.rank() == 1) {
        for (std::int64_t x = 0; x < sides[0]; ++x) es.push_back(make_element(g, x));
    } else {
        for (std::int64_t x = 0; x < sides[0]; ++x)
            for (std::int64_t y = 0; y < sides[1]; ++y) es.push_back(make_element(g, x, y));
    }
    return FiniteSubset(g, std::move(es));
}

inline FiniteSubset set_union(const FiniteSubset& a, const FiniteSubset& b) {
    if (a.group != b.group) throw std::invalid_argument("set_union: mismatched groups");
    std::vector<GroupElement> es = a.elems;
    es.insert(es.end(), b.elems.begin(), b.elems.end());
    return FiniteSubset(a.group, std::move(es));
}

inline FiniteSubset inverse_set(const FiniteSubset& a) {
    std::vector<GroupElement> es;
    es.reserve(a.size());
    for (const auto& e : a.elems) es.push_back(invert(e));
    return FiniteSubset(a.group, std::move(es));
}

// KF = {k*f : k in K, f in F}
inline FiniteSubset product_set(const FiniteSubset& K, const FiniteSubset& F) {
    if (K.group != F.group) throw std::invalid_argument("product_set: mismatched groups");
    std::vector<GroupElement> es;
    es.reserve(K.size() * F.size());
    for (const auto& k : K.elems)
        for (const auto& f : F.elems) es.push_back(compose(k, f));
    return FiniteSubset(K.group, std::move(es));
}

// Exact invariance defects |KF \ F| / |F| and |KF ^ F| / |F|.
struct InvarianceReport {
    std::int64_t left_count = 0;       // |KF \ F|
    std::int64_t symmetric_count = 0;  // |KF delta F|
    std::int64_t denominator = 1;      // |F|

    double left_defect() const { return double(left_count) / double(denominator); }
    double symmetric_defect() const { return double(symmetric_count) / double(denominator); }
};

inline InvarianceReport invariance_defect(const FiniteSubset& K, const FiniteSubset& F) {
    if (K.group != F.group) throw std::invalid_argument("invariance_defect: mismatched groups");
    if (F.empty()) throw std::invalid_argument("invariance_defect: F must be nonempty");
    FiniteSubset KF = product_set(K, F);
    std::int64_t in_kf_not_f = 0;
    for (const auto& e : KF.elems)
        if (!F.contains(e)) ++in_kf_not_f;
    std::int64_t in_f_not_kf = 0;
    for (const auto& e : F.elems)
        if (!KF.contains(e)) ++in_f_not_kf;
    return {in_kf_not_f, in_kf_not_f + in_f_not_kf, static_cast<std::int64_t>(F.size())};
}

}  // namespace sofent
