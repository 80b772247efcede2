#include <catch2/catch_amalgamated.hpp>

#include "sofent/quasitiling.hpp"
#include "sofent/rng.hpp"

using namespace sofent;

namespace {

SetFamily family_of(std::size_t d, const std::vector<std::vector<std::uint32_t>>& sets) {
    SetFamily f;
    f.ground_size = d;
    for (const auto& s : sets) f.push(IndexSet::from_indices(d, s));
    return f;
}

// seeded random family of nonempty subsets of {0..d-1}
SetFamily random_family(std::uint64_t seed, std::size_t& d_out) {
    CounterRng rng{seed, 0};
    std::uint64_t ctr = 0;
    std::size_t d = 16 + rng.below(ctr++, 497);  // up to 512
    std::size_t m = 2 + rng.below(ctr++, 39);
    SetFamily f;
    f.ground_size = d;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t size = 1 + rng.below(ctr++, d / 2 + 1);
        IndexSet s(d);
        while (s.count() < size) s.set(rng.below(ctr++, d));
        f.push(std::move(s));
    }
    d_out = d;
    return f;
}

// independent validity check of a greedy selection
void check_selection(const SetFamily& f, const DisjointSelection& sel, double eps) {
    IndexSet seen(f.ground_size);
    IndexSet covered(f.ground_size);
    for (std::size_t i = 0; i < sel.chosen.size(); ++i) {
        const IndexSet& a = f.sets[sel.chosen[i]];
        const auto& hat = sel.witness.hats[i];
        REQUIRE(double(hat.size()) + 1e-9 >= (1.0 - eps) * double(a.count()));
        for (auto p : hat) {
            REQUIRE(a.test(p));
            REQUIRE(!seen.test(p));  // hats pairwise disjoint
            seen.set(p);
        }
        covered |= a;
    }
    CHECK(double(covered.count()) / double(f.ground_size) + 1e-9 >= eps * (1.0 - sel.delta));
    // maximality: every rejected set overlaps the hats in more than eps of itself
    std::vector<bool> chosen(f.sets.size(), false);
    for (auto i : sel.chosen) chosen[i] = true;
    for (std::size_t i = 0; i < f.sets.size(); ++i) {
        if (chosen[i]) continue;
        std::size_t fresh = 0;
        f.sets[i].for_each([&](std::size_t p) { fresh += !seen.test(p); });
        CHECK(double(fresh) < (1.0 - eps) * double(f.sets[i].count()) + 1e-9);
    }
}

}  // namespace

TEST_CASE("even covering certificates") {
    auto part = family_of(4, {{0, 1}, {2, 3}});
    auto cert = even_covering_check(part, 0.0);
    CHECK(cert.multiplicity == 1);
    CHECK(cert.total_mass == 4);
    CHECK(cert.valid);
    CHECK(cert.delta_min == 0.0);

    auto stacked = family_of(4, {{0}, {0}, {0}});
    auto cert2 = even_covering_check(stacked, 0.5);
    CHECK(cert2.multiplicity == 3);
    CHECK(cert2.total_mass == 3);
    CHECK_FALSE(cert2.valid);

    SetFamily empty_family;
    empty_family.ground_size = 4;
    CHECK_THROWS_AS(even_covering_check(empty_family, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(maximal_eps_disjoint(family_of(4, {{0}}), 1.0), std::invalid_argument);
}

TEST_CASE("tile families at good centers form even coverings with multiplicity |F|") {
    auto sig = cyclic_approximation(10);
    FiniteSubset F = folner_box(group_z(), {3});
    // eight centers stand in for B n V with tau + eta'' = 0.2
    SetFamily family;
    family.ground_size = 10;
    for (std::uint32_t c = 0; c < 8; ++c) {
        IndexSet tile(10);
        for (const auto& s : F.elems) tile.set(sig.perm(s)[c]);
        family.push(std::move(tile));
    }
    auto cert = even_covering_check(family, 0.2);
    CHECK(cert.valid);
    CHECK(cert.multiplicity <= F.size());
    CHECK(cert.total_mass == F.size() * 8);
}

TEST_CASE("greedy disjoint subcollection hand trace") {
    // A1={0,1}, A2={1,2}, A3={2,3}: all admitted with hats {0,1},{2},{3}
    auto f = family_of(4, {{0, 1}, {1, 2}, {2, 3}});
    auto sel = maximal_eps_disjoint(f, 0.5);
    REQUIRE(sel.chosen == std::vector<std::size_t>{0, 1, 2});
    CHECK(sel.witness.hats[0] == std::vector<std::uint32_t>{0, 1});
    CHECK(sel.witness.hats[1] == std::vector<std::uint32_t>{2});
    CHECK(sel.witness.hats[2] == std::vector<std::uint32_t>{3});
    CHECK(sel.coverage == 1.0);
}

TEST_CASE("pairwise disjoint families are admitted whole") {
    auto f = family_of(10, {{0, 1, 2}, {4, 5}, {7, 8, 9}});
    for (double eps : {0.1, 0.5, 0.9}) {
        auto sel = maximal_eps_disjoint(f, eps);
        CHECK(sel.chosen.size() == 3);
        CHECK(sel.coverage == 0.8);
    }
}

TEST_CASE("greedy selection properties over random even coverings") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        std::size_t d = 0;
        SetFamily f = random_family(seed, d);
        double eps = 0.1 + 0.8 * CounterRng{seed, 9}.uniform(0);
        auto sel = maximal_eps_disjoint(f, eps);
        check_selection(f, sel, eps);
    }
}

TEST_CASE("fractional intersection bound over random coverings") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        std::size_t d = 0;
        SetFamily f = random_family(seed, d);
        auto cert = even_covering_check(f, 0.0);
        CounterRng rng{seed, 5};
        std::uint64_t ctr = 0;
        for (int trial = 0; trial < 20; ++trial) {
            IndexSet b(d);
            std::size_t size = 1 + rng.below(ctr++, d);
            while (b.count() < size) b.set(rng.below(ctr++, d));
            // min_i |A_i n B| * total <= |B| * M * |A_i| for some i (integer exact)
            bool witness = false;
            for (const auto& a : f.sets) {
                std::uint64_t inter = a.intersection_count(b);
                if (inter * cert.total_mass <= b.count() * cert.multiplicity * a.count()) {
                    witness = true;
                    break;
                }
            }
            CHECK(witness);
        }
    }
}

TEST_CASE("rokhlin parameter selection") {
    auto p = rokhlin_parameters(0.5, 0.5);
    CHECK(p.t.front() == 0.5 * (1.0 - 0.5 - p.eta_double_prime));
    CHECK(p.t.front() > 0.0);
    CHECK(p.t.back() > 1.0 - 0.5 - 0.5);
    CHECK(1.0 - p.tau - 2.0 * p.eta_double_prime > 0.0);
    CHECK(p.eta * (1.0 + p.eta_prime / (1.0 - p.eta)) < 1.0);

    auto q = rokhlin_parameters(0.1, 0.1);
    CHECK(q.t.back() > 0.8);
    for (std::size_t i = 1; i < q.t.size(); ++i) CHECK(q.t[i] > q.t[i - 1]);
    double c = 1.0 + q.eta_prime / (1.0 - q.eta);
    CHECK(1.0 - q.tau - q.eta_double_prime - c * q.t.back() < q.eta_double_prime);

    // t_1 = eta (1 - eta'') < 0.75 forces a second stage
    auto r = rokhlin_parameters(0.0, 0.25);
    CHECK(r.ell >= 2);

    CHECK_THROWS_AS(rokhlin_parameters(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(rokhlin_parameters(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("singleton tiles cover everything") {
    auto sig = cyclic_approximation(24);
    FiniteSubset e_only(group_z(), {identity(group_z())});
    auto B = good_set(sig, e_only);
    auto params = rokhlin_parameters_for(0.0, 0.3, 1e-9, 1e-9, 1);
    auto qt = rokhlin_quasitiling(sig, B, IndexSet::full(24), {e_only}, 0.0, 0.3, params);
    CHECK(qt.centers[0].size() == 24);
    CHECK(qt.coverage == 1.0);
    auto rep = verify_quasitiling(qt, sig, 0.0, 0.3);
    CHECK(rep.all_ok());
}

namespace {

Quasitiling cyclic_interval_tiling(std::uint64_t d, const SoficApproximation& sig, double tau,
                                   double eta, double v_fraction) {
    std::vector<FiniteSubset> shapes{folner_box(group_z(), {10}), folner_box(group_z(), {25})};
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    auto B = good_set(sig, big);
    // eta' forced by the interval shapes: |(F_1^-1 F_2) \ F_2| = 9 <= eta' * 25
    auto params = rokhlin_parameters_for(tau, eta, 9.0 / 25.0, 1e-9, 2);
    IndexSet V(d);
    for (std::uint64_t a = 0; a < std::uint64_t(v_fraction * double(d) + 0.5); ++a) V.set(a);
    return rokhlin_quasitiling(sig, B, V, shapes, tau, eta, params);
}

}  // namespace

TEST_CASE("interval quasitiling of a cyclic model") {
    FiniteSubset base = set_union(folner_box(group_z(), {25}), inverse_set(folner_box(group_z(), {25})));
    auto sig = cyclic_approximation(100, base);
    auto qt = cyclic_interval_tiling(100, sig, 0.1, 0.1, 0.9);
    CHECK(qt.coverage >= 0.8);
    auto rep = verify_quasitiling(qt, sig, 0.1, 0.1);
    CHECK(rep.all_ok());
    CHECK(rep.failures.empty());
}

TEST_CASE("box quasitiling of a torus model") {
    FiniteSubset box8 = folner_box(group_z2(), {8, 8});
    auto sig = torus_approximation(20, 20, set_union(box8, inverse_set(box8)));
    std::vector<FiniteSubset> shapes{folner_box(group_z2(), {4, 4}), folner_box(group_z2(), {8, 8})};
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    auto B = good_set(sig, big);
    FiniteSubset prod = product_set(inverse_set(shapes[0]), shapes[1]);
    std::size_t outside = 0;
    for (const auto& e : prod.elems)
        if (!shapes[1].contains(e)) ++outside;
    auto params =
        rokhlin_parameters_for(0.0, 0.2, double(outside) / double(shapes[1].size()), 1e-9, 2);
    auto qt = rokhlin_quasitiling(sig, B, IndexSet::full(400), shapes, 0.0, 0.2, params);
    CHECK(qt.coverage >= 0.8);
    auto rep = verify_quasitiling(qt, sig, 0.0, 0.2);
    CHECK(rep.all_ok());
}

TEST_CASE("disjointify handles wrapped torus tiles") {
    FiniteSubset box8 = folner_box(group_z2(), {8, 8});
    auto sig = torus_approximation(20, 20, set_union(box8, inverse_set(box8)));
    std::vector<FiniteSubset> shapes{folner_box(group_z2(), {4, 4}), folner_box(group_z2(), {8, 8})};
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    auto B = good_set(sig, big);
    FiniteSubset prod = product_set(inverse_set(shapes[0]), shapes[1]);
    std::size_t outside = 0;
    for (const auto& e : prod.elems)
        if (!shapes[1].contains(e)) ++outside;
    auto params =
        rokhlin_parameters_for(0.0, 0.2, double(outside) / double(shapes[1].size()), 1e-9, 2);
    auto qt = rokhlin_quasitiling(sig, B, IndexSet::full(400), shapes, 0.0, 0.2, params);
    auto out = disjointify(qt, sig);
    // every core must keep the full witness hat, wraps included
    for (std::size_t k = 0; k < out.shapes.size(); ++k)
        for (std::size_t ci = 0; ci < out.centers[k].size(); ++ci)
            CHECK(out.cores[k][ci].size() == out.hats[k][ci].size());
    auto rep = verify_quasitiling(out, sig, 0.0, 0.2);
    CHECK(rep.all_ok());
}

TEST_CASE("hypothesis violations are reported by name") {
    FiniteSubset base50 = set_union(folner_box(group_z(), {25}), inverse_set(folner_box(group_z(), {25})));
    auto sig = cyclic_approximation(50, base50);
    std::vector<FiniteSubset> shapes{folner_box(group_z(), {10}), folner_box(group_z(), {25})};
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    auto B = good_set(sig, big);
    auto tight = rokhlin_parameters_for(0.1, 0.1, 1e-6, 0.5, 2);
    CHECK_THROWS_WITH(
        rokhlin_quasitiling(sig, B, IndexSet::full(50), shapes, 0.1, 0.1, tight),
        Catch::Matchers::ContainsSubstring("eta'"));
    auto params = rokhlin_parameters_for(0.1, 0.1, 0.36, 1e-9, 2);
    IndexSet small_v(50);
    small_v.set(0);
    CHECK_THROWS_WITH(rokhlin_quasitiling(sig, B, small_v, shapes, 0.1, 0.1, params),
                      Catch::Matchers::ContainsSubstring("|V|"));
}

TEST_CASE("disjointify reproduces witness hats as cores") {
    // tiles {1,2} and {2,3} on a 4-cycle with hats {1,2} and {3}
    auto sig = cyclic_approximation(4);
    Quasitiling qt;
    qt.group = group_z();
    qt.d = 4;
    qt.tau = 0.0;
    qt.eta = 0.5;
    qt.shapes = {folner_box(group_z(), {2})};
    qt.centers = {{1, 2}};
    qt.hats = {{{1, 2}, {3}}};
    qt.coverage = 0.75;
    auto out = disjointify(qt, sig);
    REQUIRE(out.has_cores());
    CHECK(out.cores[0][0] == std::vector<std::uint32_t>{0, 1});
    CHECK(out.cores[0][1] == std::vector<std::uint32_t>{1});
}

TEST_CASE("disjointify on a full tiling keeps whole shapes") {
    FiniteSubset base30 = set_union(folner_box(group_z(), {5}), inverse_set(folner_box(group_z(), {5})));
    auto sig = cyclic_approximation(30, base30);
    FiniteSubset shape = folner_box(group_z(), {5});
    FiniteSubset big = set_union(shape, inverse_set(shape));
    auto B = good_set(sig, big);
    auto params = rokhlin_parameters_for(0.0, 0.2, 1e-9, 1e-9, 1);
    auto qt = rokhlin_quasitiling(sig, B, IndexSet::full(30), {shape}, 0.0, 0.2, params);
    auto out = disjointify(qt, sig);
    std::size_t total_core = 0;
    for (const auto& core : out.cores[0]) total_core += core.size();
    CHECK(double(total_core) >= (1.0 - 0.2) * double(qt.center_count() * 5));
    auto rep = verify_quasitiling(out, sig, 0.0, 0.2);
    CHECK(rep.all_ok());
}

TEST_CASE("verifier flags mutations") {
    FiniteSubset vbase = set_union(folner_box(group_z(), {25}), inverse_set(folner_box(group_z(), {25})));
    auto sig = cyclic_approximation(100, vbase);
    auto qt = cyclic_interval_tiling(100, sig, 0.1, 0.1, 0.9);
    REQUIRE(verify_quasitiling(qt, sig, 0.1, 0.1).all_ok());

    SECTION("hat shrunk below the witness bound") {
        Quasitiling bad = qt;
        for (std::size_t k = 0; k < bad.hats.size(); ++k)
            if (!bad.hats[k].empty()) {
                auto& hat = bad.hats[k][0];
                hat.resize(hat.size() / 2);
                break;
            }
        auto rep = verify_quasitiling(bad, sig, 0.1, 0.1);
        CHECK_FALSE(rep.witness_ok);
    }
    SECTION("centers moved onto each other break hat disjointness") {
        Quasitiling bad = qt;
        bool moved = false;
        for (std::size_t k = 0; k < bad.centers.size() && !moved; ++k)
            if (bad.centers[k].size() >= 2) {
                bad.centers[k][1] = bad.centers[k][0];
                bad.hats[k][1] = bad.hats[k][0];
                moved = true;
            }
        REQUIRE(moved);
        auto rep = verify_quasitiling(bad, sig, 0.1, 0.1);
        CHECK_FALSE(rep.witness_ok);
    }
    SECTION("bijectivity fails when the shape outruns the model") {
        auto tiny = cyclic_approximation(4, folner_box(group_z(), {5}));
        Quasitiling bad;
        bad.group = group_z();
        bad.d = 4;
        bad.tau = 0.0;
        bad.eta = 0.5;
        bad.shapes = {folner_box(group_z(), {5})};
        bad.centers = {{0}};
        bad.hats = {{{0, 1, 2, 3}}};
        bad.coverage = 1.0;
        auto rep = verify_quasitiling(bad, tiny, 0.0, 0.5);
        CHECK_FALSE(rep.bijectivity_ok);
    }
}
