#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "sofent/experiments.hpp"
#include "sofent/io.hpp"

using namespace sofent;

namespace {

std::string temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "sofent_io_test";
    std::filesystem::create_directories(dir);
    return dir.string();
}

Quasitiling sample_tiling(const SoficApproximation& sig) {
    std::vector<FiniteSubset> shapes{folner_box(group_z(), {10}), folner_box(group_z(), {25})};
    FiniteSubset big = set_union(shapes.back(), inverse_set(shapes.back()));
    auto B = good_set(sig, big);
    auto params = rokhlin_parameters_for(0.1, 0.1, 9.0 / 25.0, 1e-9, 2);
    IndexSet V(sig.d);
    for (std::uint64_t a = 0; a < 90; ++a) V.set(a);
    auto qt = rokhlin_quasitiling(sig, B, V, shapes, 0.1, 0.1, params);
    return disjointify(qt, sig);
}

}  // namespace

TEST_CASE("sofic approximations round-trip through JSON") {
    auto sig = from_folner(group_z2(), folner_box(group_z2(), {5, 5}),
                           default_generators(group_z2()), 42);
    json j = sofic_to_json(sig);
    auto back = sofic_from_json(j);
    CHECK(back.d == sig.d);
    CHECK(back.support == sig.support);
    CHECK(back.perms == sig.perms);
    CHECK(back.inv_perms == sig.inv_perms);
    CHECK(sofic_to_json(back).dump() == j.dump());
}

TEST_CASE("sofic approximations round-trip through the binary format bit-exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto sig = from_folner(group_z(), folner_box(group_z(), {40}),
                               default_generators(group_z()), seed);
        std::string bytes = sofic_to_binary(sig);
        CHECK(bytes.compare(0, 4, "SOFA") == 0);
        auto back = sofic_from_binary(bytes);
        CHECK(sofic_to_binary(back) == bytes);
        CHECK(back.perms == sig.perms);
        CHECK(back.label == sig.label);
    }
    auto torus = torus_approximation(6, 9);
    CHECK(sofic_from_binary(sofic_to_binary(torus)).perms == torus.perms);
}

TEST_CASE("corrupt binary payloads are rejected") {
    auto sig = cyclic_approximation(12);
    std::string bytes = sofic_to_binary(sig);
    CHECK_THROWS_AS(sofic_from_binary(bytes.substr(0, bytes.size() - 3)), std::invalid_argument);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(sofic_from_binary(wrong_magic), std::invalid_argument);
    // clobbering a permutation entry with an out-of-range value must fail validation
    std::string bad = bytes;
    bad[bad.size() - 1] = char(0xff);
    bad[bad.size() - 2] = char(0xff);
    CHECK_THROWS_AS(sofic_from_binary(bad), std::invalid_argument);
}

TEST_CASE("measure and subshift configs parse back") {
    auto m = bernoulli_measure({0.25, 0.75});
    auto m2 = measure_from_json(measure_to_json(m));
    CHECK(m2.weights == m.weights);

    auto gm = golden_mean_shift();
    auto gm2 = subshift_from_json(group_z(), subshift_to_json(gm));
    CHECK(gm2.transitions_h == gm.transitions_h);
    CHECK(subshift_from_json(group_z(), json{{"alphabet", 3}, {"kind", "full"}}).alphabet == 3);
}

TEST_CASE("microstate space specs round-trip with their model") {
    auto sig = cyclic_approximation(12);
    auto spec = make_space_spec(sig, golden_mean_shift(), make_subset(group_z(), {{1, 0}}),
                                0.0, 0.0);
    json j = space_spec_to_json(spec);
    auto owned = space_spec_from_json(j);
    CHECK(enumerate_microstates(owned->spec) == enumerate_microstates(spec));
    CHECK(space_spec_to_json(owned->spec).dump() == j.dump());

    auto mspec = make_space_spec(sig, full_shift(group_z(), 2), spec.window, 0.1, 0.0,
                                 bernoulli_measure({0.25, 0.75}), {}, 0.1);
    auto owned2 = space_spec_from_json(space_spec_to_json(mspec));
    CHECK(enumerate_microstates(owned2->spec) == enumerate_microstates(mspec));
}

TEST_CASE("member streams and separation reports serialize") {
    auto sig = cyclic_approximation(4);
    auto spec = make_space_spec(sig, golden_mean_shift(), make_subset(group_z(), {{1, 0}}),
                                0.0, 0.0);
    std::vector<std::string> lines;
    std::vector<Microstate> space;
    enumerate_microstates(spec, [&](const Microstate& m) {
        lines.push_back(microstate_line(m, 2));
        space.push_back(m);
    });
    REQUIRE(lines.size() == 7);
    CHECK(lines.front() == "0000");
    for (const auto& line : lines) CHECK(line.find("11") == std::string::npos);

    CHECK(microstate_line({3, 11, 0}, 12) == "3,11,0");

    auto rep = count_separated(space, 4, 0.5, MetricMode::RhoInf, CountStrategy::Exact);
    json j = separation_report_to_json(rep);
    CHECK(j.at("exact_count").get<std::uint64_t>() == 7);
    CHECK(j.at("metric").get<std::string>() == "rho_inf");
    CHECK(j.at("strategy").get<std::string>() == "exact");
}

TEST_CASE("quasitiling artifacts verify after a round trip") {
    FiniteSubset base = set_union(folner_box(group_z(), {25}),
                                  inverse_set(folner_box(group_z(), {25})));
    auto sig = cyclic_approximation(100, base);
    auto qt = sample_tiling(sig);
    std::string dir = temp_dir();
    std::string path = dir + "/tiling.json";
    write_file(path, quasitiling_to_json(qt, sig).dump(2) + "\n");

    std::vector<std::string> msgs;
    CHECK(verify_artifact(path, msgs) == 0);

    auto [qt2, sig2] = quasitiling_from_json(json::parse(read_file(path)));
    CHECK(qt2.coverage == qt.coverage);
    CHECK(qt2.centers == qt.centers);
    CHECK(qt2.cores == qt.cores);
}

TEST_CASE("verification catches tampered artifacts") {
    FiniteSubset base = set_union(folner_box(group_z(), {25}),
                                  inverse_set(folner_box(group_z(), {25})));
    auto sig = cyclic_approximation(100, base);
    auto qt = sample_tiling(sig);
    std::string dir = temp_dir();

    SECTION("hat shrunk") {
        json j = quasitiling_to_json(qt, sig);
        for (auto& stage : j["hats"])
            for (auto& hat : stage) {
                if (hat.size() > 1) {
                    hat.erase(hat.begin(), hat.begin() + hat.size() / 2);
                    goto done;
                }
            }
    done:
        std::string path = dir + "/tampered1.json";
        write_file(path, j.dump());
        std::vector<std::string> msgs;
        CHECK(verify_artifact(path, msgs) == 1);
        REQUIRE(!msgs.empty());
    }
    SECTION("coverage inflated") {
        json j = quasitiling_to_json(qt, sig);
        j["coverage"] = 0.999;
        std::string path = dir + "/tampered2.json";
        write_file(path, j.dump());
        std::vector<std::string> msgs;
        CHECK(verify_artifact(path, msgs) == 1);
    }
    SECTION("not json") {
        std::string path = dir + "/garbage.json";
        write_file(path, "{not json");
        std::vector<std::string> msgs;
        CHECK(verify_artifact(path, msgs) == 2);
    }
    SECTION("missing file") {
        std::vector<std::string> msgs;
        CHECK(verify_artifact(dir + "/nope.json", msgs) == 2);
    }
}
