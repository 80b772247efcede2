#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "sofent/experiments.hpp"

using namespace sofent;

namespace {

namespace fs = std::filesystem;

std::string workdir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "sofent_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(SOFENT_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

int run_cli_capture(const std::string& args, const std::string& outfile) {
    std::string cmd = std::string(SOFENT_BIN) + " " + args + " >" + outfile + " 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

json entropy_top_config() {
    json cfg;
    cfg["experiment"] = "entropy-top";
    cfg["group"] = "Z";
    cfg["subshift"] = {{"alphabet", 2},
                       {"kind", "sft"},
                       {"transitions", {{1, 1}, {1, 0}}}};
    cfg["sofic"] = {{"kind", "cyclic"}, {"sizes", {8, 16, 32, 64}}};
    cfg["window"] = {1};
    cfg["eps"] = 0.5;
    cfg["metric"] = "rho_inf";
    cfg["seed"] = 1;
    cfg["tolerance"] = {{"gap", 1e-3}, {"scope", "last"}};
    return cfg;
}

json tile_config() {
    json cfg;
    cfg["experiment"] = "tile";
    cfg["group"] = "Z";
    cfg["sofic"] = {{"kind", "cyclic"}, {"sizes", {1000}}};
    cfg["shapes"] = json::array({json{{"box", {10}}}, json{{"box", {25}}}});
    cfg["tau"] = 0.1;
    cfg["eta"] = 0.1;
    cfg["seed"] = 1;
    return cfg;
}

}  // namespace

TEST_CASE("entropy-top runs green and deterministically") {
    std::string dir = workdir("top");
    write_file(dir + "/cfg.json", entropy_top_config().dump());
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir + "/a") == 0);
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir +
                    "/b --threads 4") == 0);
    CHECK(read_file(dir + "/a/results.csv") == read_file(dir + "/b/results.csv"));
    std::string csv = read_file(dir + "/a/results.csv");
    CHECK(csv.rfind("experiment,d,window,eps,delta_equiv,delta_adm,delta_meas,metric,count,"
                    "strategy,entropy_per_site,oracle,gap,pass\n", 0) == 0);
    CHECK(csv.find("entropy-top,64") != std::string::npos);

    json summary = json::parse(read_file(dir + "/a/summary.json"));
    CHECK(summary.at("pass").get<bool>());
    std::vector<std::string> msgs;
    CHECK(verify_artifact(dir + "/a/series.json", msgs) == 0);
}

TEST_CASE("tile emits a verifiable artifact and a summary line") {
    std::string dir = workdir("tile");
    write_file(dir + "/cfg.json", tile_config().dump());
    REQUIRE(run_cli_capture("tile --config " + dir + "/cfg.json --out " + dir + "/out",
                            dir + "/stdout.txt") == 0);
    std::string out = read_file(dir + "/stdout.txt");
    CHECK(out.find("coverage=") != std::string::npos);
    CHECK(out.find("target=0.80 PASS") != std::string::npos);
    std::string artifact = dir + "/out/quasitiling_d1000.json";
    REQUIRE(fs::exists(artifact));
    CHECK(run_cli("verify " + artifact) == 0);

    // a tampered center count must fail re-verification
    json j = json::parse(read_file(artifact));
    j["coverage"] = 0.5;
    write_file(dir + "/out/tampered.json", j.dump());
    CHECK(run_cli("verify " + dir + "/out/tampered.json") == 1);

    write_file(dir + "/out/corrupt.json", "]{[");
    CHECK(run_cli("verify " + dir + "/out/corrupt.json") == 2);
}

TEST_CASE("invalid configs exit with the schema code") {
    std::string dir = workdir("bad");
    write_file(dir + "/missing.json", json{{"experiment", "entropy-top"}}.dump());
    CHECK(run_cli("entropy-top --config " + dir + "/missing.json") == 2);

    write_file(dir + "/unknown.json", json{{"experiment", "explode"}, {"group", "Z"}}.dump());
    CHECK(run_cli("entropy-top --config " + dir + "/unknown.json") == 2);

    // aep without a seed is a schema violation (randomized path)
    json aep;
    aep["experiment"] = "aep";
    aep["group"] = "Z";
    aep["measure"] = {{"bernoulli", {0.25, 0.75}}};
    aep["windows"] = {10, 100};
    write_file(dir + "/aep.json", aep.dump());
    CHECK(run_cli("aep --config " + dir + "/aep.json") == 2);

    CHECK(run_cli("entropy-measure --config " + dir + "/nonexistent.json") == 2);
}

TEST_CASE("budget overruns exit with the budget code") {
    std::string dir = workdir("budget");
    json cfg = entropy_top_config();
    cfg["sofic"]["sizes"] = {30};
    cfg["strategy"] = "enumerate";
    cfg["tolerance"] = {{"gap", 0.1}, {"scope", "last"}};
    write_file(dir + "/cfg.json", cfg.dump());
    std::string cmd = std::string("SOFIC_NODE_BUDGET=100 ") + SOFENT_BIN +
                      " entropy-top --config " + dir + "/cfg.json --out " + dir +
                      " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 3);
}

TEST_CASE("entropy-measure runs against the measure oracle") {
    std::string dir = workdir("measure");
    json cfg;
    cfg["experiment"] = "entropy-measure";
    cfg["group"] = "Z";
    cfg["subshift"] = {{"alphabet", 2}, {"kind", "full"}};
    cfg["measure"] = {{"bernoulli", {0.25, 0.75}}};
    cfg["sofic"] = {{"kind", "cyclic"}, {"sizes", {200, 400, 800}}};
    cfg["window"] = {1};
    cfg["delta_meas"] = 0.02;
    cfg["seed"] = 1;
    cfg["tolerance"] = {{"gap", 0.05}, {"scope", "last"}};
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("entropy-measure --config " + dir + "/cfg.json --out " + dir + "/out") == 0);
    std::vector<std::string> msgs;
    CHECK(verify_artifact(dir + "/out/series.json", msgs) == 0);

    // every row's gap column is recomputable from its own fields
    json series = json::parse(read_file(dir + "/out/series.json"));
    for (const auto& row : series.at("rows")) {
        double recomputed = std::abs(row.at("entropy_per_site").get<double>() -
                                     row.at("oracle").get<double>());
        CHECK_THAT(row.at("gap").get<double>(), Catch::Matchers::WithinAbs(recomputed, 1e-15));
    }
}

TEST_CASE("full-shift entropy runs with zero gaps") {
    std::string dir = workdir("fullshift");
    json cfg = entropy_top_config();
    cfg["subshift"] = {{"alphabet", 2}, {"kind", "full"}};
    cfg["tolerance"] = {{"gap", 0.0}, {"scope", "all"}};
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir + "/out") == 0);
    json summary = json::parse(read_file(dir + "/out/summary.json"));
    for (const auto& chk : summary.at("checks")) CHECK(chk.at("gap").get<double>() == 0.0);
}

TEST_CASE("series artifacts with tampered counts fail the recount") {
    std::string dir = workdir("recount");
    write_file(dir + "/cfg.json", entropy_top_config().dump());
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir + "/out") == 0);
    json series = json::parse(read_file(dir + "/out/series.json"));
    // the smallest model size is recounted from scratch by the verifier
    series["rows"][0]["count"] = series["rows"][0]["count"].get<std::uint64_t>() + 1;
    series["rows"][0]["log_count"] = 99.0;
    write_file(dir + "/out/tampered.json", series.dump());
    CHECK(run_cli("verify " + dir + "/out/tampered.json") == 1);
}

TEST_CASE("binary sofic artifacts verify through the CLI") {
    std::string dir = workdir("binary");
    auto sig = from_folner(group_z(), folner_box(group_z(), {30}),
                           default_generators(group_z()), 4);
    write_file(dir + "/model.sofa", sofic_to_binary(sig));
    CHECK(run_cli("verify " + dir + "/model.sofa") == 0);
    std::string bytes = sofic_to_binary(sig);
    bytes[10] = char(0x7f);
    write_file(dir + "/model_bad.sofa", bytes);
    CHECK(run_cli("verify " + dir + "/model_bad.sofa") != 0);
}

TEST_CASE("shipped presets run green") {
    std::string presets = std::string(SOFENT_PRESETS);
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(presets)) {
        if (entry.path().extension() != ".json") continue;
        std::string name = entry.path().stem().string();
        std::string sub = json::parse(read_file(entry.path().string())).at("experiment");
        std::string dir = workdir("preset_" + name);
        INFO(name);
        CHECK(run_cli(sub + " --config " + entry.path().string() + " --out " + dir) == 0);
        ++count;
    }
    CHECK(count >= 7);
}

TEST_CASE("a coupled delta expands to the two tolerances") {
    std::string dir = workdir("coupled");
    json cfg = entropy_top_config();
    cfg.erase("tolerance");
    cfg["sofic"]["sizes"] = {8};  // positive delta_adm forces the enumerate path
    cfg["delta"] = 0.5;
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir + "/out") == 0);
    std::string csv = read_file(dir + "/out/results.csv");
    CHECK(csv.find(",0.5,0.25,") != std::string::npos);  // delta_equiv, delta_adm columns
}

TEST_CASE("Z2 subshift series run without an oracle") {
    std::string dir = workdir("z2sft");
    json cfg;
    cfg["experiment"] = "entropy-top";
    cfg["group"] = "Z2";
    // hard-square constraints on both axes: no exact entropy value exists
    cfg["subshift"] = {{"alphabet", 2}, {"kind", "sft"}, {"transitions", {{1, 1}, {1, 0}}}};
    cfg["sofic"] = {{"kind", "torus"}, {"sizes", {{2, 2}, {3, 3}}}};
    cfg["window"] = json::array({json::array({1, 0})});
    cfg["seed"] = 1;
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("entropy-top --config " + dir + "/cfg.json --out " + dir + "/out") == 0);
    json summary = json::parse(read_file(dir + "/out/summary.json"));
    for (const auto& chk : summary.at("checks")) {
        CHECK(!chk.contains("oracle"));
        CHECK(chk.at("pass").get<bool>());
    }
}

TEST_CASE("defects experiment reports decreasing defect trends") {
    std::string dir = workdir("defects");
    json cfg;
    cfg["experiment"] = "defects";
    cfg["group"] = "Z2";
    cfg["sofic"] = {{"kind", "folner"}, {"sizes", {8, 16, 32}}, {"completion", "seeded"}};
    cfg["seed"] = 2027;
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("defects --config " + dir + "/cfg.json --out " + dir + "/out --threads 2") ==
            0);
    json summary = json::parse(read_file(dir + "/out/summary.json"));
    CHECK(summary.at("pass").get<bool>());
}

TEST_CASE("aep experiment reports decreasing information spread") {
    std::string dir = workdir("aep");
    json cfg;
    cfg["experiment"] = "aep";
    cfg["group"] = "Z";
    cfg["measure"] = {{"bernoulli", {0.25, 0.75}}};
    cfg["windows"] = {10, 100, 1000};
    cfg["samples"] = 2000;
    cfg["seed"] = 42;
    cfg["tolerance"] = {{"l1_final", 0.02}};
    write_file(dir + "/cfg.json", cfg.dump());
    REQUIRE(run_cli("aep --config " + dir + "/cfg.json --out " + dir + "/out --threads 3") == 0);
    json summary = json::parse(read_file(dir + "/out/summary.json"));
    CHECK(summary.at("pass").get<bool>());
    auto checks = summary.at("checks");
    REQUIRE(checks.size() == 3);
    CHECK(checks[2].at("value").get<double>() < 0.02);
}
