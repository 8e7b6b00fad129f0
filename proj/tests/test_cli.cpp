#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "contea/cli.hpp"
#include "contea/config.hpp"
#include "contea/error.hpp"

using namespace contea;
namespace fs = std::filesystem;

TEST_CASE("--help exits 0, unknown subcommand exits 2") {
    CHECK(dispatch({"--help"}) == 0);
    CHECK(dispatch({"bogus"}) == 2);
    CHECK(dispatch({}) == 2);
}

TEST_CASE("unknown flags are rejected with a usage error") {
    CHECK(dispatch({"run", "--frobnicate", "x"}) == 2);
    CHECK(dispatch({"run", "stray-token"}) == 2);
}

TEST_CASE("missing required flags exit 2, runtime failures exit 1") {
    CHECK(dispatch({"gen"}) == 2);                       // no --out
    CHECK(dispatch({"run"}) == 2);                       // no --snapshots
    CHECK(dispatch({"eval", "--pred", "x"}) == 2);       // no --gold
    CHECK(dispatch({"run", "--snapshots", "/nonexistent_dir_12345"}) == 1);
}

TEST_CASE("config overrides are type-checked") {
    RunConfig config;
    apply_override(config, "gamma=2.5");
    CHECK(config.gamma == doctest::Approx(2.5));
    apply_override(config, "mode=retrain");
    CHECK(config.mode == Mode::retrain);
    CHECK_THROWS_WITH_AS(apply_override(config, "gamma=abc"), doctest::Contains("config error"),
                         Error);
    CHECK_THROWS_WITH_AS(apply_override(config, "no_such_key=1"),
                         doctest::Contains("unknown key"), Error);
    CHECK_THROWS_WITH_AS(apply_override(config, "epochs=ten"), doctest::Contains("config error"),
                         Error);
}

TEST_CASE("config files merge with later overrides winning") {
    fs::path path = fs::temp_directory_path() / "contea_cli_config.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "dim=32\n";
        out << "gamma=9 # trailing comment\n";
        out << "\n";
        out << "mode=no_ta\n";
    }
    RunConfig config = load_config_file(path);
    CHECK(config.dim == 32);
    CHECK(config.gamma == doctest::Approx(9.0));
    CHECK(config.mode == Mode::no_ta);
    apply_override(config, "dim=64");
    CHECK(config.dim == 64);
    fs::remove(path);

    CHECK_THROWS_WITH_AS(load_config_file(fs::temp_directory_path() / "no_such_config.txt"),
                         doctest::Contains("config error"), Error);
}

TEST_CASE("gen then eval round-trip through the CLI surface") {
    fs::path root = fs::temp_directory_path() / "contea_cli_gen";
    fs::remove_all(root);
    CHECK(dispatch({"gen", "--out", root.string(), "--seed", "4", "n_entities=40",
                    "n_relations=4", "n_snapshots=2", "overlap_ratio=1.0",
                    "structural_noise=0.0"}) == 0);
    CHECK(fs::exists(root / "snapshots" / "t0" / "kg1_triples.tsv"));
    CHECK(fs::exists(root / "genspec.txt"));

    // evaluating the gold file against itself scores perfectly
    fs::path gold = root / "snapshots" / "t0" / "test_links.tsv";
    CHECK(dispatch({"eval", "--pred", gold.string(), "--gold", gold.string()}) == 0);
    fs::remove_all(root);
}

TEST_CASE("train subcommand writes metrics tagged with the mode") {
    fs::path root = fs::temp_directory_path() / "contea_cli_train";
    fs::path out = fs::temp_directory_path() / "contea_cli_train_out";
    fs::remove_all(root);
    fs::remove_all(out);
    REQUIRE(dispatch({"gen", "--out", root.string(), "--seed", "4", "n_entities=40",
                      "n_relations=4", "n_snapshots=2", "overlap_ratio=1.0",
                      "structural_noise=0.0"}) == 0);
    fs::path t0 = root / "snapshots" / "t0";
    CHECK(dispatch({"train", "--snapshots", t0.string(), "--out", out.string(), "--seed", "2",
                    "dim=8", "proxy_count=2", "epochs=6", "eval_every=3", "--mode", "retrain"}) ==
          0);
    std::ifstream in(out / "metrics.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.find(",retrain,") != std::string::npos);
    fs::remove_all(root);
    fs::remove_all(out);
}

TEST_CASE("export produces an alignment file consumable by eval") {
    fs::path root = fs::temp_directory_path() / "contea_cli_export";
    fs::path out = fs::temp_directory_path() / "contea_cli_export_out";
    fs::remove_all(root);
    fs::remove_all(out);
    REQUIRE(dispatch({"gen", "--out", root.string(), "--seed", "4", "n_entities=40",
                      "n_relations=4", "n_snapshots=2", "overlap_ratio=1.0",
                      "structural_noise=0.0"}) == 0);
    fs::path t0 = root / "snapshots" / "t0";
    REQUIRE(dispatch({"train", "--snapshots", t0.string(), "--out", out.string(), "--seed", "2",
                      "dim=8", "proxy_count=2", "epochs=6", "eval_every=3"}) == 0);

    fs::path exported = out / "exported.tsv";
    CHECK(dispatch({"export", "--checkpoint", (out / "t0" / "checkpoint.ceas").string(),
                    "--snapshots", t0.string(), "--out", exported.string(), "dim=8",
                    "proxy_count=2"}) == 0);
    REQUIRE(fs::exists(exported));
    CHECK(dispatch({"eval", "--pred", exported.string(),
                    "--gold", (t0 / "test_links.tsv").string()}) == 0);

    // the export equals the pipeline's own alignment dump
    std::ifstream a(exported), b(out / "t0" / "alignment.tsv");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove_all(root);
    fs::remove_all(out);
}
