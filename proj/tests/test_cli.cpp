#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "squeeze/core.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SQUEEZE_CLI_PATH;
const fs::path kDataDir = SQUEEZE_DATA_DIR;

int run(const std::string& args) {
    const int rc = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("squeeze_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("convert") == 2);
    CHECK(run("estimate") == 2);
    CHECK(run("fit") == 2);
    CHECK(run("synth --strain-max 1.5") == 2);
}

TEST_CASE("synth, convert and fit round-trip kv parameters") {
    const fs::path dir = fresh_dir("roundtrip");
    CHECK(run("--out-dir " + dir.string() +
              " synth --model kv --k 30000 --eta 20000 --rate 0.1 --samples 400 --name rt") == 0);
    CHECK(fs::exists(dir / "rt.csv"));
    CHECK(fs::exists(dir / "rt.manifest.json"));
    CHECK(run("--out-dir " + dir.string() + " convert " + (dir / "rt.manifest.json").string()) == 0);
    CHECK(fs::exists(dir / "rt.curve.csv"));
    CHECK(run("--out-dir " + dir.string() + " fit --model kv " + (dir / "rt.curve.csv").string()) == 0);

    const json fits = read_json(dir / "fits.json");
    REQUIRE(fits.at("fits").size() == 1);
    const json& f = fits.at("fits")[0];
    CHECK(f.at("ok").get<bool>());
    CHECK(std::abs(f.at("K_pa").get<double>() - 30000.0) / 30000.0 < 0.02);
    CHECK(std::abs(f.at("eta_pa_s").get<double>() - 20000.0) / 20000.0 < 0.05);
    CHECK(f.at("identifiable").get<bool>());
}

TEST_CASE("synth is deterministic; convert and fit are idempotent") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    const std::string args =
        " synth --model hc --k 20000 --eta 500 --n 1.5 --samples 300 --name d";
    CHECK(run("--seed 9 --out-dir " + a.string() + args) == 0);
    CHECK(run("--seed 9 --out-dir " + b.string() + args) == 0);
    CHECK(read_file(a / "d.csv") == read_file(b / "d.csv"));

    CHECK(run("--out-dir " + a.string() + " convert " + (a / "d.manifest.json").string()) == 0);
    CHECK(run("--out-dir " + b.string() + " convert " + (b / "d.manifest.json").string()) == 0);
    CHECK(read_file(a / "d.curve.csv") == read_file(b / "d.curve.csv"));

    CHECK(run("--out-dir " + a.string() + " fit --model hc " + (a / "d.curve.csv").string()) == 0);
    const std::string first = read_file(a / "fits.json");
    CHECK(run("--out-dir " + a.string() + " fit --model hc " + (a / "d.curve.csv").string()) == 0);
    CHECK(read_file(a / "fits.json") == first);
}

TEST_CASE("convert flags corrupt files and keeps the rest") {
    const fs::path dir = fresh_dir("partial");
    for (const char* name : {"a", "b"}) {
        CHECK(run("--out-dir " + dir.string() + " synth --model kv --k 20000 --eta 1000 --name " +
                  name) == 0);
    }
    // corrupt b's csv
    std::ofstream bad(dir / "b.csv");
    bad << "t_s,position_mm,effort\n0,50,zero\n";
    bad.close();
    const int rc = run("--out-dir " + dir.string() + " convert " +
                       (dir / "a.manifest.json").string() + " " +
                       (dir / "b.manifest.json").string());
    CHECK(rc == 1);
    CHECK(fs::exists(dir / "a.curve.csv"));
    CHECK_FALSE(fs::exists(dir / "b.curve.csv"));
}

TEST_CASE("estimate emits records and skips infeasible points") {
    const fs::path dir = fresh_dir("estimate");
    CHECK(run("--out-dir " + dir.string() +
              " synth --model kv --k 30000 --eta 20000 --strain-max 0.5 --samples 300 --name e") == 0);
    CHECK(run("--out-dir " + dir.string() + " convert " + (dir / "e.manifest.json").string()) == 0);
    CHECK(run("--out-dir " + dir.string() + " estimate --local 0.4 --local 0.9 --linear --cv40 " +
              (dir / "e.curve.csv").string()) == 0);
    const json est = read_json(dir / "estimates.json");
    REQUIRE(est.size() == 4);
    int skipped = 0;
    for (const auto& r : est) {
        if (r.value("skipped", false)) ++skipped;
        if (r.at("method") == "linear") {
            // stress is K*eps in Pa -> slope K/1000 in kPa
            CHECK(r.at("E_kpa").get<double>() == doctest::Approx(30.0).epsilon(0.02));
        }
    }
    CHECK(skipped == 1);  // local at 0.9 beyond max strain
}

TEST_CASE("classify consumes fit output against the shipped config") {
    const fs::path dir = fresh_dir("classify");
    json fits;
    fits["fits"] = json::array();
    const std::vector<std::tuple<std::string, double, double>> fixtures = {
        {"small_box", 15569, 26466},   {"big_box", 13106, 29013},
        {"carton", 16893, 28056},      {"small_bottle", 17711, 1278},
        {"big_bottle", 19898, 1979},   {"aluminium_can", 35705, 88685},
        {"steel_can", 44303, 35462},
    };
    for (const auto& [label, k, eta] : fixtures) {
        fits["fits"].push_back({{"label", label},
                                {"ok", true},
                                {"model", "hunt_crossley"},
                                {"K_pa", k},
                                {"eta_pa_s", eta},
                                {"n", 1.0},
                                {"identifiable", true}});
    }
    std::ofstream(dir / "fits.json") << fits.dump(2);
    CHECK(run("--out-dir " + dir.string() + " classify --fits " + (dir / "fits.json").string() +
              " --classes " + (kDataDir / "waste_sorting.json").string()) == 0);
    const json decisions = read_json(dir / "decisions.json");
    REQUIRE(decisions.at("decisions").size() == 7);
    CHECK(decisions.at("counts").at("Paper and Cardboard") == 2);
    CHECK(decisions.at("counts").at("PET and Plastic") == 3);
    CHECK(decisions.at("counts").at("Sheet Metal Containers") == 2);
}

TEST_CASE("report aggregates estimates by cycle and speed") {
    const fs::path dir = fresh_dir("report");
    json est = json::array();
    for (int cycle : {1, 2}) {
        for (double e : {8.0, 12.0}) {
            est.push_back({{"file", "x"},
                           {"method", "linear"},
                           {"cycle", cycle},
                           {"speed_mm_s", 1.6},
                           {"E_kpa", e},
                           {"r2", 1.0}});
        }
    }
    std::ofstream(dir / "estimates.json") << est.dump(2);
    CHECK(run("--out-dir " + dir.string() + " report --input " +
              (dir / "estimates.json").string() + " --group-by cycle --group-by speed") == 0);
    const json rep = read_json(dir / "report.json");
    const json& rows = rep.at("tables").at("linear");
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.at("mean_E_kpa").get<double>() == doctest::Approx(10.0));
        CHECK(r.at("error_ratio").get<double>() == doctest::Approx(0.2));
    }
}
