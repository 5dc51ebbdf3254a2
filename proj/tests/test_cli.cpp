#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crowd/cli.hpp"
#include "crowd/dataset.hpp"

namespace fs = std::filesystem;
using crowd::cli::run;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int rc = run(args, out, err);
    return {rc, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "crowd_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kFixture = CROWD_DATA_DIR "/example_fixture.csv";

// A small synthetic dataset shared by the analysis commands.
std::string synthetic() {
    static const std::string path = [] {
        const auto p = scratch("synthetic.csv").string();
        REQUIRE(call({"simulate", "--groups", "60", "--seed", "3", "-o", p}).code == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("usage errors exit 2 with a parsable prefix") {
    auto r = call({});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("crowd:error:Usage:", 0) == 0);
    CHECK(call({"frobnicate"}).code == 2);
    CHECK(call({"ingest"}).code == 2);
    r = call({"simulate", "--groups", "3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--seed") != std::string::npos);
    CHECK(call({"curves", "-i", synthetic(), "--seed", "1", "--ns", "5,x"}).code == 2);
    CHECK(call({"curves", "-i", synthetic(), "--seed", "1", "--mode", "sideways"}).code == 2);
    CHECK(call({"ingest", "-i", kFixture, "-o", scratch("x.txt").string()}).code == 2);
    CHECK(call({"--help"}).code == 0);
}

TEST_CASE("data errors exit 1 and report the line") {
    const auto bad = scratch("bad.csv");
    std::ofstream(bad) << "participant_id,group_id,role,question_code,stage,estimate,confidence\n"
                       << "p1,g1,player,GOALS,i1,-3,4\n";
    auto r = call({"ingest", "-i", bad.string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("crowd:error:NegativeEstimate:line 2: ", 0) == 0);
    r = call({"ingest", "-i", scratch("missing.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("crowd:error:Io:", 0) == 0);
    r = call({"curves", "-i", synthetic(), "--seed", "1", "--ns", "500", "--iterations", "2"});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("crowd:error:InsufficientGroups:", 0) == 0);
}

TEST_CASE("ingest of the example fixture is lossless") {
    const auto a = scratch("fixture_a.csv"), b = scratch("fixture_b.csv");
    auto r = call({"ingest", "-i", kFixture, "-o", a.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("ingest: ", 0) == 0);
    REQUIRE(call({"ingest", "-i", a.string(), "-o", b.string()}).code == 0);
    CHECK(crowd::cli::digest_file(a.string()) == crowd::cli::digest_file(b.string()));

    const auto qs = crowd::load_questions(CROWD_DATA_DIR "/questions.csv");
    CHECK(crowd::parse_dataset(kFixture, qs) == crowd::parse_dataset(a.string(), qs));

    r = call({"ingest", "-i", kFixture, "-o", scratch("report.json").string()});
    REQUIRE(r.code == 0);
    const auto report = slurp(scratch("report.json"));
    CHECK(report.find("\"g01\"") != std::string::npos);
    CHECK(report.find("\"g03\"") == std::string::npos);  // no consensus
    CHECK(report.find("\"g04\"") == std::string::npos);  // missing a revised answer
    CHECK(r.out.find("2 complete") != std::string::npos);
}

TEST_CASE("simulate is seeded and ignores the thread count") {
    auto one = call({"--threads", "1", "simulate", "--groups", "12", "--seed", "9"});
    auto four = call({"--threads", "4", "simulate", "--groups", "12", "--seed", "9"});
    REQUIRE(one.code == 0);
    CHECK(one.out == four.out);
    CHECK(one.err.rfind("simulate: 12 groups", 0) == 0);
    auto other = call({"simulate", "--groups", "12", "--seed", "10"});
    CHECK(other.out != one.out);
    auto ctl = call({"simulate", "--groups", "2", "--seed", "9", "--control", "--noise-r", "0.1"});
    CHECK(ctl.code == 0);
    CHECK(call({"simulate", "--groups", "2", "--seed", "9", "--beta", "2"}).code == 2);
}

TEST_CASE("curves write one row per question and size") {
    auto r = call({"curves", "-i", synthetic(), "--seed", "7", "--iterations", "20", "--ns", "5,25,125"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, line;
    std::getline(lines, header);
    CHECK(header == "question,stage,mode,n,mean_error,sem");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 4 * 3);
    auto t8 = call({"--threads", "8", "curves", "-i", synthetic(), "--seed", "7", "--iterations", "20", "--ns",
                    "5,25,125"});
    CHECK(t8.out == r.out);
    auto between = call({"curves", "-i", synthetic(), "--seed", "7", "--iterations", "5", "--mode", "between",
                         "--ns", "1,10", "--pooled", "-o", scratch("b.json").string()});
    CHECK(between.code == 0);
    CHECK(slurp(scratch("b.json")).find("\"pooled\"") != std::string::npos);
}

TEST_CASE("rules-bench, stats and reduce") {
    auto r = call({"rules-bench", "-i", synthetic(), "--seed", "7", "--iterations", "50", "--sample", "20"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"consensus\"") != std::string::npos);
    for (const char* name : {"resistance_weighted", "confidence_weighted", "expert", "median", "soft_median", "mean",
                             "robust_average"})
        CHECK(r.out.find(std::string("\"") + name + "\"") != std::string::npos);
    auto s = call({"stats", "-i", synthetic(), "--seed", "7", "--permutations", "200"});
    REQUIRE(s.code == 0);
    CHECK(s.out.find("\"between_variance\"") != std::string::npos);
    auto d = call({"reduce", "-i", synthetic(), "--seed", "7", "--iterations", "10", "--ns", "5,25"});
    REQUIRE(d.code == 0);
    CHECK(d.out.rfind("n,error_i1,error_i2,reduction_percent\n", 0) == 0);
    CHECK(call({"reduce", "-i", synthetic(), "--seed", "7", "--set", "everything"}).code == 2);
}

TEST_CASE("manifest replays to identical outputs") {
    const auto out = scratch("curve.csv"), man = scratch("curve.manifest.json");
    auto r = call({"--manifest", man.string(), "--threads", "2", "curves", "-i", synthetic(), "--seed", "11",
                   "--iterations", "15", "-o", out.string()});
    REQUIRE(r.code == 0);
    const auto manifest = slurp(man);
    CHECK(manifest.find("\"seed\": 11") != std::string::npos);
    CHECK(manifest.find("--threads") == std::string::npos);
    CHECK(manifest.find("fnv1a64") != std::string::npos);
    auto replay = call({"replay", man.string()});
    CHECK(replay.code == 0);
    CHECK(replay.out == "replay: 1 outputs reproduced\n");

    std::ofstream(out) << "tampered\n";
    // replay rewrites the output, so tamper with the manifest's digest instead
    std::string edited = manifest;
    const auto pos = edited.rfind("\"fnv1a64\": \"") + 12;
    edited[pos] = edited[pos] == '0' ? '1' : '0';
    std::ofstream(man) << edited;
    replay = call({"replay", man.string()});
    CHECK(replay.code == 1);
    CHECK(replay.err.rfind("crowd:error:DigestMismatch:", 0) == 0);
}
