#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "drmco/approx.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DRMCO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string capture(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "drmco_cli_capture.txt";
    const std::string cmd =
        std::string(DRMCO_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
    if (std::system(cmd.c_str()) == -1) return {};
    std::ifstream in(out);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path workdir() {
    const fs::path dir = fs::temp_directory_path() / "drmco_cli_tests";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen, solve, verify round trip on the tiny instance") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "tiny.json").string();
    REQUIRE(run("gen --family tiny2 --out " + inst) == 0);
    CHECK(fs::exists(inst + ".manifest.json"));

    const std::string rundir = (dir / "run").string();
    REQUIRE(run("solve --in " + inst + " --mode seq --eps 1e-6 --out " + rundir) == 0);
    std::ifstream sol_file(rundir + "/solution.json");
    nlohmann::json sol = nlohmann::json::parse(sol_file);
    CHECK(std::abs(sol["lb"].get<double>() - 2.0 / 3.0) <= 1e-6);
    CHECK(sol["status"] == "converged");
    CHECK(fs::exists(rundir + "/trace.csv"));
    CHECK(fs::exists(rundir + "/manifest.json"));

    CHECK(run("verify --in " + inst + " --samples 10") == 0);
}

TEST_CASE("nonsequential mode through the cli") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "tiny_n.json").string();
    REQUIRE(run("gen --family tiny2 --out " + inst) == 0);
    const std::string rundir = (dir / "run_n").string();
    CHECK(run("solve --in " + inst + " --mode nddp --eps 1e-6 --out " + rundir) == 0);
}

TEST_CASE("missing input exits with a usage error") {
    CHECK(run("solve --in /nonexistent/input.json --eps 1e-6") == 1);
    CHECK(run("solve --in /nonexistent/input.json") == 1);  // missing gap too
}

TEST_CASE("hitting a limit exits with code 2") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "limited.json").string();
    REQUIRE(run("gen --family chain --stages 6 --out " + inst) == 0);
    const std::string rundir = (dir / "run_limited").string();
    CHECK(run("solve --in " + inst + " --eps 1e-9 --max-iters 1 --out " + rundir) == 2);
}

TEST_CASE("trace is a valid prefix-flushed csv") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "trace_inst.json").string();
    REQUIRE(run("gen --family chain --stages 4 --out " + inst) == 0);
    const std::string rundir = (dir / "run_trace").string();
    REQUIRE(run("solve --in " + inst + " --eps 1e-6 --out " + rundir) == 0);
    std::ifstream trace(rundir + "/trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "iter,stage_path,lb,ub,gap,n_eval,wall_ms");
    int rows = 0;
    for (std::string line; std::getline(trace, line);)
        if (!line.empty()) ++rows;
    CHECK(rows >= 1);
}

TEST_CASE("bound subcommand prints the closed forms") {
    CHECK(capture("bound --T 2 --d 1 --M 1 --D 1 --eps 1 --mode seq") == "7\n");
    CHECK(capture("bound --T 2 --d 1 --M 1 --D 1 --eps 1 --mode nddp") == "7\n");
    CHECK(run("bound --T 2 --d 1 --M 1 --D 1 --mode seq") == 1);  // no gap given
}

TEST_CASE("verify rejects an oversized instance with exit 4") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "big.json").string();
    REQUIRE(run("gen --family inventory --products 2 --factors 2 --stages 10 --out " + inst) == 0);
    CHECK(run("verify --in " + inst) == 4);
}

TEST_CASE("verify flags a corrupted warm start with exit 5") {
    const fs::path dir = workdir();
    const std::string inst = (dir / "tiny_ws.json").string();
    REQUIRE(run("gen --family tiny2 --out " + inst) == 0);

    // a cut claiming value 10 at the origin lies above the true cost-to-go
    std::vector<drmco::CutPool> under;
    under.emplace_back(1, 5.0);
    under[0].add_cut({{0.0}, 10.0, {0.0}});
    std::vector<drmco::EnvelopePool> over;
    const std::string warm = (dir / "bad_pools.json").string();
    std::ofstream(warm) << drmco::pools_to_json(under, over);
    CHECK(run("verify --in " + inst + " --warm-start " + warm) == 5);

    // a valid warm start passes
    std::vector<drmco::CutPool> good;
    good.emplace_back(1, 5.0);
    good[0].add_cut({{0.0}, 1.0, {-2.0}});
    const std::string warm_ok = (dir / "good_pools.json").string();
    std::ofstream(warm_ok) << drmco::pools_to_json(good, over);
    CHECK(run("verify --in " + inst + " --warm-start " + warm_ok) == 0);
}

}  // TEST_SUITE
