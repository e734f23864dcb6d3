#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = POLYSYNC_CLI;
const std::string kExample = std::string(POLYSYNC_SOURCE_DIR) + "/configs/paper_example.yaml";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("polysync_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Run {
    int code = -1;
    std::string output;
};

Run run(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "log.txt";
    const int raw = std::system((kCli + " " + args + " > " + log.string() + " 2>&1").c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kHeader = R"(leader:
  S: [[0, 1], [-1, 0]]
  H: [[1, 0]]
)";

} // namespace

TEST_CASE("collect writes datasets and is deterministic") {
    const fs::path dir = scratch("collect");
    const Run a = run("collect --config " + kExample + " --out " + (dir / "a").string(), dir);
    const Run b = run("collect --config " + kExample + " --out " + (dir / "b").string(), dir);
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.output.find("follower6") != std::string::npos);
    CHECK(a.output.find("FAIL") == std::string::npos);
    for (int i = 1; i <= 6; ++i) {
        const std::string f = "datasets/follower" + std::to_string(i) + ".json";
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
    const Run c = run("collect --config " + kExample + " --seed 9 --out " + (dir / "c").string(), dir);
    CHECK(c.code == 0);
    CHECK(slurp(dir / "a" / "datasets/follower1.json") != slurp(dir / "c" / "datasets/follower1.json"));
    fs::remove_all(dir);
}

TEST_CASE("rank failure exits with the assumption code") {
    const fs::path dir = scratch("rank");
    write(dir / "c.yaml", std::string(kHeader) + R"(agents:
  - A: [[0, 1, 0], [0, 0, 1], [0, 0, -4]]
    B: [[0], [0], [4]]
    C: [[1, 0, 0]]
topology:
  edges: [[0, 1]]
data:
  rho: 2
)");
    const Run r = run("collect --config " + (dir / "c.yaml").string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.output.find("rank") != std::string::npos);
    // the partial bundle names the failed stage
    CHECK(slurp(dir / "out" / "report.json").find("\"stage\": \"collect\"") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("uncontrollable follower exits with the synthesis code") {
    // Noise-free data pin B = 0 exactly, so no gain can satisfy the LMI.
    const fs::path dir = scratch("synth");
    write(dir / "c.yaml", std::string(kHeader) + R"(agents:
  - A: [[1.2]]
    B: [[0]]
    C: [[1]]
topology:
  edges: [[0, 1]]
)");
    const Run r = run("synthesize --config " + (dir / "c.yaml").string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 3);
    CHECK(fs::exists(dir / "out" / "fits.json"));
    fs::remove_all(dir);
}

TEST_CASE("bad configuration and bad flags") {
    const fs::path dir = scratch("bad");
    write(dir / "c.yaml", std::string(kHeader) + "agents:\n  - A: [[1, 2]]\n    B: [[1]]\n    C: [[1]]\ntopology:\n  edges: []\n");
    const Run r = run("collect --config " + (dir / "c.yaml").string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.output.find("c.yaml:5:") != std::string::npos);
    CHECK(run("collect --config " + kExample + " --noise-level -1", dir).code != 0);
    CHECK(run("fly", dir).code != 0);
    fs::remove_all(dir);
}

TEST_CASE("simulate, verify and tamper") {
    const fs::path dir = scratch("verify");
    const std::string out = (dir / "b").string();
    const Run r = run("bound --config " + kExample + " --noise-level 0.05 --horizon 80 --out " + out, dir);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("containment FAIL") == std::string::npos);
    CHECK(run("verify " + out, dir).code == 0);

    // A trailing blank line parses the same but breaks the hash.
    write(dir / "b" / "trajectory.csv", slurp(dir / "b" / "trajectory.csv") + "\n");
    const Run v = run("verify " + out, dir);
    CHECK(v.code == 4);
    CHECK(v.output.find("FAIL integrity") != std::string::npos);

    fs::remove(dir / "b" / "gains.json");
    CHECK(run("verify " + out, dir).code == 4);
    fs::remove_all(dir);
}
