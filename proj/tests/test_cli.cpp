// End-to-end tests driving the installed binary: exit codes, CSV/JSON
// artifacts, and byte-level determinism. The binary path arrives as the
// first command-line argument (wired in CMake).

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string g_cli;
std::string g_dir;

std::string path_in(const std::string& name) { return g_dir + "/" + name; }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >" + g_dir + "/stdout.txt 2>" + g_dir +
                            "/stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::vector<std::vector<double>> parse_csv(const std::string& path, int* n_cols = nullptr) {
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (n_cols && !rows.empty()) *n_cols = static_cast<int>(rows.front().size());
    return rows;
}

}  // namespace

TEST_CASE("ml-eval: values and the negative-grid gate") {
    write_file(path_in("ml.json"), R"({"alpha":0.5,"beta":1.0,"lambda":-1.0,"tau":1.0,
        "grid":{"t0":0.0,"t1":2.0,"step":0.5}})");
    CHECK(run("ml-eval --input " + path_in("ml.json") + " --output " + path_in("ml.csv")) == 0);
    auto rows = parse_csv(path_in("ml.csv"));
    REQUIRE(rows.size() == 5);
    CHECK(rows[1][0] == doctest::Approx(0.5));
    CHECK(rows[1][3] == doctest::Approx(1.0).epsilon(1e-12));  // abs at t=0.5
    CHECK(rows[3][3] == doctest::Approx(0.20211543919713663).epsilon(1e-9));  // t=1.5

    write_file(path_in("mlbad.json"), R"({"alpha":0.5,"beta":1.0,"lambda":-1.0,"tau":1.0,
        "grid":[0.0,-0.5,1.0]})");
    CHECK(run("ml-eval --input " + path_in("mlbad.json")) == 2);
}

TEST_CASE("ml-integral emits a nondecreasing cumulative curve") {
    write_file(path_in("mi.json"), R"({"alpha":0.5,"beta":0.5,"lambda":-1.0,"tau":1.0})");
    CHECK(run("ml-integral --input " + path_in("mi.json") + " --output " + path_in("mi.csv") +
              " --horizon 5 --step 0.01") == 0);
    auto rows = parse_csv(path_in("mi.csv"));
    REQUIRE(rows.size() > 100);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][0] >= rows[i - 1][0]);
        CHECK(rows[i][1] >= rows[i - 1][1] - 1e-15);
    }
    // integral over [0,1] equals 1/Gamma(1.5) for tau = 1
    double at1 = 0.0;
    for (const auto& r : rows)
        if (std::abs(r[0] - 1.0) < 1e-9) at1 = r[1];
    CHECK(at1 == doctest::Approx(1.1283791670955126).epsilon(1e-5));
}

TEST_CASE("region-check exit codes") {
    write_file(path_in("rc0.json"), R"({"alpha":0.5,"tau":1.0,"A":[[-1.0,0.0],[0.0,-1.2]]})");
    CHECK(run("region-check --input " + path_in("rc0.json") + " --output " +
              path_in("rc0.out")) == 0);
    write_file(path_in("rc1.json"), R"({"alpha":0.5,"tau":1.0,"A":[[1.0]]})");
    CHECK(run("region-check --input " + path_in("rc1.json")) == 3);
    write_file(path_in("rcbad.json"), "{not json");
    CHECK(run("region-check --input " + path_in("rcbad.json")) == 2);
}

TEST_CASE("region-boundary CSV: monotone radii, round-trip precision") {
    write_file(path_in("rb.json"), R"({"alpha":0.5,"tau":1.0,"n":64})");
    CHECK(run("region-boundary --input " + path_in("rb.json") + " --output " +
              path_in("rb.csv")) == 0);
    auto rows = parse_csv(path_in("rb.csv"));
    REQUIRE(rows.size() == 64);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] > rows[i - 1][1]);
    for (const auto& r : rows) {
        // radius and point agree to double round-trip precision
        CHECK(std::abs(std::hypot(r[2], r[3]) - r[1]) <= 1e-15 * (1.0 + r[1]));
    }
}

TEST_CASE("char-roots counts the unstable root of lambda = 1") {
    write_file(path_in("cr.json"),
               R"({"alpha":0.5,"tau":1.0,"lambda":1.0,
                   "window":{"re_min":0.01,"re_max":2.0,"im_min":-2.0,"im_max":2.0}})");
    CHECK(run("char-roots --input " + path_in("cr.json") + " --output " + path_in("cr.json.out")) == 0);
    const std::string out = read_file(path_in("cr.json.out"));
    CHECK(out.find("\"count\": 1") != std::string::npos);
}

TEST_CASE("simulate: decay, zero data, growth, and solver agreement") {
    write_file(path_in("sys.json"), R"({"alpha":0.5,"tau":1.0,"A":[[-1.0]],
        "g":{"kind":"quadratic","params":[0.05]},
        "phi":{"kind":"constant","payload":[0.1]},"T":5.0,"h_step":0.005})");
    CHECK(run("simulate --input " + path_in("sys.json") + " --solver both --output " +
              path_in("traj.csv")) == 0);
    const std::string summary = read_file(g_dir + "/stdout.txt");
    CHECK(summary.find("max_deviation") != std::string::npos);
    int nc = 0;
    auto rows = parse_csv(path_in("traj.csv"), &nc);
    REQUIRE(nc == 3);  // t, re_x1, im_x1
    CHECK(rows.front()[0] == doctest::Approx(-1.0));
    CHECK(std::abs(rows.back()[1]) < 0.1);  // decayed from 0.1 plateau

    write_file(path_in("zero.json"), R"({"alpha":0.5,"tau":1.0,"A":[[-1.0]],
        "g":{"kind":"quadratic","params":[0.05]},
        "phi":{"kind":"constant","payload":[0.0]},"T":2.0,"h_step":0.01})");
    CHECK(run("simulate --input " + path_in("zero.json") + " --solver picard --output " +
              path_in("zero.csv")) == 0);
    for (const auto& r : parse_csv(path_in("zero.csv"))) {
        CHECK(r[1] == 0.0);
        CHECK(r[2] == 0.0);
    }

    // strong instability overflows and reports growth evidence via exit 5
    write_file(path_in("grow.json"), R"({"alpha":0.5,"tau":1.0,"A":[[10.0]],
        "g":{"kind":"zero"},
        "phi":{"kind":"constant","payload":[1.0]},"T":400.0,"h_step":0.1})");
    CHECK(run("simulate --input " + path_in("grow.json") + " --solver direct --output " +
              path_in("grow.csv")) == 5);
    // growth evidence: the trajectory is emitted truncated at the last finite row
    auto grows = parse_csv(path_in("grow.csv"));
    REQUIRE(!grows.empty());
    CHECK(std::isfinite(grows.back()[1]));
    CHECK(std::abs(grows.back()[1]) > 1.0);
}

TEST_CASE("verify: exit codes and byte-identical reruns") {
    write_file(path_in("vsys.json"), R"({"alpha":0.8,"tau":1.0,"A":[[-1.0]],
        "g":{"kind":"quadratic","params":[0.05]},
        "phi":{"kind":"constant","payload":[0.1]},"T":5.0,"h_step":0.01,
        "n_histories":5})");
    CHECK(run("verify --input " + path_in("vsys.json") + " --seed 11 --output " +
              path_in("rep1.json")) == 0);  // stable_certified
    CHECK(run("verify --input " + path_in("vsys.json") + " --seed 11 --output " +
              path_in("rep2.json")) == 0);
    CHECK(read_file(path_in("rep1.json")) == read_file(path_in("rep2.json")));
    CHECK(!read_file(path_in("rep1.json")).empty());

    // missing seed is a validation failure
    CHECK(run("verify --input " + path_in("vsys.json")) == 2);

    // unstable system
    write_file(path_in("vbad.json"), R"({"alpha":0.5,"tau":1.0,"A":[[1.0]],
        "g":{"kind":"zero"},
        "phi":{"kind":"constant","payload":[0.1]},"T":5.0,"h_step":0.01,
        "n_histories":3,"scale":0.5,"horizon":40.0})");
    CHECK(run("verify --input " + path_in("vbad.json") + " --seed 1") == 3);

    // nilpotent block with huge gamma: no contraction anywhere -> inconclusive
    write_file(path_in("vnil.json"), R"({"alpha":0.5,"tau":1.0,
        "A":[[-1.0,1.0],[0.0,-1.0]],
        "jordan":{"blocks":[{"lambda":-1.0,"size":2,"eta":1}],"T":[[1.0,0.0],[0.0,1.0]]},
        "g":{"kind":"quadratic","params":[0.05,0.05]},
        "phi":{"kind":"constant","payload":[0.05,0.05]},"T":5.0,"h_step":0.01,
        "n_histories":3,"scale":0.05,"horizon":30.0})");
    CHECK(run("verify --input " + path_in("vnil.json") + " --seed 2 --gamma 5.0 --output " +
              path_in("vnil.out")) == 6);
    CHECK(read_file(path_in("vnil.out")).find("constants unavailable") != std::string::npos);
}

TEST_CASE("constants subcommand emits the q < 1 bundle") {
    write_file(path_in("csys.json"), R"({"alpha":0.5,"tau":1.0,"A":[[-1.0]],
        "g":{"kind":"quadratic","params":[0.05]},
        "phi":{"kind":"constant","payload":[0.1]},"T":5.0,"h_step":0.01})");
    CHECK(run("constants --input " + path_in("csys.json") + " --output " +
              path_in("c.json")) == 0);
    const std::string out = read_file(path_in("c.json"));
    CHECK(out.find("\"q\"") != std::string::npos);
    CHECK(out.find("\"delta\"") != std::string::npos);

    write_file(path_in("cbad.json"), R"({"alpha":0.5,"tau":1.0,"A":[[1.0]],
        "g":{"kind":"zero"},
        "phi":{"kind":"constant","payload":[0.1]},"T":5.0,"h_step":0.01})");
    CHECK(run("constants --input " + path_in("cbad.json")) == 3);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-fradelay-binary>\n");
        return 1;
    }
    g_cli = argv[1];
    char tmpl[] = "/tmp/fradelay_cli_XXXXXX";
    g_dir = mkdtemp(tmpl);
    doctest::Context ctx;
    return ctx.run();
}
