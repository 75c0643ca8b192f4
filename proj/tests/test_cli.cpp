#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

std::string config_path(const std::string& name) {
    const char* dir = std::getenv("AGGSTAT_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

std::string temp_path(const std::string& hint) {
    static int counter = 0;
    return "/tmp/aggstat_cli_test_" + std::to_string(getpid()) + "_" +
           std::to_string(counter++) + "_" + hint;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("AGGSTAT_CLI");
    REQUIRE(bin != nullptr);
    const std::string out_path = temp_path("out");
    const std::string err_path = temp_path("err");
    const std::string cmd =
        std::string(bin) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    CliResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = read_file(out_path);
    res.err = read_file(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return res;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

TEST_CASE("simulate emits a variance report for the paired-basket manifest") {
    const CliResult res = run_cli("simulate " + config_path("experiment_b.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].rfind("estimand,truth,mean,", 0) == 0);
    const std::vector<std::string> cells = split(rows[1], ',');
    CHECK(cells[0] == "variance:apples");
    // mean(vhat) lands near v = 0.0005 and the MSE column near 2 v^2 = 5e-7.
    const double mean = std::strtod(cells[2].c_str(), nullptr);
    const double mse = std::strtod(cells[5].c_str(), nullptr);
    CHECK(std::abs(mean - 0.0005) < 0.0001);
    CHECK(std::abs(mse - 5e-7) < 1e-7);
}

TEST_CASE("the same seed gives byte-identical output, any thread count") {
    const std::string cfg = config_path("experiment_c_balanced.json");
    const CliResult a = run_cli("simulate " + cfg + " --seed 42");
    const CliResult b = run_cli("simulate " + cfg + " --seed 42");
    const CliResult c = run_cli("simulate " + cfg + " --seed 42 --threads 4");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);

    const CliResult other = run_cli("simulate " + cfg + " --seed 43");
    CHECK(other.out != a.out);
}

TEST_CASE("--out writes exactly what stdout would carry") {
    const std::string cfg = config_path("experiment_a.json");
    const std::string out_file = temp_path("report.csv");
    const CliResult direct = run_cli("simulate " + cfg);
    const CliResult redirected = run_cli("simulate " + cfg + " --out " + out_file);
    CHECK(redirected.exit_code == 0);
    CHECK(redirected.out.empty());
    CHECK(read_file(out_file) == direct.out);
    std::remove(out_file.c_str());
}

TEST_CASE("sweep emits one data row per estimand per n") {
    const CliResult res = run_cli("sweep " + config_path("experiment_a.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    REQUIRE(rows.size() == 7); // header + 3 sizes x 2 estimands
    CHECK(rows[0].rfind("n,estimand,", 0) == 0);

    // Theory column for the mean is v/n on every row.
    int mean_rows = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::vector<std::string> cells = split(rows[i], ',');
        REQUIRE(cells.size() == 12);
        if (cells[1] != "mean:apples")
            continue;
        ++mean_rows;
        const double n = std::strtod(cells[0].c_str(), nullptr);
        const double theory = std::strtod(cells[8].c_str(), nullptr);
        CHECK(theory == 0.0005 / n);
    }
    CHECK(mean_rows == 3);
}

TEST_CASE("csv and json reports carry identical numbers") {
    const std::string cfg = config_path("experiment_a.json");
    const CliResult csv = run_cli("sweep " + cfg + " --format csv");
    const CliResult json = run_cli("sweep " + cfg + " --format json");
    CHECK(csv.exit_code == 0);
    CHECK(json.exit_code == 0);

    const nlohmann::json j = nlohmann::json::parse(json.out);
    const std::vector<std::string> rows = lines_of(csv.out);
    std::size_t row = 1;
    for (const auto& sweep_row : j["rows"]) {
        for (const auto& est : sweep_row["estimands"]) {
            const std::vector<std::string> cells = split(rows[row], ',');
            CHECK(std::strtod(cells[0].c_str(), nullptr) == sweep_row["n"].get<double>());
            CHECK(cells[1] == est["estimand"].get<std::string>());
            CHECK(std::strtod(cells[2].c_str(), nullptr) == est["truth"].get<double>());
            CHECK(std::strtod(cells[3].c_str(), nullptr) == est["mean"].get<double>());
            CHECK(std::strtod(cells[4].c_str(), nullptr) == est["bias"].get<double>());
            CHECK(std::strtod(cells[6].c_str(), nullptr) == est["mse"].get<double>());
            if (est["theory_mse"].is_null())
                CHECK(cells[8].empty());
            else
                CHECK(std::strtod(cells[8].c_str(), nullptr) ==
                      est["theory_mse"].get<double>());
            ++row;
        }
    }
    CHECK(row == rows.size());
}

TEST_CASE("crb prints the balanced analysis with a tiny closed-form delta") {
    const CliResult res = run_cli("crb " + config_path("experiment_c_balanced.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0] == "matrix,parameter,mean:apples,mean:oranges");
    const std::vector<std::string> fisher_row = split(rows[1], ',');
    CHECK(std::strtod(fisher_row[2].c_str(), nullptr) == 52.0);
    const std::vector<std::string> crb_row = split(rows[3], ',');
    CHECK(std::abs(std::strtod(crb_row[2].c_str(), nullptr) - 0.13) < 1e-10);
    CHECK(std::abs(std::strtod(crb_row[3].c_str(), nullptr) + 0.12) < 1e-10);
    const std::vector<std::string> delta_row = split(rows[7], ',');
    CHECK(delta_row[0] == "max_abs_delta");
    CHECK(std::strtod(delta_row[2].c_str(), nullptr) < 1e-10);
}

TEST_CASE("crb reproduces the biased quarter-design matrix") {
    const CliResult res = run_cli("crb " + config_path("experiment_c_biased.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    const std::vector<std::string> crb_row = split(rows[3], ',');
    CHECK(std::abs(std::strtod(crb_row[2].c_str(), nullptr) - 0.025) < 1e-12);
    CHECK(std::abs(std::strtod(crb_row[3].c_str(), nullptr) + 0.015) < 1e-12);
}

TEST_CASE("crb on the paired-basket model prints the scalar pair") {
    const CliResult res = run_cli("crb " + config_path("experiment_b.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "matrix,parameter,variance:apples");
    const std::vector<std::string> fisher_row = split(rows[1], ',');
    // 2/v^2 at v = 0.0005 is 8e6; the bound is v^2/2 = 1.25e-7.
    CHECK(std::abs(std::strtod(fisher_row[2].c_str(), nullptr) - 8e6) < 1e-2);
    const std::vector<std::string> crb_row = split(rows[2], ',');
    CHECK(std::abs(std::strtod(crb_row[2].c_str(), nullptr) - 1.25e-7) < 1e-18);
}

TEST_CASE("non-identifiable inputs exit 3 through every command") {
    const CliResult sim = run_cli("simulate " + config_path("singular_design.json"));
    CHECK(sim.exit_code == 3);
    CHECK(sim.err.find("determinant") != std::string::npos);

    const CliResult crb = run_cli("crb " + config_path("singular_design.json"));
    CHECK(crb.exit_code == 3);

    const CliResult half = run_cli("crb " + config_path("biased_half.json"));
    CHECK(half.exit_code == 3);

    const CliResult half_sim = run_cli("simulate " + config_path("biased_half.json"));
    CHECK(half_sim.exit_code == 3);
}

TEST_CASE("design diagnostics succeed even on singular designs") {
    const CliResult res = run_cli("design " + config_path("singular_design.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> cells = split(lines_of(res.out)[1], ',');
    CHECK(cells[2] == "1");     // rank
    CHECK(cells[3] == "0");     // determinant
    CHECK(cells[5] == "false"); // identifiable

    const CliResult good = run_cli("design " + config_path("experiment_c_balanced.json"));
    const std::vector<std::string> gcells = split(lines_of(good.out)[1], ',');
    CHECK(gcells[2] == "2");
    CHECK(gcells[3] == "2000");
    CHECK(std::abs(std::strtod(gcells[4].c_str(), nullptr) - 5.0) < 1e-9);
    CHECK(gcells[5] == "true");
}

TEST_CASE("config and usage errors exit 2") {
    CHECK(run_cli("simulate /nonexistent/config.json").exit_code == 2);
    CHECK(run_cli("simulate " + config_path("experiment_a.json") + " --format xml").exit_code ==
          2);
    CHECK(run_cli("crb " + config_path("experiment_a.json")).exit_code == 2); // kind A
    CHECK(run_cli("sweep " + config_path("experiment_c_coinflip.json")).exit_code ==
          2); // no sweep list
    CHECK(run_cli("bogus-subcommand").exit_code == 2);
    CHECK(run_cli("simulate").exit_code == 2);

    const std::string bad = temp_path("bad.json");
    std::ofstream(bad) << "{ not json";
    CHECK(run_cli("simulate " + bad).exit_code == 2);
    std::remove(bad.c_str());

    const std::string zero_reps = temp_path("zero.json");
    std::ofstream(zero_reps) << R"({
      "population": {"groups": [{"name": "a", "mean": 1.0, "variance": 1.0}]},
      "experiment": {"kind": "A", "replicates": 0, "seed": 1},
      "design": {"n": 10}
    })";
    CHECK(run_cli("simulate " + zero_reps).exit_code == 2);
    std::remove(zero_reps.c_str());
}

TEST_CASE("help requests succeed") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("simulate --help").exit_code == 0);
}

TEST_CASE("coinflip manifests realize one deterministic design") {
    const std::string cfg = config_path("experiment_c_coinflip.json");
    const CliResult a = run_cli("simulate " + cfg);
    const CliResult b = run_cli("simulate " + cfg);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);

    const CliResult d1 = run_cli("design " + cfg);
    const CliResult d2 = run_cli("design " + cfg);
    CHECK(d1.exit_code == 0);
    CHECK(d1.out == d2.out);
    // A different seed realizes a different design (flips land elsewhere).
    const CliResult d3 = run_cli("design " + cfg + " --seed 99");
    CHECK(d3.out != d1.out);
}

TEST_CASE("stacked matrix manifests run the weighted solve end to end") {
    const CliResult res = run_cli("simulate " + config_path("experiment_c_stacked.json"));
    CHECK(res.exit_code == 0);
    const std::vector<std::string> rows = lines_of(res.out);
    REQUIRE(rows.size() == 3);
    const std::vector<std::string> cells = split(rows[1], ',');
    CHECK(cells[0] == "mean:apples");
    // CRB diagonal of the stacked design: 114.5/5800.
    const double crb = std::strtod(cells[8].c_str(), nullptr);
    CHECK(std::abs(crb - 114.5 / 5800.0) < 1e-9);
}
