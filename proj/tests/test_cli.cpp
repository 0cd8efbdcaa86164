#include "doctest.h"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(EEMAX_CLI_PATH) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("eemax_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
        fs::current_path(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::current_path(fs::temp_directory_path(), ec);
        fs::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("cli end to end") {
    TempDir tmp;

    SUBCASE("gen-data writes the requested sample count and is seed-stable") {
        REQUIRE(run("gen-data --users 7 --samples 6000 --seed 3 --out big.eemax") == 0);
        const std::string first = slurp("big.eemax");
        CHECK(first.size() > 6000u * 49u * 8u);
        REQUIRE(run("gen-data --users 7 --samples 6000 --seed 3 --out big2.eemax") == 0);
        CHECK(first == slurp("big2.eemax"));
    }

    SUBCASE("usage errors exit with code 2") {
        CHECK(run("gen-data --users 0 --out x.eemax") == 2);
        CHECK(run("gen-data --pmax-dbm 0 --pmax-dbw -30 --out x.eemax") == 2);
        CHECK(run("definitely-not-a-subcommand") == 2);
    }

    SUBCASE("a run is reproducible from its manifest") {
        REQUIRE(run("gen-data --users 3 --samples 12 --seed 11 --out m1.eemax") == 0);
        REQUIRE(run("--config m1.eemax.manifest gen-data --out m2.eemax") == 0);
        CHECK(slurp("m1.eemax") == slurp("m2.eemax"));
    }

    SUBCASE("dBm and dBW flags meet at the same wattage") {
        REQUIRE(run("gen-data --users 2 --samples 20 --seed 5 --out p.eemax") == 0);
        REQUIRE(run("oracle --data p.eemax --mode grid --grid-points 11 --pmax-dbm 0 --out o_dbm.csv") == 0);
        REQUIRE(run("oracle --data p.eemax --mode grid --grid-points 11 --pmax-dbw -30 --out o_dbw.csv") == 0);
        CHECK(slurp("o_dbm.csv") == slurp("o_dbw.csv"));
    }

    SUBCASE("train, eval and oracle round trip") {
        REQUIRE(run("gen-data --users 2 --samples 12 --seed 7 --out tr.eemax") == 0);
        REQUIRE(run("gen-data --users 2 --samples 6 --seed 8 --out te.eemax --split test") == 0);
        REQUIRE(run("train --data tr.eemax --test-data te.eemax --out-dir run1 --epochs 3 "
                    "--layers 3 --dim 6 --batch 12 --smc 2 --lr 2e-7 --seed 4") == 0);
        CHECK(fs::exists("run1/manifest.txt"));
        CHECK(fs::exists("run1/alpha.eemaxnet"));
        CHECK(fs::exists("run1/beta.eemaxnet"));
        const auto metrics = lines_of("run1/metrics.csv");
        REQUIRE(metrics.size() == 4);
        CHECK(metrics[0] == "epoch,mean_ee_mbit_per_j,mean_entropy_nats,mean_penalty,kappa,s_watts");
        CHECK(metrics[1].rfind("1,", 0) == 0);

        // resume continues the epoch numbering
        REQUIRE(run("train --data tr.eemax --out-dir run1 --epochs 5 --layers 3 --dim 6 "
                    "--batch 12 --smc 2 --lr 2e-7 --seed 4 --resume") == 0);
        const auto more = lines_of("run1/metrics.csv");
        REQUIRE(more.size() == 6);
        CHECK(more[4].rfind("4,", 0) == 0);
        CHECK(more[5].rfind("5,", 0) == 0);

        REQUIRE(run("oracle --data te.eemax --mode grid --grid-points 21 --out oracle.csv") == 0);
        const auto orc = lines_of("oracle.csv");
        REQUIRE(orc.size() == 7);
        CHECK(orc[0] == "sample_index,ee_oracle,ee_net,ratio,p_oracle_0,p_oracle_1,p_net_0,p_net_1");

        REQUIRE(run("eval --checkpoint run1/alpha.eemaxnet --data te.eemax --out plain.csv") == 0);
        CHECK(slurp("cli_stdout.txt").find("ratio") == std::string::npos);
        REQUIRE(run("eval --checkpoint run1/alpha.eemaxnet --data te.eemax --oracle oracle.csv "
                    "--out joined.csv") == 0);
        CHECK(slurp("cli_stdout.txt").find("mean ratio to oracle") != std::string::npos);
        const auto joined = lines_of("joined.csv");
        REQUIRE(joined.size() == 7);
        CHECK(joined[1].find("nan") == std::string::npos);
    }

    SUBCASE("epoch cap zero emits exactly the initial-state row") {
        REQUIRE(run("gen-data --users 2 --samples 8 --seed 2 --out z.eemax") == 0);
        REQUIRE(run("train --data z.eemax --out-dir run0 --epochs 0 --layers 3 --dim 6") == 0);
        const auto metrics = lines_of("run0/metrics.csv");
        REQUIRE(metrics.size() == 2);
        CHECK(metrics[1].rfind("0,", 0) == 0);
    }

    SUBCASE("grid oracle refuses seven users") {
        REQUIRE(run("gen-data --users 7 --samples 2 --seed 6 --out seven.eemax") == 0);
        CHECK(run("oracle --data seven.eemax --mode grid") == 2);
        CHECK(slurp("cli_stderr.txt").find("multistart") != std::string::npos);
        CHECK(run("oracle --data seven.eemax --mode multistart --starts 4 --out seven.csv") == 0);
    }

    SUBCASE("numerical abort exits with code 3") {
        // A dataset whose diagonal gains sit near DBL_MAX overflows the
        // SINR arithmetic as soon as a draw lands above p_max.
        {
            std::ofstream out("poison.eemax", std::ios::binary);
            out << "EEMAX v1 I=2 n=2 seed=0\n";
            const double vals[8] = {1.79e308, 1.0, 1.0, 1.79e308, 1.79e308, 1.0, 1.0, 1.79e308};
            out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        }
        CHECK(run("train --data poison.eemax --out-dir runp --epochs 50 --layers 3 --dim 6 "
                  "--batch 2 --smc 16 --seed 1") == 3);
        CHECK(slurp("cli_stderr.txt").find("numerical abort") != std::string::npos);
    }

    SUBCASE("rastrigin trace emits the requested columns") {
        REQUIRE(run("rastrigin --n 2 --method both --iters 60 --out ras.csv") == 0);
        const auto rows = lines_of("ras.csv");
        REQUIRE(rows.size() >= 2);
        CHECK(rows[0] == "iter,f_box,f_gd");
        REQUIRE(run("rastrigin --n 2 --method gd --iters 30 --out ras_gd.csv") == 0);
        CHECK(lines_of("ras_gd.csv")[0] == "iter,f_gd");
    }
}
