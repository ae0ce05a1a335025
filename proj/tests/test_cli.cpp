#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lcpd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    CliResult run(const std::string& args, const std::string& stdin_file = "") const {
        const auto out = path("stdout.txt");
        const auto err = path("stderr.txt");
        std::string cmd = std::string(LCPD_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        if (!stdin_file.empty()) cmd += " <" + stdin_file;
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, ThresholdValues) {
    const auto r = run("threshold --pi0 0.05 --p 100 --w 50");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "exact=4.734291\nasymptotic=4.439222\nunion=4.442128\n");
}

TEST_F(Cli, ThresholdConfigFileAndFlagOverride) {
    std::ofstream(path("t.cfg")) << "# run\npi0=0.05\np=100\nw=10\n";
    const auto from_file = run("threshold --config " + path("t.cfg").string() + " --w 50");
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_EQ(from_file.out, run("threshold --pi0 0.05 --p 100 --w 50").out);
    const auto undefined = run("threshold --pi0 0.6 --p 100 --w 50");
    ASSERT_EQ(undefined.code, 0);
    EXPECT_NE(undefined.out.find("union=undefined"), std::string::npos);
}

TEST_F(Cli, ValidationErrorsExitTwo) {
    EXPECT_EQ(run("threshold --pi0 0 --p 100 --w 50").code, 2);
    EXPECT_EQ(run("gen sparse --p 50 --density 1.5").code, 2);
    EXPECT_EQ(run("experiment power --preset nope").code, 2);
    EXPECT_EQ(run("threshold --bogus 3").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    std::ofstream(path("bad.cfg")) << "colour=red\n";
    EXPECT_EQ(run("threshold --config " + path("bad.cfg").string()).code, 2);
}

TEST_F(Cli, GenMatrixIsReproducibleAndHasManifest) {
    const auto a = path("a.txt").string();
    const auto b = path("b.txt").string();
    ASSERT_EQ(run("gen sparse --p 30 --density 0.1 --seed 4 --out " + a).code, 0);
    ASSERT_EQ(run("gen sparse --p 30 --density 0.1 --seed 4 --out " + b).code, 0);
    const std::string text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    EXPECT_EQ(text.substr(0, 5), "p 30\n");
    ASSERT_TRUE(fs::exists(a + ".manifest.json"));
    const auto manifest = nlohmann::json::parse(slurp(a + ".manifest.json"));
    EXPECT_EQ(manifest["command"], "gen sparse");
    EXPECT_EQ(manifest["outputs"].size(), 1U);
}

TEST_F(Cli, MonitorEmitsChangePointEvents) {
    const auto pre = path("pre.txt").string();
    const auto post = path("post.txt").string();
    const auto stream = path("stream.ndjson").string();
    ASSERT_EQ(run("gen chain --p 10 --rho 0 --out " + pre).code, 0);
    ASSERT_EQ(run("gen chain --p 10 --rho 0.5 --out " + post).code, 0);
    ASSERT_EQ(run("gen stream --omega " + pre + " --omega_post " + post + " --t0 300 --length 500 --seed 3 --out " +
                  stream)
                  .code,
              0);
    const auto r = run("monitor --omega " + pre + " --w 50 --input " + stream);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    int after_change = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["type"], "change_point");
        ASSERT_TRUE(j.contains("t") && j.contains("stat") && j.contains("zeta"));
        EXPECT_GE(j["stat"].get<double>(), j["zeta"].get<double>());
        if (j["t"].get<int>() > 300) ++after_change;
    }
    EXPECT_GE(after_change, 1);
    EXPECT_EQ(r.out, run("monitor --omega " + pre + " --w 50", stream).out);
}

TEST_F(Cli, MonitorReadsCsvAndTraces) {
    const auto pre = path("pre.txt").string();
    const auto stream = path("stream.csv").string();
    ASSERT_EQ(run("gen chain --p 4 --rho 0.2 --out " + pre).code, 0);
    ASSERT_EQ(run("gen stream --omega " + pre + " --length 20 --format csv --out " + stream).code, 0);
    const auto r = run("monitor --omega " + pre + " --w 10 --zeta 1e9 --trace --input " + stream);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string first;
    std::getline(lines, first);
    EXPECT_EQ(first, "{\"t\":1,\"stat\":null}");
    int count = 1;
    std::string line;
    while (std::getline(lines, line)) ++count;
    EXPECT_EQ(count, 20);
}

TEST_F(Cli, MalformedRowExitsThree) {
    std::ofstream rows(path("rows.ndjson"));
    for (int t = 1; t <= 16; ++t) rows << "{\"t\":" << t << ",\"x\":[0.1,0.2,0.3]}\n";
    rows << "{\"t\":17,\"x\":[0.1,\n";
    rows.close();
    const auto r = run("monitor --p 3 --zeta 5 --n_burnin 50 --w 4 --input " + path("rows.ndjson").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("line 17"), std::string::npos) << r.err;
}

TEST_F(Cli, ExperimentOutputsAreByteIdenticalAcrossJobs) {
    const std::string common = "experiment fa-calibration --model chain --p 10 --w 20 --replicates 200 --seed 5";
    const auto a = path("a").string();
    const auto b = path("b").string();
    ASSERT_EQ(run(common + " --jobs 1 --out " + a).code, 0);
    ASSERT_EQ(run(common + " --jobs 4 --out " + b).code, 0);
    EXPECT_EQ(slurp(a + ".csv"), slurp(b + ".csv"));
    EXPECT_EQ(slurp(a + ".ndjson"), slurp(b + ".ndjson"));
    const auto manifest = nlohmann::json::parse(slurp(a + ".manifest.json"));
    EXPECT_EQ(manifest["master_seed"], 5);
    EXPECT_EQ(manifest["outputs"].size(), 2U);
    const auto to_stdout = run(common);
    ASSERT_EQ(to_stdout.code, 0);
    EXPECT_EQ(to_stdout.out, slurp(a + ".csv"));
}
