#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xgbm/cli.hpp"
#include "xgbm/zeroth_order.hpp"

using namespace xgbm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {
const char* safe_config = R"({"model":"verhulst","s0":100,"v0":0.18,"grid":[0,0.25],"kappa":[8],"theta":[0.15],
  "lambda":[0.92],"rho":[-0.63],"r_d":[0.02],"r_f":[0],
  "mc":{"paths":2000,"steps_per_year":100,"seed":7},
  "sensitivity":{"maturities":[0.0833333333333333,0.25],"deltas":["PUT25","ATM"]}})";

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("xgbm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const std::string& content) const {
        const auto path = (dir_ / name).string();
        std::ofstream(path) << content;
        return path;
    }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "xgbm");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};
}  // namespace

TEST(Manifest, GitBlobHash) {
    EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_F(Cli, PriceJson) {
    const auto cfg = file("c.json", safe_config);
    ASSERT_EQ(run({"price", "--config", cfg, "--delta", "ATM"}), exit_ok) << err_.str();
    const auto j = json::parse(out_.str());
    ASSERT_EQ(j["results"].size(), 1u);
    const auto& r = j["results"][0];
    EXPECT_EQ(r["delta"], "ATM");
    EXPECT_NEAR(r["strike"].get<double>(), 100 * std::exp(0.005), 1e-9);
    EXPECT_EQ(r["corrections"].size(), 9u);
    double sum = r["base_bs"].get<double>();
    for (const auto& c : r["corrections"]) sum += c["contribution"].get<double>();
    EXPECT_NEAR(sum, r["total"].get<double>(), 1e-9);
    EXPECT_EQ(j["manifest"]["command"], "price");
    EXPECT_TRUE(j["manifest"].contains("started_at"));
}

TEST_F(Cli, PriceBackendsAgree) {
    const auto cfg = file("c.json", safe_config);
    ASSERT_EQ(run({"price", "--config", cfg, "--strike", "97", "--backend", "quadrature"}), exit_ok);
    const double q = json::parse(out_.str())["results"][0]["implied_vol"].get<double>();
    ASSERT_EQ(run({"price", "--config", cfg, "--strike", "97", "--backend", "recursion"}), exit_ok);
    const double r = json::parse(out_.str())["results"][0]["implied_vol"].get<double>();
    // Euler zeroth order in the recursion: well under a basis point here.
    EXPECT_NEAR(q, r, 1e-4);
}

TEST_F(Cli, ZeroVolOfVolGivesFlatPathVol) {
    std::string c = safe_config;
    c.replace(c.find("[0.92]"), 6, "[0]");
    const auto cfg = file("c.json", c);
    ASSERT_EQ(run({"price", "--config", cfg, "--strike", "103"}), exit_ok) << err_.str();
    const double iv = json::parse(out_.str())["results"][0]["implied_vol"].get<double>();
    const auto p = PiecewiseParams::flat(100, 0.18, 0.25, {8, 0.15, 0, -0.63, 0.02, 0});
    double y = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const double a = v0_explicit_verhulst(p, 0.25 * i / n), m = v0_explicit_verhulst(p, 0.25 * (i + 0.5) / n),
                     b = v0_explicit_verhulst(p, 0.25 * (i + 1) / n);
        y += 0.25 * (a * a + 4 * m * m + b * b) / (6.0 * n);
    }
    EXPECT_NEAR(iv, std::sqrt(y / 0.25), 1e-6);
}

TEST_F(Cli, MissingFieldNamesIt) {
    std::string c = safe_config;
    c.replace(c.find("\"v0\":0.18,"), 10, "");
    const auto cfg = file("c.json", c);
    EXPECT_EQ(run({"price", "--config", cfg}), exit_config_error);
    EXPECT_NE(err_.str().find("v0"), std::string::npos) << err_.str();
}

TEST_F(Cli, UsageErrors) {
    const auto cfg = file("c.json", safe_config);
    EXPECT_EQ(run({"price"}), exit_config_error);
    EXPECT_EQ(run({"bogus"}), exit_config_error);
    EXPECT_EQ(run({"price", "--config", (dir_ / "missing.json").string()}), exit_config_error);
    EXPECT_EQ(run({"price", "--config", cfg, "--delta", "PUT99"}), exit_config_error);
    EXPECT_EQ(run({"price", "--config", cfg, "--maturity", "2"}), exit_config_error);
    EXPECT_EQ(run({"sensitivity", "--config", cfg, "--vary", "kappa", "--values", ""}), exit_config_error);
    EXPECT_EQ(run({"sensitivity", "--config", cfg, "--vary", "mu", "--values", "1"}), exit_config_error);
    EXPECT_EQ(run({"mc-validate", "--config", cfg, "--estimator", "fancy"}), exit_config_error);
    EXPECT_EQ(run({"--help"}), exit_ok);
}

TEST_F(Cli, SensitivityIsReproducible) {
    const auto cfg = file("c.json", safe_config);
    const std::vector<std::string> args{"sensitivity", "--config", cfg, "--vary", "kappa", "--values", "6,10"};
    ASSERT_EQ(run(args), exit_ok) << err_.str();
    const std::string first = out_.str();
    ASSERT_EQ(run(args), exit_ok);
    EXPECT_EQ(out_.str(), first);
    std::istringstream in(first);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# manifest ", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "delta,maturity,kappa=6,kappa=10");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
    ASSERT_EQ(run({"sensitivity", "--config", cfg, "--vary", "kappa", "--values", "6,10", "--seed", "8"}), exit_ok);
    EXPECT_NE(out_.str(), first);
}

TEST_F(Cli, McValidateWritesOutputFile) {
    const auto cfg = file("c.json", safe_config);
    const auto out = (dir_ / "v.csv").string();
    ASSERT_EQ(run({"mc-validate", "--config", cfg, "--paths", "1000", "--out", out}), exit_ok) << err_.str();
    std::ifstream in(out);
    std::string manifest, header;
    std::getline(in, manifest);
    std::getline(in, header);
    EXPECT_NE(manifest.find("command=mc-validate"), std::string::npos);
    EXPECT_EQ(header.rfind("maturity,delta,strike,approx_vol,mixing_vol", 0), 0u);
}

TEST_F(Cli, CalibrateErrors) {
    const auto cfg = file("c.json", safe_config);
    const auto bad = file("q.csv", "maturity,delta_tag_or_strike,implied_vol\n0.25,ATM,0.17\n0.25,ATM\n");
    EXPECT_EQ(run({"calibrate", "--config", cfg, "--quotes", bad}), exit_config_error);
    EXPECT_NE(err_.str().find("line 3"), std::string::npos) << err_.str();
    std::string c = safe_config;
    c.insert(c.size() - 1, R"(,"calibration":{"bounds":{"lo":[5,0.2,0.1,-0.9],"hi":[4,0.3,1,0.9]}})");
    const auto infeasible = file("c2.json", c);
    const auto good = file("q2.csv", "maturity,delta_tag_or_strike,implied_vol\n0.25,ATM,0.17\n");
    EXPECT_EQ(run({"calibrate", "--config", infeasible, "--quotes", good}), exit_config_error);
    EXPECT_NE(err_.str().find("bounds"), std::string::npos) << err_.str();
}

TEST_F(Cli, CalibrateWritesParams) {
    const auto cfg = file("c.json", safe_config);
    const auto q = file("q.csv", "maturity,delta_tag_or_strike,implied_vol\n0.25,PUT25,0.182\n0.25,ATM,0.175\n");
    const auto params = (dir_ / "fit.json").string();
    const int code = run({"calibrate", "--config", cfg, "--quotes", q, "--params-out", params});
    EXPECT_TRUE(code == exit_ok || code == exit_partial_result) << err_.str();
    const auto j = json::parse(std::ifstream(params));
    EXPECT_EQ(j["grid"].size(), 2u);
    EXPECT_TRUE(j.contains("kappa"));
    const auto doc = json::parse(out_.str());
    ASSERT_EQ(doc["intervals"].size(), 1u);
    EXPECT_TRUE(doc["intervals"][0].contains("rmse_bp"));
    EXPECT_EQ(doc["complete"].get<bool>(), code == exit_ok);
}
