#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "urbanrisk/eval/splits.hpp"
#include "urbanrisk/service/risk_layer.hpp"

#ifdef URBANRISK_CLI_PATH

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("urbanrisk_cli_" + std::to_string(::getpid())));
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static CliRun cli(const std::string& args) {
    const auto out = *dir_ / "stdout.txt", err = *dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + URBANRISK_CLI_PATH + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }
  static std::string quick() { return std::string("--config \"") + URBANRISK_CONFIG_DIR "/quick.toml\" --seed 3 "; }
  static std::string path(const std::string& name) { return "\"" + (*dir_ / name).string() + "\""; }

  static fs::path* dir_;
};
fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, FullChainProducesArtifacts) {
  auto r = cli(quick() + "generate-data --out " + path("corpus"));
  ASSERT_EQ(r.code, 0) << r.err;

  r = cli(quick() + "split --data " + path("corpus") + " --out " + path("manifest.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = urbanrisk::eval::manifest_from_json(json::parse(slurp(*dir_ / "manifest.json")));
  EXPECT_TRUE(urbanrisk::eval::audit_manifest(manifest).empty());

  r = cli(quick() + "train --data " + path("corpus") + " --manifest " + path("manifest.json") + " --out " +
          path("model.json") + " --history " + path("history.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(*dir_ / "history.csv").rfind("epoch,", 0), 0u);

  r = cli(quick() + "evaluate --data " + path("corpus") + " --manifest " + path("manifest.json") + " --model " +
          path("model.json") + " --out " + path("report.json") + " --reliability " + path("rel.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(slurp(*dir_ / "report.json"));
  EXPECT_TRUE(report.contains("report"));
  EXPECT_FALSE(slurp(*dir_ / "rel.csv").empty());

  r = cli(quick() + "condition --data " + path("corpus") + " --out " + path("weights.geojson"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(*dir_ / "weights.geojson")).at("type"), "FeatureCollection");
  EXPECT_NO_THROW(json::parse(r.out));

  r = cli(quick() + "scenario --data " + path("corpus") + " --model " + path("model.json") + " --prompt \"" +
          URBANRISK_CONFIG_DIR "/green_roofs.json\" --out " + path("scenario.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(json::parse(slurp(*dir_ / "scenario.json")).at("variants").empty());

  r = cli(quick() + "export-layer --data " + path("corpus") + " --out " + path("layer.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(urbanrisk::service::risk_layer_from_json(json::parse(slurp(*dir_ / "layer.json"))).consistent());

  r = cli(quick() + "serve --data " + path("corpus") + " --port 0 --duration-s 0.3");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("listening on 127.0.0.1:"), std::string::npos) << r.out;
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  auto r = cli("");
  EXPECT_EQ(r.code, 2);
  r = cli("train --data x");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
  r = cli("frobnicate");
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, RuntimeErrorsExitOneWithKind) {
  auto r = cli("split --data " + path("does-not-exist") + " --out " + path("m.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;

  std::ofstream(*dir_ / "bad.toml") << "[hazard]\nnot_a_key = 1\n";
  r = cli("--config " + path("bad.toml") + " generate-data --out " + path("c2"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: config:", 0), 0u) << r.err;
}

}  // namespace

#endif
