#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mcmot_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI with `args`; returns its exit status.
  int run(const std::string& args) const {
    const std::string cmd = std::string(MCMOT_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out() const { return slurp(dir_ / "stdout.txt"); }
  std::string err() const { return slurp(dir_ / "stderr.txt"); }
  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

  void simulate(const std::string& out, int seed = 7) {
    ASSERT_EQ(run("simulate --seed " + std::to_string(seed) + " --frames 120 --identities 4 --out " + p(out)), 0)
        << err();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, TrackAssociateEvalRoundTrip) {
  simulate("scn");
  for (int cam = 0; cam < 3; ++cam) {
    const std::string c = std::to_string(cam);
    ASSERT_EQ(run("track --detections " + p("scn/cam" + c + "/detections.csv") + " --embeddings " +
                  p("scn/cam" + c + "/embeddings.csv") + " --camera-id " + c + " --output " +
                  p("tr/cam" + c + ".tracks.csv")),
              0)
        << err();
    EXPECT_NE(err().find("fps"), std::string::npos) << err();
  }
  ASSERT_EQ(run("associate --tracks " + p("tr") + " --method both --truth " + p("scn/truth.json") +
                " --reproducible --output " + p("res.json")),
            0)
      << err();
  const nlohmann::json res = nlohmann::json::parse(slurp(p("res.json")));
  ASSERT_EQ(res["associations"].size(), 2u);
  EXPECT_EQ(res["associations"][0]["unique_count"], 4);

  ASSERT_EQ(run("eval --results " + p("res.json") + " --truth " + p("scn/truth.json") + " --output " + p("rep.json")),
            0)
      << err();
  const nlohmann::json rep = nlohmann::json::parse(slurp(p("rep.json")));
  ASSERT_EQ(rep.size(), 2u);
  EXPECT_EQ(rep[0]["l2_error"], 0.0);
}

TEST_F(Cli, CountIsByteStableWhenReproducible) {
  simulate("scn");
  ASSERT_EQ(run("count --scenario " + p("scn") + " --reproducible --output " + p("a.json")), 0) << err();
  EXPECT_NE(out().find("unique_count=4"), std::string::npos) << out();
  ASSERT_EQ(run("count --scenario " + p("scn") + " --threads 2 --reproducible --output " + p("b.json")), 0) << err();
  EXPECT_EQ(slurp(p("a.json")), slurp(p("b.json")));
}

TEST_F(Cli, SimulateIsByteStable) {
  simulate("a", 11);
  simulate("b", 11);
  for (const char* f : {"scenario.json", "truth.json", "cam1/detections.csv", "cam1/embeddings.csv"}) {
    EXPECT_EQ(slurp(p(std::string("a/") + f)), slurp(p(std::string("b/") + f))) << f;
  }
}

TEST_F(Cli, EmptyDetectionsGiveHeaderOnlyTracks) {
  std::ofstream(p("d.csv")) << "frame,det_id,x,y,w,h,confidence,class_id\n";
  ASSERT_EQ(run("track --detections " + p("d.csv") + " --output " + p("t/cam0.tracks.csv")), 0) << err();
  EXPECT_EQ(slurp(p("t/cam0.tracks.csv")), "frame,track_id,x,y,w,h,confidence\n");
}

TEST_F(Cli, ExitCodesFollowErrorCategory) {
  std::ofstream(p("bad.csv")) << "frame,det_id,x,y,w,h,confidence,class_id\n0,0,1,1,5,5,1.5,0\n";
  EXPECT_EQ(run("track --detections " + p("bad.csv") + " --output " + p("t.csv")), 5);
  EXPECT_NE(err().find("bad.csv:2"), std::string::npos) << err();

  EXPECT_EQ(run("track --detections " + p("missing.csv") + " --output " + p("t.csv")), 8);

  std::ofstream(p("cfg.json")) << R"({"max_agee": 3})";
  std::ofstream(p("ok.csv")) << "frame,det_id,x,y,w,h,confidence,class_id\n";
  EXPECT_EQ(run("track --detections " + p("ok.csv") + " --config " + p("cfg.json") + " --output " + p("t.csv")), 6);

  std::ofstream(p("e.csv")) << "frame,det_id,e0,e1\n0,3,0.5,0.5\n";
  std::ofstream(p("one.csv")) << "frame,det_id,x,y,w,h,confidence,class_id\n0,0,1,1,5,5,0.9,0\n";
  EXPECT_EQ(run("track --detections " + p("one.csv") + " --embeddings " + p("e.csv") + " --output " + p("t.csv")), 7);

  EXPECT_NE(run("track --output " + p("t.csv")), 0);  // missing required option
}
