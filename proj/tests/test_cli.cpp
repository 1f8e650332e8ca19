#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include "stagecause/stagecause.hpp"

namespace stagecause {
namespace {

namespace fs = std::filesystem;

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(STAGECAUSE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(STAGECAUSE_DATA) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("stagecause_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, CidOnCsiTreeFixtures) {
  auto r = run("cid " + data("csi_tree.json") + " " + data("swapped_tree.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(json::parse(r.out)["total"], 0.5);
  auto same = run("cid " + data("csi_tree.json") + " " + data("csi_tree.json"));
  EXPECT_EQ(json::parse(same.out)["total"], 0.0);
}

TEST_F(Cli, CidRejectsIncompatibleLevels) {
  auto j = json::parse(read_file(data("swapped_tree.json")));
  j["levels"]["X2"] = {"a", "b"};
  write_file(path("other.json"), j.dump());
  auto r = run("cid " + data("csi_tree.json") + " " + path("other.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("levels"), std::string::npos);
}

TEST_F(Cli, DiscoverBivariate) {
  ASSERT_EQ(run("sample " + data("bivariate.json") + " --n 5000 --seed 3 --out " + path("d.csv")).status, 0);
  auto r = run("discover " + path("d.csv") + " --out " + path("m.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  auto report = json::parse(r.out);
  EXPECT_EQ(report["order"], json({"X2", "X1"}));
  EXPECT_EQ(report["provenance"]["version"], kVersion);
  auto model = read_tree_json(path("m.json"));
  EXPECT_EQ(model.staging[1], (std::vector<StageId>{0, 1, 1}));
  auto ex = json::parse(run("discover " + path("d.csv") + " --mode exhaustive").out);
  EXPECT_EQ(ex["all_orders"].size(), 2u);
  EXPECT_EQ(ex["score"], report["score"]);
}

TEST_F(Cli, DiscoverErrors) {
  write_file(path("empty.csv"), "");
  auto r = run("discover " + path("empty.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("no rows"), std::string::npos);
  write_file(path("bad.csv"), "A,B\n0,1\n1\n");
  r = run("discover " + path("bad.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("line 3"), std::string::npos);
  EXPECT_NE(run("discover " + path("missing.csv")).status, 0);
  EXPECT_NE(run("discover " + path("bad.csv") + " --method nope").status, 0);
}

TEST_F(Cli, ConstantColumnCollapses) {
  std::string csv = "A,B\n";
  for (int r = 0; r < 200; ++r) csv += std::to_string(r % 2) + ",0\n";
  write_file(path("c.csv"), csv);
  write_file(path("levels.json"), R"({"B": ["0", "1"]})");
  EXPECT_NE(run("discover " + path("c.csv")).status, 0);
  auto r = run("discover " + path("c.csv") + " --levels " + path("levels.json") + " --out " + path("m.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  auto t = read_tree_json(path("m.json"));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(t.num_stages(i), 1u);
  auto fitted = run("fit " + path("c.csv") + " --levels " + path("levels.json") + " --structure " + path("m.json") +
                    " --smoothing 1");
  ASSERT_EQ(fitted.status, 0) << fitted.out;
  EXPECT_TRUE(tree_from_json(json::parse(fitted.out)).is_interior());
}

TEST_F(Cli, FitWithOrder) {
  ASSERT_EQ(run("sample " + data("csi_tree.json") + " --n 2000 --seed 1 --out " + path("d.csv")).status, 0);
  auto r = run("fit " + path("d.csv") + " --order X3,X1,X2");
  ASSERT_EQ(r.status, 0) << r.out;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["order"], json({"X3", "X1", "X2"}));
  EXPECT_TRUE(j.contains("bic"));
  EXPECT_NE(run("fit " + path("d.csv") + " --order X3,X1,Q").status, 0);
}

TEST_F(Cli, GenerateSampleRoundTrip) {
  ASSERT_EQ(run("generate --p 4 --levels 3 --k 2 --seed 5 --out " + path("t.json")).status, 0);
  auto t = read_tree_json(path("t.json"));
  EXPECT_EQ(t.num_vars(), 4u);
  EXPECT_EQ(json::parse(read_file(path("t.json")))["provenance"]["seed"], 5);
  auto a = run("sample " + path("t.json") + " --n 20 --seed 9");
  auto b = run("sample " + path("t.json") + " --n 20 --seed 9");
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(parse_dataset_csv(a.out, {}).num_rows(), 20u);
}

TEST_F(Cli, SidKendallConvert) {
  write_file(path("g.json"), R"({"variables":["A","B"],"edges":[["A","B"]]})");
  write_file(path("h.json"), R"({"variables":["A","B"],"edges":[]})");
  EXPECT_EQ(run("sid " + path("g.json") + " " + path("h.json")).out, "1\n");
  EXPECT_EQ(run("kendall A,B,C,D,E E,D,C,B,A").out, "10\n");
  EXPECT_EQ(run("kendall " + data("csi_tree.json") + " " + data("swapped_tree.json")).out, "1\n");

  auto dag = json::parse(run("convert --to dag " + data("csi_tree.json")).out);
  EXPECT_EQ(dag["edges"], json::parse(R"([["X1","X3"],["X2","X3"]])"));
  write_file(path("dag.json"), dag.dump());
  auto tree = json::parse(run("convert --to tree " + path("dag.json")).out);
  EXPECT_EQ(tree["staging"][2], json({0, 1, 2, 3}));

  write_file(path("rev.json"), R"({"variables":["A","B"],"edges":[["B","A"]]})");
  auto pdag = json::parse(run("convert --to pdag " + path("g.json") + " " + path("rev.json")).out);
  EXPECT_EQ(pdag["undirected"], json::parse(R"([["A","B"]])"));
  auto none = json::parse(run("convert --to pdag " + path("g.json") + " " + path("h.json")).out);
  EXPECT_TRUE(none["undirected"].empty() && none["directed"].empty());
}

TEST_F(Cli, ExperimentDeterministic) {
  const std::string flags = " --p 2,3 --k 2 --l 2 --n 100,300 --reps 2 --seed 4 --threads 2";
  ASSERT_EQ(run("experiment" + flags + " --out " + path("a.csv")).status, 0);
  ASSERT_EQ(run("experiment" + flags + " --out " + path("b.csv")).status, 0);
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  EXPECT_EQ(parse_csv(read_file(path("a.csv"))).size(), 1u + 2 * 2 * 2 * 2);
  EXPECT_EQ(json::parse(read_file(path("a.csv") + ".meta.json"))["config"]["seed"], 4);
}

TEST_F(Cli, ExperimentYamlConfig) {
  write_file(path("c.yaml"), "p: [2]\nk: 2\nl: [3]\nN: [50]\nreps: 3\nmethods: [kmeans]\nseed: 7\n");
  ASSERT_EQ(run("experiment --config " + path("c.yaml") + " --out " + path("r.csv")).status, 0);
  auto recs = parse_csv(read_file(path("r.csv")));
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[1].second[5], "kmeans");
  write_file(path("bad.yaml"), "p: [2]\nbogus: 1\n");
  auto r = run("experiment --config " + path("bad.yaml") + " --out " + path("r2.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("line 2"), std::string::npos);
}

TEST_F(Cli, CidVsSid) {
  auto r = run("experiment --cid-vs-sid --pairs 30 --dag-p 4 --seed 2 --out " + path("cs.csv"));
  ASSERT_EQ(r.status, 0) << r.out;
  auto recs = parse_csv(read_file(path("cs.csv")));
  EXPECT_EQ(recs.size(), 31u);
  EXPECT_EQ(recs[0].second, (std::vector<std::string>{"pair_id", "sid", "cid"}));
  auto summary = json::parse(read_file(path("cs.csv") + ".summary.json"));
  EXPECT_TRUE(summary.contains("pearson"));
  EXPECT_TRUE(summary.contains("spearman"));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_EQ(run("--version").out, std::string(kVersion) + "\n");
}

}  // namespace
}  // namespace stagecause
