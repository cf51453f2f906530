#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "volfair/cli.hpp"

namespace fs = std::filesystem;
using namespace volfair;

namespace {

std::string fixture(const std::string& name) { return std::string(VOLFAIR_FIXTURE_DIR) + "/" + name; }

struct Invocation {
  int status;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("volfair_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Verify, HiringOriginalIsUnfair) {
  Invocation r = run({"verify", fixture("hiring_original.dsl"), "--epsilon", "0.1"});
  EXPECT_EQ(r.out, "UNFAIR\n");
  EXPECT_EQ(r.status, cli::kUnfair);
}

TEST(Verify, SvmWithDefaultsIsFair) {
  Invocation r = run({"verify", fixture("svm_independent.dsl")});
  EXPECT_EQ(r.out, "FAIR\n");
  EXPECT_EQ(r.status, cli::kFair);
}

TEST(Verify, NoRoundsIsUnknown) {
  Invocation r = run({"verify", fixture("hiring_original.dsl"), "--max-rounds", "0"});
  EXPECT_EQ(r.out, "UNKNOWN lo=0 hi=inf\n");
  EXPECT_EQ(r.status, cli::kUnknown);
}

TEST(Verify, ParseErrorsExitWithUsageStatus) {
  fs::path dir = scratch("parse");
  std::ofstream(dir / "bad.dsl") << "x ~ gauss(0, 1)\ny = z + 1\n";
  Invocation r = run({"verify", (dir / "bad.dsl").string()});
  EXPECT_EQ(r.status, cli::kUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run({"verify", (dir / "missing.dsl").string()}).status, cli::kUnavailable);
  EXPECT_EQ(run({}).status, cli::kUsage);
  EXPECT_EQ(run({"verify", fixture("sum_query.dsl"), "--epsilon", "1.5"}).status, cli::kUsage);
  EXPECT_EQ(run({"verify", fixture("sum_query.dsl"), "--adf", "fancy"}).status, cli::kUsage);
}

TEST(Verify, MissingSolverExitsUnavailable) {
  Invocation r = run({"verify", fixture("hiring_original.dsl"), "--solver", "/nonexistent/solver"});
  EXPECT_EQ(r.status, cli::kUnavailable);
  EXPECT_TRUE(r.out.empty());
}

TEST(Verify, EventBoundsSumQuery) {
  Invocation r = run({"verify", fixture("sum_query.dsl"), "--event", "z >= 0", "--width", "0.04"});
  ASSERT_EQ(r.status, 0) << r.err;
  double lo = 0, hi = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "BOUNDS lo=%lf hi=%lf", &lo, &hi), 2) << r.out;
  EXPECT_LE(lo, 0.32736);
  EXPECT_GE(hi, 0.32736);
  EXPECT_LE(hi - lo, 0.04 + 1e-6);
  EXPECT_EQ(run({"verify", fixture("sum_query.dsl"), "--event", "w >= 0"}).status, cli::kUsage);
}

TEST(Verify, DumpPvc) {
  Invocation r = run({"verify", fixture("hiring_original.dsl"), "--dump-pvc"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("(declare-const colRank^i Real)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("; ethnicity ~ "), std::string::npos);
}

TEST(Verify, TraceFilesAreMonotone) {
  fs::path dir = scratch("trace");
  Invocation r = run({"verify", fixture("hiring_modified.dsl"), "--epsilon", "0.1", "--trace", (dir / "t.jsonl").string(),
               "--csv", (dir / "t.csv").string()});
  EXPECT_EQ(r.out, "FAIR\n");
  Invocation lint = run({"trace-lint", (dir / "t.jsonl").string()});
  EXPECT_EQ(lint.status, 0) << lint.out;
  EXPECT_EQ(lint.out, "ok\n");

  std::ifstream csv(dir / "t.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("round,elapsed,queries,ratio_lo,ratio_hi,", 0), 0u);

  // Swap the first and last records: bounds now loosen.
  std::ifstream in(dir / "t.jsonl");
  std::vector<std::string> recs;
  for (std::string l; std::getline(in, l);) recs.push_back(l);
  ASSERT_GE(recs.size(), 2u);
  std::swap(recs.front(), recs.back());
  std::ofstream bad(dir / "bad.jsonl");
  for (const auto& l : recs) bad << l << "\n";
  bad.close();
  Invocation broken = run({"trace-lint", (dir / "bad.jsonl").string()});
  EXPECT_EQ(broken.status, 1);
  EXPECT_NE(broken.out.find("decreased"), std::string::npos) << broken.out;
}

TEST(Verify, SameSeedSameVerdict) {
  Invocation a = run({"verify", fixture("hiring_modified.dsl"), "--epsilon", "0.1", "--seed", "7"});
  Invocation b = run({"verify", fixture("hiring_modified.dsl"), "--epsilon", "0.1", "--seed", "7"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.status, b.status);
}

TEST(Bench, ShippedSuite) {
  fs::path dir = scratch("bench");
  for (const char* name : {"hiring_original.dsl", "hiring_modified.dsl", "sum_query.dsl", "svm_independent.dsl",
                           "svm_bayesnet.dsl"}) {
    fs::copy_file(fixture(name), dir / name);
  }
  std::ofstream(dir / "corrupt.dsl") << "def popModel(:\n";
  Invocation r = run({"bench", dir.string(), "--width", "0.04", "--csv", (dir / "table.csv").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 7u) << r.out;
  EXPECT_EQ(rows[0], "fixture,result,rounds,queries,seconds,lo,hi,note");
  std::map<std::string, std::string> result;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto comma = rows[i].find(',');
    result[rows[i].substr(0, comma)] = rows[i].substr(comma + 1, rows[i].find(',', comma + 1) - comma - 1);
  }
  EXPECT_EQ(result["corrupt.dsl"], "ERROR");
  EXPECT_EQ(result["hiring_original.dsl"], "UNFAIR");
  EXPECT_EQ(result["hiring_modified.dsl"], "FAIR");
  EXPECT_EQ(result["svm_independent.dsl"], "FAIR");
  EXPECT_EQ(result["svm_bayesnet.dsl"], "FAIR");
  EXPECT_EQ(result["sum_query.dsl"], "BOUNDS");
  EXPECT_TRUE(fs::exists(dir / "table.csv"));
}

TEST(Bench, EmptyDirectory) {
  Invocation r = run({"bench", scratch("empty").string()});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "fixture,result,rounds,queries,seconds,lo,hi,note\n");
}

TEST(Tool, ExitStatusReachesTheShell) {
  std::string cmd = std::string(VOLFAIR_TOOL) + " verify " + fixture("hiring_original.dsl") +
                    " --max-rounds 0 > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
