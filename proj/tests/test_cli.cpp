#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "fheprotect/cli.hpp"
#include "fheprotect/gallery_io.hpp"
#include "fheprotect/pipeline.hpp"

using namespace fheprotect;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fheprotect");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fheprotect_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run_cli({"bench-sum", "--bogus"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_FALSE(v.out.empty());
}

TEST(Cli, BenchSumCsvAndManifest) {
  const auto dir = temp_dir("bench");
  const auto r = run_cli({"--out-dir", dir.string(), "bench-sum", "--sizes", "2..64", "--no-wall"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "bench_sum.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 6 * 3);
  const auto m = nlohmann::json::parse(slurp(dir / "run_manifest.json"));
  EXPECT_EQ(m["command"], "bench-sum");
  EXPECT_EQ(m["outputs"][0], "bench_sum.csv");
  EXPECT_TRUE(fs::exists(dir / "run_config.ini"));
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, DataErrorReportsKind) {
  const auto dir = temp_dir("err");
  const auto r = run_cli({"--out-dir", dir.string(), "gen-params", "--m", "5", "--overlap", "0", "--c-range", "2"});
  EXPECT_EQ(r.code, cli::kExitDataError);
  EXPECT_NE(r.err.find("InfeasibleParams"), std::string::npos) << r.err;
  const auto missing = run_cli({"--out-dir", dir.string(), "identify", "--gallery", (dir / "none").string(),
                                "--params", "x.json", "--probe", "y.csv"});
  EXPECT_EQ(missing.code, cli::kExitDataError);
  EXPECT_NE(missing.err.find("Io"), std::string::npos) << missing.err;
}

TEST(Cli, EnrollIdentifyMatchesLibrary) {
  const auto dir = temp_dir("ident");
  const std::vector<std::string> data_args{"--num-ids", "6", "--samples-per-id", "2"};
  auto args = std::vector<std::string>{"--out-dir", (dir / "data").string(), "--seed", "3", "gen-data"};
  args.insert(args.end(), data_args.begin(), data_args.end());
  ASSERT_EQ(run_cli(args).code, 0);
  const auto csv = (dir / "data" / "dataset.csv").string();
  auto r = run_cli({"--out-dir", (dir / "enr").string(), "--seed", "3", "enroll", "--data", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_cli({"--out-dir", (dir / "id").string(), "identify", "--gallery", (dir / "enr" / "gallery").string(),
               "--params", (dir / "enr" / "params.json").string(), "--probe", csv, "--top", "1"});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto ctx = EncryptionContext::create(ContextParams{128, 24, 0.0}, 1);
  const Pipeline pipe(PipelineConfig{}, ctx, fit_inv_sqrt(8, kOctavePairDomain, 256));
  const auto gallery = load_gallery(dir / "enr" / "gallery", &ctx);
  const auto store = load_params_store(dir / "enr" / "params.json");
  const auto probes = read_dataset_csv(csv);
  std::istringstream lines(r.out);
  std::string line;
  int correct = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    ASSERT_TRUE(std::getline(lines, line));
    const auto best = pipe.identify(probes[i], gallery, store).front();
    EXPECT_NE(line.find("subject=" + std::to_string(best.subject_id) + " "), std::string::npos) << line;
    correct += best.subject_id == probes[i].subject_id;
  }
  EXPECT_GE(correct, 10);
  std::istringstream out_csv(slurp(dir / "id" / "identify.csv"));
  std::getline(out_csv, line);
  EXPECT_EQ(line, "probe,probe_subject,rank,subject_id,score");
}

TEST(Cli, ConfigFileSuppliesOptions) {
  const auto dir = temp_dir("config");
  std::ofstream(dir / "run.ini") << "seed=11\n[gen-params]\ncount=3\nm=4\noverlap=1\n";
  const auto r = run_cli({"--config", (dir / "run.ini").string(), "--out-dir", dir.string(), "gen-params"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto params = nlohmann::json::parse(slurp(dir / "params.json"));
  ASSERT_EQ(params.size(), 3u);
  EXPECT_EQ(params[0]["m"], 4);
  EXPECT_EQ(params[0]["overlap"], 1);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "run_manifest.json"))["seed"], 11);
}
