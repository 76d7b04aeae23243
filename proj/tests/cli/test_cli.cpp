#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "memcap/data.hpp"
#include "memcap/params.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kSmoke = std::string(MEMCAP_CONFIG_DIR) + "/smoke.cfg";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = memcap::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string field; std::getline(in, field, sep);) out.push_back(field);
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("memcap_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

// One short training run shared by the checkpoint-driven tests.
class TrainedCheckpoint : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("trained");
    const auto r = run({"train", "--config", kSmoke, "--set", "epochs=40", "--out", dir_.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path checkpoint() { return dir_ / "best.mckp"; }
  static inline fs::path dir_;
};

}  // namespace

TEST(Cli, MissingDatasetExitsWithUsageCode) {
  const auto r = run({"train", "--config", kSmoke, "--set", "dataset=manifest", "--set",
                      "train_manifest=/nonexistent/train.manifest"});
  EXPECT_EQ(r.code, memcap::cli::kExitUsage);
  EXPECT_NE(r.err.find("/nonexistent/train.manifest"), std::string::npos);
}

TEST(Cli, BadInvocationsExitWithUsageCode) {
  EXPECT_EQ(run({}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"train"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"train", "--config", "/nonexistent.cfg"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"train", "--config", kSmoke, "--frames", "5"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"train", "--config", kSmoke, "--variant", "BOTH"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"train", "--config", kSmoke, "--set", "K"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"fly"}).code, memcap::cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, memcap::cli::kExitOk);
}

TEST(Cli, SmokeTrainingWritesOneLogRowPerEpoch) {
  const auto dir = scratch("smoke");
  const auto start = std::chrono::steady_clock::now();
  const auto r = run({"train", "--config", kSmoke, "--out", dir.string()});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(seconds, 60.0);
  EXPECT_NE(r.out.find("epochs=2 "), std::string::npos);

  const auto log = lines(slurp(dir / "train_log.csv"));
  ASSERT_EQ(log.size(), 3u);  // header plus epochs = 2
  EXPECT_EQ(log[0], "epoch,train_loss,val_loss,wall_seconds");
  EXPECT_EQ(split(log[1], ',').size(), 4u);
  EXPECT_EQ(split(log[2], ',')[0], "2");
  EXPECT_TRUE(fs::exists(dir / "best.mckp"));
  EXPECT_TRUE(fs::exists(dir / "last.mckp"));
  EXPECT_TRUE(fs::exists(dir / "config.cfg"));
}

TEST(Cli, FixedSeedTrainingIsBitReproducible) {
  // The output directory is part of the embedded config, so both runs share it.
  const auto dir = scratch("repro");
  const std::vector<std::string> args{"train", "--config", kSmoke, "--seed", "5", "--out", dir.string()};
  ASSERT_EQ(run(args).code, 0);
  const auto first_last = slurp(dir / "last.mckp");
  const auto first_best = slurp(dir / "best.mckp");
  ASSERT_EQ(run(args).code, 0);
  EXPECT_TRUE(slurp(dir / "last.mckp") == first_last);
  EXPECT_TRUE(slurp(dir / "best.mckp") == first_best);
}

TEST(Cli, DivergenceExitsWithNumericCode) {
  const auto dir = scratch("diverge");
  const auto r = run({"train", "--config", kSmoke, "--set", "lr=1e300", "--out", dir.string()});
  EXPECT_EQ(r.code, memcap::cli::kExitNumeric) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir / "last_good.mckp"));
}

TEST_F(TrainedCheckpoint, GenerateWritesOneTsvLinePerVideo) {
  const auto r = run({"generate", "--checkpoint", checkpoint().string(), "--split", "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) EXPECT_EQ(split(row, '\t').size(), 2u) << row;
  EXPECT_EQ(split(rows[0], '\t')[0], "syn00012");
}

TEST_F(TrainedCheckpoint, BeamOfWidthOneEqualsGreedy) {
  const auto greedy = run({"generate", "--checkpoint", checkpoint().string(), "--mode", "greedy"});
  const auto beam = run({"generate", "--checkpoint", checkpoint().string(), "--mode", "beam", "--beam", "1"});
  ASSERT_EQ(greedy.code, 0);
  ASSERT_EQ(beam.code, 0);
  EXPECT_EQ(greedy.out, beam.out);
}

TEST_F(TrainedCheckpoint, AttentionRowsSumToOne) {
  const auto csv = dir_ / "alpha.csv";
  const auto r = run({"generate", "--checkpoint", checkpoint().string(), "--frames", "4", "--dump-attention",
                      csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(csv));
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], "id,position,word,alpha_0,alpha_1,alpha_2,alpha_3");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = split(rows[i], ',');
    ASSERT_EQ(fields.size(), 7u);
    double total = 0.0;
    for (std::size_t k = 3; k < fields.size(); ++k) total += std::stod(fields[k]);
    EXPECT_NEAR(total, 1.0, 1e-9) << rows[i];
  }
}

TEST_F(TrainedCheckpoint, FeatureShapeMismatchNamesBothShapes) {
  const auto dir = scratch("mismatch");
  fs::create_directories(dir);
  memcap::Rng rng(3);
  const std::vector<memcap::Tensor> frames{memcap::uniform_tensor({4, 3}, 1.0, rng, false)};
  memcap::write_feature_file(dir / "odd.mvfm", frames);
  const auto r = run({"generate", "--checkpoint", checkpoint().string(), "--features", (dir / "odd.mvfm").string()});
  EXPECT_EQ(r.code, memcap::cli::kExitUsage);
  EXPECT_NE(r.err.find("4x3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("9x12"), std::string::npos) << r.err;
}

TEST_F(TrainedCheckpoint, GenerateFromSynthesizedManifest) {
  const auto dir = scratch("synth");
  const auto s = run({"synth", "--config", kSmoke, "--out", dir.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_TRUE(fs::exists(dir / "test.manifest"));
  EXPECT_TRUE(fs::exists(dir / "test.captions.tsv"));

  const auto from_manifest =
      run({"generate", "--checkpoint", checkpoint().string(), "--features", (dir / "test.manifest").string()});
  const auto from_split = run({"generate", "--checkpoint", checkpoint().string(), "--split", "test"});
  ASSERT_EQ(from_manifest.code, 0) << from_manifest.err;
  EXPECT_EQ(from_manifest.out, from_split.out);
}

TEST_F(TrainedCheckpoint, InspectListsEveryParameterTensor) {
  const auto r = run({"inspect", "--checkpoint", checkpoint().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_GE(rows.size(), 3u);
  EXPECT_EQ(rows[0].rfind("variant=IAM_TEM ", 0), 0u);
  EXPECT_EQ(rows[1], "name\tshape\tl2_norm");
  EXPECT_EQ(rows[2].rfind("tem.W_p\t9x16\t", 0), 0u);
}

TEST(Cli, EvaluateReportsScoresAndPerSentenceTable) {
  const auto dir = scratch("evaluate");
  fs::create_directories(dir);
  memcap::write_caption_tsv(dir / "refs.tsv", {{"v1", "a man is slicing a tomato"},
                                               {"v1", "someone cuts a tomato"},
                                               {"v2", "a cat is playing with a toy"}});
  memcap::write_caption_tsv(dir / "cands.tsv",
                            {{"v1", "a man is slicing a tomato"}, {"v2", "a cat is playing with a toy"}});
  const auto r = run({"evaluate", "--candidates", (dir / "cands.tsv").string(), "--references",
                      (dir / "refs.tsv").string(), "--per-sentence", (dir / "per.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("pairs=2 bleu1=1.0000 bleu2=1.0000 bleu3=1.0000 bleu4=1.0000 cider=", 0), 0u) << r.out;
  const auto per = lines(slurp(dir / "per.tsv"));
  ASSERT_EQ(per.size(), 3u);
  EXPECT_EQ(per[0], "id\tbleu4\tcider");
  EXPECT_EQ(split(per[1], '\t')[1], "1");

  memcap::write_caption_tsv(dir / "stray.tsv", {{"v9", "a dog"}});
  EXPECT_EQ(run({"evaluate", "--candidates", (dir / "stray.tsv").string(), "--references",
                 (dir / "refs.tsv").string()})
                .code,
            memcap::cli::kExitUsage);
}

TEST(Cli, AblateGridHasFiveVariantsByFiveMetrics) {
  const auto single = run({"ablate", "--config", kSmoke, "--set", "epochs=1"});
  ASSERT_EQ(single.code, 0) << single.err;
  auto rows = lines(single.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "variant\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU-4\tCIDEr");
  const std::vector<std::string> tags{"ATT_NO_TEM", "ATT_TEM", "NO_IAM_TEM", "IAM_NO_TEM", "IAM_TEM"};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i], '\t');
    ASSERT_EQ(cells.size(), 6u);
    EXPECT_EQ(cells[0], tags[i - 1]);
    EXPECT_EQ(cells[1].find("±"), std::string::npos);
  }

  const auto seeded = run({"ablate", "--config", kSmoke, "--set", "epochs=1", "--seeds", "2"});
  ASSERT_EQ(seeded.code, 0) << seeded.err;
  rows = lines(seeded.out);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i], '\t');
    ASSERT_EQ(cells.size(), 6u);
    for (std::size_t k = 1; k < cells.size(); ++k) EXPECT_NE(cells[k].find("±"), std::string::npos) << cells[k];
  }
}
