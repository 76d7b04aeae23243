#include <gtest/gtest.h>

#include "memcap/config.hpp"
#include "memcap/error.hpp"

using namespace memcap;

TEST(Config, DefaultsCarryTheBestModelDims) {
  RunConfig c;
  EXPECT_EQ(c.L, 196u);
  EXPECT_EQ(c.D, 512u);
  EXPECT_EQ(c.K, 1479u);
  EXPECT_EQ(c.M, 797u);
  EXPECT_EQ(c.E, 402u);
  EXPECT_EQ(c.train.lr, 2e-5);
  EXPECT_EQ(c.train.beta1, 0.8);
  EXPECT_EQ(c.train.beta2, 0.999);
  EXPECT_EQ(c.train.batch_size, 16u);
}

TEST(Config, ParsesKeyValueLinesWithComments) {
  auto c = parse_config("# tiny\nK = 16\nM=8 # memory\n\nvariant=ATT_TEM\nlr=0.01\nuse_bias=false\n");
  EXPECT_EQ(c.K, 16u);
  EXPECT_EQ(c.M, 8u);
  EXPECT_EQ(c.variant, AblationVariant::AttTem);
  EXPECT_EQ(c.train.lr, 0.01);
  EXPECT_FALSE(c.use_bias);
}

TEST(Config, SerializeRoundTrips) {
  auto c = parse_config("K=16\nlr=0.003\nsynth_noise=0.1\ndataset=manifest\ntrain_manifest=a/b.manifest\n");
  auto back = parse_config(c.serialize());
  EXPECT_EQ(back.serialize(), c.serialize());
  EXPECT_EQ(back.train.lr, 0.003);
  EXPECT_EQ(back.train_manifest, "a/b.manifest");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("unknown_key=1\n"), UsageError);
  EXPECT_THROW(parse_config("K\n"), UsageError);
  EXPECT_THROW(parse_config("K=-3\n"), UsageError);
  EXPECT_THROW(parse_config("lr=fast\n"), UsageError);
  EXPECT_THROW(parse_config("use_bias=maybe\n"), UsageError);
  EXPECT_THROW(parse_config("variant=BOTH\n"), UsageError);
}

TEST(Config, Validation) {
  auto c = parse_config("L=9\nD=12\nK=8\nM=8\nE=8\n");
  EXPECT_NO_THROW(c.validate());
  c.L = 10;
  EXPECT_THROW(c.validate(), UsageError);
  c = parse_config("L=9\ndataset=manifest\n");
  EXPECT_THROW(c.validate(), UsageError);
  c = parse_config("L=9\ndataset=video\n");
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Config, SyntheticSpecFollowsFeatureDims) {
  auto c = parse_config("L=16\nD=7\nsynth_frames=12\nsynth_events=3\n");
  auto spec = c.synthetic_spec();
  EXPECT_EQ(spec.grid, 4u);
  EXPECT_EQ(spec.depth, 7u);
  EXPECT_EQ(spec.frames, 12u);
  EXPECT_EQ(spec.events, 3u);
}
