#pragma once

// Run configuration: a UTF-8 key=value file ('#' starts a comment) merged
// with command-line overrides. Every key has a default; unknown keys are
// rejected. serialize() writes every key in a fixed order and is what
// checkpoints embed.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memcap/model.hpp"
#include "memcap/synthetic.hpp"
#include "memcap/training.hpp"

namespace memcap {

struct RunConfig {
  // Model
  std::size_t L = 196;
  std::size_t D = 512;
  std::size_t K = 1479;
  std::size_t M = 797;
  std::size_t E = 402;
  std::size_t tem_layers = 2;
  std::size_t decoder_layers = 2;
  bool use_bias = true;
  AblationVariant variant = AblationVariant::IamTem;

  // Training
  TrainConfig train;

  // Data: "synthetic" or "manifest"
  std::string dataset = "synthetic";
  std::string train_manifest;
  std::string val_manifest;
  std::string test_manifest;
  std::size_t frames = 0;  // frames sampled per video; 0 keeps every frame

  // Synthetic task; the grid is sqrt(L) and the feature depth is D.
  std::size_t synth_train = 160;
  std::size_t synth_val = 20;
  std::size_t synth_test = 40;
  std::size_t synth_frames = 8;
  std::size_t synth_events = 2;
  double synth_noise = 0.05;
  std::uint64_t synth_seed = 1;

  // Outputs and decoding
  std::string output_dir = "memcap-run";
  std::size_t beam = 1;
  std::size_t max_len = 32;

  void set(std::string_view key, std::string_view value);
  std::string serialize() const;
  void validate() const;

  ModelConfig model_config(std::size_t vocab_size) const;
  SyntheticSpec synthetic_spec() const;
};

// Applies "key=value" lines on top of `base`. Throws UsageError naming the
// line on malformed input or an unknown key.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace memcap
