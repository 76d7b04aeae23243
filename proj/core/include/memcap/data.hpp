#pragma once

// Dataset plumbing.
//
// Feature file (MVFM1), one video per file, all integers little-endian:
//   bytes 0..4   "MVFM1"
//   uint32       N  frames
//   uint32       L  locations per frame
//   uint32       D  feature depth
//   float32[N*L*D] row-major frame maps
//
// Caption TSV: UTF-8 lines "id<TAB>caption"; an id may repeat for multiple
// references. A dataset manifest is a UTF-8 text file listing one feature
// file path per line (relative paths resolve against the manifest's
// directory); the sample id is the feature file's stem and the captions live
// next to the manifest in "<manifest stem>.captions.tsv".

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memcap/tensor.hpp"
#include "memcap/vocabulary.hpp"

namespace memcap {

inline constexpr std::size_t kMaxCaptionWords = 30;

struct VideoSample {
  std::string id;
  std::vector<Tensor> frames;      // N maps, each L x D
  std::vector<TokenSeq> captions;  // BOS ... EOS

  std::size_t locations() const { return frames.front().rows(); }
  std::size_t depth() const { return frames.front().cols(); }
};

// Throws UsageError/DimensionError when the sample breaks its invariants:
// N >= 1, identical L x D frames, every caption BOS..EOS with at most
// kMaxCaptionWords + 2 ids.
void validate_sample(const VideoSample& sample);

void write_feature_file(const std::filesystem::path& path, std::span<const Tensor> frames);
// Throws FormatError with the failing byte offset on bad magic, truncation,
// trailing bytes or zero extents.
std::vector<Tensor> read_feature_file(const std::filesystem::path& path);
std::vector<Tensor> parse_feature_bytes(std::string_view bytes);
std::string encode_feature_bytes(std::span<const Tensor> frames);

// Lowercases, splits on anything other than ASCII letters/digits (bytes >=
// 0x80 are kept as word characters), drops empty pieces.
std::vector<std::string> tokenize(std::string_view text);
// tokenize, clip to `max_words`, map through `vocab` (unknown -> UNK) and
// wrap with BOS/EOS.
TokenSeq preprocess_caption(std::string_view text, const Vocabulary& vocab,
                            std::size_t max_words = kMaxCaptionWords);

// Uniform stride floor(i (N-1) / (n-1)) when N >= n; with N < n every frame
// is taken once and the last one repeats to pad.
std::vector<std::size_t> sample_frame_indices(std::size_t available, std::size_t n);
std::vector<Tensor> sample_frames(std::span<const Tensor> frames, std::size_t n);

using CaptionTable = std::vector<std::pair<std::string, std::string>>;
CaptionTable read_caption_tsv(const std::filesystem::path& path);
void write_caption_tsv(const std::filesystem::path& path, const CaptionTable& rows);

struct RawVideo {
  std::string id;
  std::vector<Tensor> frames;
  std::vector<std::string> captions;  // untokenized references
};

std::filesystem::path captions_path_for(const std::filesystem::path& manifest);
std::vector<RawVideo> load_manifest(const std::filesystem::path& manifest);
// Writes one feature file per video into `dir`, the manifest and the caption
// sidecar. Returns the manifest path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, std::string_view name,
                                     std::span<const RawVideo> videos);

// Adds every caption token of `videos` to `vocab` in first-seen order.
void extend_vocabulary(Vocabulary& vocab, std::span<const RawVideo> videos);
std::vector<VideoSample> to_samples(std::span<const RawVideo> videos, const Vocabulary& vocab);

// Reads a manifest and tokenizes its captions with `vocab`.
std::vector<VideoSample> load_features(const std::filesystem::path& manifest,
                                       const Vocabulary& vocab);

}  // namespace memcap
