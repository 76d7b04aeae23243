#include "memcap/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "memcap/error.hpp"

namespace memcap {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFeatureMagic = "MVFM1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UsageError("write failed for " + path.string());
}

}  // namespace

void validate_sample(const VideoSample& sample) {
  if (sample.frames.empty()) throw UsageError("sample '" + sample.id + "' has no frames");
  const auto& first = sample.frames.front();
  if (first.rank() != 2) throw DimensionError("sample '" + sample.id + "': frames must be L x D");
  for (const auto& frame : sample.frames) {
    if (frame.shape() != first.shape()) {
      throw DimensionError("sample '" + sample.id + "': frame " + shape_str(frame.shape()) +
                           " differs from " + shape_str(first.shape()));
    }
  }
  for (const auto& caption : sample.captions) {
    if (caption.size() < 2 || caption.front() != kBos || caption.back() != kEos) {
      throw UsageError("sample '" + sample.id + "': caption must run BOS .. EOS");
    }
    if (caption.size() > kMaxCaptionWords + 2) {
      throw UsageError("sample '" + sample.id + "': caption longer than " +
                       std::to_string(kMaxCaptionWords) + " words");
    }
  }
}

std::string encode_feature_bytes(std::span<const Tensor> frames) {
  if (frames.empty()) throw UsageError("feature file needs at least one frame");
  const auto& shape = frames.front().shape();
  if (shape.size() != 2) throw DimensionError("frames must be L x D matrices");
  std::string out(kFeatureMagic);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  put_u32(out, static_cast<std::uint32_t>(shape[0]));
  put_u32(out, static_cast<std::uint32_t>(shape[1]));
  out.reserve(out.size() + frames.size() * shape[0] * shape[1] * 4);
  for (const auto& frame : frames) {
    if (frame.shape() != shape) {
      throw DimensionError("frame " + shape_str(frame.shape()) + " differs from " + shape_str(shape));
    }
    for (double v : frame.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

std::vector<Tensor> parse_feature_bytes(std::string_view bytes) {
  constexpr std::size_t header = 5 + 3 * 4;
  if (bytes.size() < kFeatureMagic.size()) throw FormatError("truncated magic", bytes.size());
  for (std::size_t i = 0; i < kFeatureMagic.size(); ++i) {
    if (bytes[i] != kFeatureMagic[i]) throw FormatError("bad magic, expected MVFM1", i);
  }
  if (bytes.size() < header) throw FormatError("truncated header", bytes.size());
  const std::uint32_t n = get_u32(bytes, 5);
  const std::uint32_t l = get_u32(bytes, 9);
  const std::uint32_t d = get_u32(bytes, 13);
  if (n == 0) throw FormatError("frame count N is zero", 5);
  if (l == 0) throw FormatError("location count L is zero", 9);
  if (d == 0) throw FormatError("depth D is zero", 13);
  const std::uint64_t count = std::uint64_t{n} * l * d;
  const std::uint64_t expected = header + 4 * count;
  if (bytes.size() < expected) throw FormatError("truncated payload", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after payload", expected);

  std::vector<Tensor> frames;
  frames.reserve(n);
  std::size_t offset = header;
  for (std::uint32_t f = 0; f < n; ++f) {
    std::vector<double> values(std::size_t{l} * d);
    for (auto& v : values) {
      const float x = std::bit_cast<float>(get_u32(bytes, offset));
      if (!std::isfinite(x)) throw FormatError("non-finite feature value", offset);
      v = x;
      offset += 4;
    }
    frames.push_back(Tensor::matrix(l, d, std::move(values)));
  }
  return frames;
}

void write_feature_file(const fs::path& path, std::span<const Tensor> frames) {
  write_file(path, encode_feature_bytes(frames));
}

std::vector<Tensor> read_feature_file(const fs::path& path) {
  try {
    return parse_feature_bytes(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto byte = static_cast<unsigned char>(ch);
    const bool word = (byte >= 'a' && byte <= 'z') || (byte >= 'A' && byte <= 'Z') ||
                      (byte >= '0' && byte <= '9') || byte >= 0x80;
    if (word) {
      current.push_back((byte >= 'A' && byte <= 'Z') ? static_cast<char>(byte - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

TokenSeq preprocess_caption(std::string_view text, const Vocabulary& vocab, std::size_t max_words) {
  auto words = tokenize(text);
  if (words.size() > max_words) words.resize(max_words);
  TokenSeq ids{kBos};
  for (const auto& w : words) ids.push_back(vocab.id_or_unk(w));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::size_t> sample_frame_indices(std::size_t available, std::size_t n) {
  if (n == 0) throw UsageError("sample_frames: n must be at least 1");
  if (available == 0) throw UsageError("sample_frames: no frames to sample from");
  std::vector<std::size_t> idx(n);
  if (available < n) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = std::min(i, available - 1);
  } else if (n == 1) {
    idx[0] = 0;
  } else {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i * (available - 1) / (n - 1);
  }
  return idx;
}

std::vector<Tensor> sample_frames(std::span<const Tensor> frames, std::size_t n) {
  std::vector<Tensor> out;
  for (auto i : sample_frame_indices(frames.size(), n)) out.push_back(frames[i]);
  return out;
}

CaptionTable read_caption_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  CaptionTable rows;
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string() + ": line " + std::to_string(lineno) + " is not id<TAB>caption",
                        line_offset);
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

void write_caption_tsv(const fs::path& path, const CaptionTable& rows) {
  std::string out;
  for (const auto& [id, caption] : rows) out += id + "\t" + caption + "\n";
  write_file(path, out);
}

fs::path captions_path_for(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".captions.tsv");
  return p;
}

std::vector<RawVideo> load_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw UsageError("cannot open manifest " + manifest.string());
  const auto base = manifest.parent_path();

  std::map<std::string, std::vector<std::string>> refs;
  const auto caption_file = captions_path_for(manifest);
  if (fs::exists(caption_file)) {
    for (auto& [id, caption] : read_caption_tsv(caption_file)) refs[id].push_back(std::move(caption));
  }

  std::vector<RawVideo> videos;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fs::path feature = line;
    if (feature.is_relative()) feature = base / feature;
    RawVideo video;
    video.id = feature.stem().string();
    video.frames = read_feature_file(feature);
    if (auto it = refs.find(video.id); it != refs.end()) video.captions = it->second;
    videos.push_back(std::move(video));
  }
  return videos;
}

fs::path write_manifest(const fs::path& dir, std::string_view name, std::span<const RawVideo> videos) {
  fs::create_directories(dir);
  const fs::path manifest = dir / (std::string(name) + ".manifest");
  std::string listing;
  CaptionTable captions;
  for (const auto& video : videos) {
    const std::string file = video.id + ".mvfm";
    write_feature_file(dir / file, video.frames);
    listing += file + "\n";
    for (const auto& c : video.captions) captions.emplace_back(video.id, c);
  }
  write_file(manifest, listing);
  write_caption_tsv(captions_path_for(manifest), captions);
  return manifest;
}

void extend_vocabulary(Vocabulary& vocab, std::span<const RawVideo> videos) {
  for (const auto& video : videos)
    for (const auto& caption : video.captions)
      for (const auto& word : tokenize(caption)) vocab.add(word);
}

std::vector<VideoSample> to_samples(std::span<const RawVideo> videos, const Vocabulary& vocab) {
  std::vector<VideoSample> out;
  out.reserve(videos.size());
  for (const auto& video : videos) {
    VideoSample sample{video.id, video.frames, {}};
    for (const auto& c : video.captions) sample.captions.push_back(preprocess_caption(c, vocab));
    validate_sample(sample);
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<VideoSample> load_features(const fs::path& manifest, const Vocabulary& vocab) {
  return to_samples(load_manifest(manifest), vocab);
}

}  // namespace memcap
