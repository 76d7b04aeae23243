#pragma once

// Checkpoint container, all integers and floats little-endian:
//
//   "MCKP1"
//   str  config        key=value lines of the run configuration
//   str  vocabulary    one token per line, id order
//   str  rng           textual state of the shuffling engine
//   u64  step          optimizer steps taken
//   u64  epoch         completed epochs
//   u32  blob count, then per blob:
//        str name, u32 rank, u32 extents[rank], f64 values[prod(extents)]
//
// where str is a u32 byte length followed by UTF-8 bytes. Parameter blobs
// carry the parameter name; Adam moments are stored as "adam.m/<name>" and
// "adam.v/<name>".

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memcap/params.hpp"
#include "memcap/tensor.hpp"

namespace memcap {

struct Blob {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const Blob&) const = default;
};

struct Checkpoint {
  std::string config_text;
  std::string vocab_text;
  std::string rng_state;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::vector<Blob> blobs;

  const Blob* find(std::string_view name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws FormatError with the byte offset of the first inconsistency.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<Blob> snapshot_parameters(const ParamList& params);
// Copies blob values into the matching parameters. Throws DimensionError on a
// missing name or a shape mismatch.
void restore_parameters(const ParamList& params, const Checkpoint& ckpt);

}  // namespace memcap
