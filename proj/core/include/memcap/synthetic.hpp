#pragma once

// Synthetic stand-in for a video captioning corpus. Every video is a
// sequence of events; each event shows one object (colour + shape) on a
// G x G grid for an equal share of the frames, sweeping across the grid or
// staying put. Captions read "a red square moves left then a blue circle
// stays still", so both the order of the objects and the direction of
// motion can only be recovered from frame order.
//
// A grid cell becomes one location (L = G*G). Each cell is encoded as a
// one-hot shape + one-hot colour indicator and mapped to D features by a
// fixed random projection, plus uniform noise.

#include <cstdint>
#include <string>
#include <vector>

#include "memcap/data.hpp"
#include "memcap/vocabulary.hpp"

namespace memcap {

enum class Motion { Left, Right, Up, Down, Still };

struct SyntheticEvent {
  std::size_t shape = 0;
  std::size_t color = 0;
  Motion motion = Motion::Still;
  std::size_t lane = 0;  // fixed row (horizontal motion), column (vertical) or cell (still)
};

struct SyntheticSpec {
  std::size_t grid = 3;
  std::size_t depth = 16;
  std::size_t frames = 8;
  std::size_t events = 2;
  std::vector<std::string> shapes{"square", "circle", "triangle"};
  std::vector<std::string> colors{"red", "green", "blue"};
  double noise = 0.05;
  std::uint64_t seed = 1;
  std::uint64_t projection_seed = 7;  // shared by every split of one task

  std::size_t locations() const { return grid * grid; }
  void validate() const;
};

// Every word the grammar can emit; no UNK ever appears in generated data.
Vocabulary synthetic_vocabulary(const SyntheticSpec& spec);

std::string describe_events(const SyntheticSpec& spec, const std::vector<SyntheticEvent>& events);
// The events a viewer sees when the video is played backwards.
std::vector<SyntheticEvent> reverse_events(const std::vector<SyntheticEvent>& events);
// Frame maps for an event sequence; `noise_seed` drives the additive noise.
std::vector<Tensor> render_events(const SyntheticSpec& spec, const std::vector<SyntheticEvent>& events,
                                  std::uint64_t noise_seed);

struct SyntheticVideo {
  RawVideo video;
  std::vector<SyntheticEvent> events;
};

std::vector<SyntheticVideo> generate_synthetic_videos(const SyntheticSpec& spec, std::size_t count);
std::vector<RawVideo> generate_synthetic_raw(const SyntheticSpec& spec, std::size_t count);
// Tokenized with synthetic_vocabulary(spec).
std::vector<VideoSample> generate_synthetic(const SyntheticSpec& spec, std::size_t count);

}  // namespace memcap
