#include "memcap/synthetic.hpp"

#include <cstdio>

#include "memcap/error.hpp"
#include "memcap/params.hpp"

namespace memcap {

namespace {

constexpr Motion kMotions[] = {Motion::Left, Motion::Right, Motion::Up, Motion::Down, Motion::Still};

const char* motion_phrase(Motion m) {
  switch (m) {
    case Motion::Left: return "moves left";
    case Motion::Right: return "moves right";
    case Motion::Up: return "moves up";
    case Motion::Down: return "moves down";
    case Motion::Still: return "stays still";
  }
  return "";
}

Motion reversed(Motion m) {
  switch (m) {
    case Motion::Left: return Motion::Right;
    case Motion::Right: return Motion::Left;
    case Motion::Up: return Motion::Down;
    case Motion::Down: return Motion::Up;
    case Motion::Still: return Motion::Still;
  }
  return m;
}

// Grid cell (row, col) of an event at step k of `span` frames.
std::pair<std::size_t, std::size_t> position(const SyntheticEvent& e, std::size_t grid, std::size_t k,
                                             std::size_t span) {
  // Left and Up are the time-reversed Right and Down sweeps.
  auto sweep = [&](std::size_t step) { return span > 1 ? step * (grid - 1) / (span - 1) : 0; };
  switch (e.motion) {
    case Motion::Left: return {e.lane, sweep(span - 1 - k)};
    case Motion::Right: return {e.lane, sweep(k)};
    case Motion::Up: return {sweep(span - 1 - k), e.lane};
    case Motion::Down: return {sweep(k), e.lane};
    case Motion::Still: return {e.lane / grid, e.lane % grid};
  }
  return {0, 0};
}

// [channels x D] projection of the indicator channels to features.
std::vector<double> projection(const SyntheticSpec& spec) {
  Rng rng(spec.projection_seed);
  const std::size_t channels = spec.shapes.size() + spec.colors.size();
  std::vector<double> p(channels * spec.depth);
  for (auto& v : p) v = uniform(rng, -1.0, 1.0);
  return p;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (grid < 2) throw UsageError("synthetic: grid must be at least 2");
  if (depth == 0) throw UsageError("synthetic: depth must be positive");
  if (events == 0 || frames < events) throw UsageError("synthetic: need 1 <= events <= frames");
  if (shapes.empty() || colors.empty()) throw UsageError("synthetic: empty object inventory");
  if (events > 1 && shapes.size() * colors.size() < 2) {
    throw UsageError("synthetic: need at least two distinct objects for multi-event videos");
  }
}

Vocabulary synthetic_vocabulary(const SyntheticSpec& spec) {
  Vocabulary vocab;
  vocab.add("a");
  for (const auto& c : spec.colors) vocab.add(c);
  for (const auto& s : spec.shapes) vocab.add(s);
  for (const char* w : {"moves", "left", "right", "up", "down", "stays", "still", "then"}) vocab.add(w);
  return vocab;
}

std::string describe_events(const SyntheticSpec& spec, const std::vector<SyntheticEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += " then ";
    out += "a " + spec.colors.at(e.color) + " " + spec.shapes.at(e.shape) + " " + motion_phrase(e.motion);
  }
  return out;
}

std::vector<SyntheticEvent> reverse_events(const std::vector<SyntheticEvent>& events) {
  std::vector<SyntheticEvent> out(events.rbegin(), events.rend());
  for (auto& e : out) e.motion = reversed(e.motion);
  return out;
}

std::vector<Tensor> render_events(const SyntheticSpec& spec, const std::vector<SyntheticEvent>& events,
                                  std::uint64_t noise_seed) {
  spec.validate();
  const std::size_t L = spec.locations();
  const std::size_t D = spec.depth;
  const std::size_t n_shapes = spec.shapes.size();
  const auto proj = projection(spec);
  Rng noise(noise_seed);

  std::vector<Tensor> frames;
  frames.reserve(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    // Event k owns frames t with floor(t * events / frames) == k.
    const std::size_t event = t * events.size() / spec.frames;
    std::size_t begin = 0;
    while (begin * events.size() / spec.frames < event) ++begin;
    std::size_t end = begin;
    while (end < spec.frames && end * events.size() / spec.frames == event) ++end;
    const auto& e = events[event];
    const auto [row, col] = position(e, spec.grid, t - begin, end - begin);
    const std::size_t cell = row * spec.grid + col;

    std::vector<double> values(L * D);
    for (auto& v : values) v = uniform(noise, -spec.noise, spec.noise);
    for (std::size_t d = 0; d < D; ++d) {
      values[cell * D + d] += proj[e.shape * D + d] + proj[(n_shapes + e.color) * D + d];
    }
    frames.push_back(Tensor::matrix(L, D, std::move(values)));
  }
  return frames;
}

std::vector<SyntheticVideo> generate_synthetic_videos(const SyntheticSpec& spec, std::size_t count) {
  spec.validate();
  if (count == 0) throw UsageError("generate_synthetic: count must be at least 1");
  Rng rng(spec.seed);
  const std::size_t objects = spec.shapes.size() * spec.colors.size();
  std::vector<SyntheticVideo> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<SyntheticEvent> events;
    std::vector<std::size_t> used;
    while (events.size() < spec.events) {
      const std::size_t object = uniform_index(rng, objects);
      // Consecutive events show different objects so order is always observable.
      if (!used.empty() && used.back() == object) continue;
      used.push_back(object);
      SyntheticEvent e;
      e.shape = object / spec.colors.size();
      e.color = object % spec.colors.size();
      e.motion = kMotions[uniform_index(rng, std::size(kMotions))];
      e.lane = uniform_index(rng, e.motion == Motion::Still ? spec.locations() : spec.grid);
      events.push_back(e);
    }
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", i);
    SyntheticVideo video;
    video.video.id = id;
    video.video.frames = render_events(spec, events, rng());
    video.video.captions = {describe_events(spec, events)};
    video.events = std::move(events);
    out.push_back(std::move(video));
  }
  return out;
}

std::vector<RawVideo> generate_synthetic_raw(const SyntheticSpec& spec, std::size_t count) {
  std::vector<RawVideo> out;
  for (auto& v : generate_synthetic_videos(spec, count)) out.push_back(std::move(v.video));
  return out;
}

std::vector<VideoSample> generate_synthetic(const SyntheticSpec& spec, std::size_t count) {
  const auto raw = generate_synthetic_raw(spec, count);
  return to_samples(raw, synthetic_vocabulary(spec));
}

}  // namespace memcap
