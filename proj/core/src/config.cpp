#include "memcap/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memcap/error.hpp"

namespace memcap {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("config key '" + std::string(key) + "' expects an unsigned integer, got '" +
                     std::string(value) + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
    throw UsageError("config key '" + std::string(key) + "' expects a number, got '" + s + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + std::string(key) + "' expects true/false, got '" + std::string(value) + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  auto sz = [&](std::size_t& field) { field = static_cast<std::size_t>(to_uint(key, value)); };
  auto dbl = [&](double& field) { field = to_double(key, value); };
  if (key == "L") sz(L);
  else if (key == "D") sz(D);
  else if (key == "K") sz(K);
  else if (key == "M") sz(M);
  else if (key == "E") sz(E);
  else if (key == "tem_layers") sz(tem_layers);
  else if (key == "decoder_layers") sz(decoder_layers);
  else if (key == "use_bias") use_bias = to_bool(key, value);
  else if (key == "variant") variant = parse_variant(value);
  else if (key == "lr") dbl(train.lr);
  else if (key == "beta1") dbl(train.beta1);
  else if (key == "beta2") dbl(train.beta2);
  else if (key == "eps") dbl(train.eps);
  else if (key == "batch_size") sz(train.batch_size);
  else if (key == "lambda_l2") dbl(train.lambda_l2);
  else if (key == "clip_norm") dbl(train.clip_norm);
  else if (key == "epochs") sz(train.epochs);
  else if (key == "seed") train.seed = to_uint(key, value);
  else if (key == "dataset") dataset = std::string(value);
  else if (key == "train_manifest") train_manifest = std::string(value);
  else if (key == "val_manifest") val_manifest = std::string(value);
  else if (key == "test_manifest") test_manifest = std::string(value);
  else if (key == "frames") sz(frames);
  else if (key == "synth_train") sz(synth_train);
  else if (key == "synth_val") sz(synth_val);
  else if (key == "synth_test") sz(synth_test);
  else if (key == "synth_frames") sz(synth_frames);
  else if (key == "synth_events") sz(synth_events);
  else if (key == "synth_noise") dbl(synth_noise);
  else if (key == "synth_seed") synth_seed = to_uint(key, value);
  else if (key == "output_dir") output_dir = std::string(value);
  else if (key == "beam") sz(beam);
  else if (key == "max_len") sz(max_len);
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "L=" << L << "\nD=" << D << "\nK=" << K << "\nM=" << M << "\nE=" << E
      << "\ntem_layers=" << tem_layers << "\ndecoder_layers=" << decoder_layers
      << "\nuse_bias=" << (use_bias ? "true" : "false") << "\nvariant=" << variant_tag(variant)
      << "\nlr=" << fmt_double(train.lr) << "\nbeta1=" << fmt_double(train.beta1)
      << "\nbeta2=" << fmt_double(train.beta2) << "\neps=" << fmt_double(train.eps)
      << "\nbatch_size=" << train.batch_size << "\nlambda_l2=" << fmt_double(train.lambda_l2)
      << "\nclip_norm=" << fmt_double(train.clip_norm) << "\nepochs=" << train.epochs
      << "\nseed=" << train.seed << "\ndataset=" << dataset << "\ntrain_manifest=" << train_manifest
      << "\nval_manifest=" << val_manifest << "\ntest_manifest=" << test_manifest
      << "\nframes=" << frames << "\nsynth_train=" << synth_train << "\nsynth_val=" << synth_val
      << "\nsynth_test=" << synth_test << "\nsynth_frames=" << synth_frames
      << "\nsynth_events=" << synth_events << "\nsynth_noise=" << fmt_double(synth_noise)
      << "\nsynth_seed=" << synth_seed << "\noutput_dir=" << output_dir << "\nbeam=" << beam
      << "\nmax_len=" << max_len << "\n";
  return out.str();
}

void RunConfig::validate() const {
  model_config(kUnk + 2).validate();
  train.validate();
  if (dataset == "synthetic") {
    synthetic_spec().validate();
    if (synth_train == 0) throw UsageError("synth_train must be at least 1");
  } else if (dataset == "manifest") {
    if (train_manifest.empty()) throw UsageError("dataset=manifest needs train_manifest");
  } else {
    throw UsageError("dataset must be 'synthetic' or 'manifest', got '" + dataset + "'");
  }
  if (max_len == 0) throw UsageError("max_len must be at least 1");
  if (beam == 0) throw UsageError("beam must be at least 1");
}

ModelConfig RunConfig::model_config(std::size_t vocab_size) const {
  ModelConfig m;
  m.locations = L;
  m.depth = D;
  m.hidden = K;
  m.memory = M;
  m.embed = E;
  m.vocab = vocab_size;
  m.tem_layers = tem_layers;
  m.decoder_layers = decoder_layers;
  m.use_bias = use_bias;
  m.variant = variant;
  return m;
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec spec;
  const auto grid = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(L))));
  if (grid * grid != L) {
    throw UsageError("synthetic data needs L to be a perfect square (grid^2), got " + std::to_string(L));
  }
  spec.grid = grid;
  spec.depth = D;
  spec.frames = synth_frames;
  spec.events = synth_events;
  spec.noise = synth_noise;
  spec.seed = synth_seed;
  return spec;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto clean = trim(line);
    if (clean.empty()) continue;
    const auto eq = clean.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    base.set(trim(std::string_view(clean).substr(0, eq)), trim(std::string_view(clean).substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace memcap
