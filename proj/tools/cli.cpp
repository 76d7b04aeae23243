#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "memcap/checkpoint.hpp"
#include "memcap/config.hpp"
#include "memcap/data.hpp"
#include "memcap/error.hpp"
#include "memcap/experiment.hpp"
#include "memcap/metrics.hpp"
#include "memcap/synthetic.hpp"

namespace memcap::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = std::make_shared<spdlog::logger>("memcap", std::make_shared<spdlog::sinks::stderr_sink_st>());
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("MEMCAP_LOG");
  logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  return logger;
}

struct RunFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string variant;
  std::size_t frames = 0;
  std::size_t beam = 0;
  std::size_t max_len = 0;
  std::string out_dir;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* frames_opt = nullptr;
  CLI::Option* beam_opt = nullptr;
  CLI::Option* max_len_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_frames_option(CLI::App& app, std::size_t& target, CLI::Option*& handle) {
  handle = app.add_option("--frames", target, "Frames sampled per video")
               ->check(CLI::IsMember({4, 8, 16, 40}));
}

void add_decode_options(CLI::App& app, RunFlags& f) {
  f.beam_opt = app.add_option("--beam", f.beam, "Beam width (1 = greedy)")->check(CLI::PositiveNumber);
  f.max_len_opt = app.add_option("--max-len", f.max_len, "Maximum generated tokens")->check(CLI::PositiveNumber);
}

void add_run_options(CLI::App& app, RunFlags& f) {
  app.add_option("--config", f.config_path, "key=value run configuration")->required();
  app.add_option("--set", f.sets, "Override one config key (key=value); repeatable");
  f.seed_opt = app.add_option("--seed", f.seed, "Training seed");
  f.variant_opt = app.add_option("--variant", f.variant,
                                 "ATT_NO_TEM, ATT_TEM, NO_IAM_TEM, IAM_NO_TEM or IAM_TEM");
  add_frames_option(app, f.frames, f.frames_opt);
  add_decode_options(app, f);
  f.out_opt = app.add_option("--out", f.out_dir, "Output directory (config key output_dir)");
}

RunConfig resolve(const RunFlags& f) {
  if (!fs::exists(f.config_path)) throw UsageError("config file not found: " + f.config_path);
  RunConfig config = load_config(f.config_path);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed_opt->count()) config.train.seed = f.seed;
  if (f.variant_opt->count()) config.variant = parse_variant(f.variant);
  if (f.frames_opt->count()) config.frames = f.frames;
  if (f.beam_opt->count()) config.beam = f.beam;
  if (f.max_len_opt->count()) config.max_len = f.max_len;
  if (f.out_opt->count()) config.output_dir = f.out_dir;
  config.validate();
  return config;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string score_report(const CaptionScores& s) {
  return "bleu1=" + fixed(s.bleu[0]) + " bleu2=" + fixed(s.bleu[1]) + " bleu3=" + fixed(s.bleu[2]) +
         " bleu4=" + fixed(s.bleu[3]) + " cider=" + fixed(s.cider);
}

// ---- train -------------------------------------------------------------

int cmd_train(const RunFlags& flags, std::ostream& out, spdlog::logger& log) {
  const RunConfig config = resolve(flags);
  const Dataset data = load_dataset(config);
  log.info("train: {} train / {} val / {} test videos, vocabulary {}, variant {}", data.train.size(),
           data.val.size(), data.test.size(), data.vocab.size(), variant_tag(config.variant));

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.cfg");
    cfg << config.serialize();
  }
  std::ofstream csv(dir / "train_log.csv");
  csv << "epoch,train_loss,val_loss,wall_seconds\n" << std::setprecision(17);

  CaptionModel model = build_model(config, data.vocab);
  const auto on_epoch = [&](const EpochLog& e) {
    csv << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.wall_seconds << '\n';
    csv.flush();
    log.info("epoch {} train_loss {:.6f} val_loss {:.6f} ({:.2f}s)", e.epoch, e.train_loss, e.val_loss,
             e.wall_seconds);
  };
  RunOutcome outcome;
  try {
    outcome = train_and_score(config, data, model, on_epoch);
  } catch (const DivergenceError& e) {
    save_checkpoint(dir / "last_good.mckp", e.last_good());
    throw;
  }
  save_checkpoint(dir / "best.mckp", outcome.training.best);
  save_checkpoint(dir / "last.mckp", outcome.training.last);

  const auto& last = outcome.training.log.back();
  out << "epochs=" << outcome.training.log.size() << " best_epoch=" << outcome.training.best.epoch
      << " final_train_loss=" << fixed(last.train_loss, 6) << " final_val_loss=" << fixed(last.val_loss, 6)
      << ' ' << score_report(outcome.test_scores) << '\n';
  return kExitOk;
}

// ---- checkpoint-driven commands ----------------------------------------

struct LoadedModel {
  RunConfig config;
  Vocabulary vocab;
  Checkpoint checkpoint;
  std::unique_ptr<CaptionModel> model;
};

LoadedModel load_model(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  LoadedModel m;
  m.checkpoint = load_checkpoint(path);
  m.config = parse_config(m.checkpoint.config_text);
  m.vocab = Vocabulary::deserialize(m.checkpoint.vocab_text);
  m.model = std::make_unique<CaptionModel>(build_model(m.config, m.vocab));
  restore_parameters(m.model->parameters(), m.checkpoint);
  return m;
}

struct Video {
  std::string id;
  std::vector<Tensor> frames;
  std::vector<std::string> references;
};

std::vector<Video> videos_from(const std::vector<RawVideo>& raw) {
  std::vector<Video> out;
  for (const auto& r : raw) out.push_back({r.id, r.frames, r.captions});
  return out;
}

// Features come from a manifest, a single feature file, or (without a path)
// the synthetic split the checkpoint was trained on.
std::vector<Video> load_videos(const LoadedModel& m, const std::string& features, const std::string& split) {
  if (!features.empty()) {
    const fs::path p = features;
    if (!fs::exists(p)) throw UsageError("features not found: " + features);
    if (p.extension() == ".manifest") return videos_from(load_manifest(p));
    return {{p.stem().string(), read_feature_file(p), {}}};
  }
  if (m.config.dataset != "synthetic") throw UsageError("--features is required for manifest-trained checkpoints");
  const auto spec = m.config.synthetic_spec();
  auto raw = generate_synthetic_raw(spec, m.config.synth_train + m.config.synth_val + m.config.synth_test);
  std::size_t begin = 0;
  std::size_t count = m.config.synth_train;
  if (split == "val") {
    begin = m.config.synth_train;
    count = m.config.synth_val;
  } else if (split == "test") {
    begin = m.config.synth_train + m.config.synth_val;
    count = m.config.synth_test;
  }
  std::vector<RawVideo> chosen(raw.begin() + static_cast<std::ptrdiff_t>(begin),
                               raw.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return videos_from(chosen);
}

void prepare_frames(std::vector<Video>& videos, const RunConfig& config, std::size_t frames_override) {
  const std::size_t n = frames_override ? frames_override : config.frames;
  for (auto& v : videos) {
    if (v.frames.empty()) throw UsageError("video '" + v.id + "' has no frames");
    const auto& f = v.frames.front();
    if (f.rows() != config.L || f.cols() != config.D) {
      throw DimensionError("video '" + v.id + "' has " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                           " feature maps but the checkpoint expects " + std::to_string(config.L) + "x" +
                           std::to_string(config.D));
    }
    if (n > 0) v.frames = sample_frames(v.frames, n);
  }
}

struct GenerateFlags {
  std::string checkpoint;
  std::string features;
  std::string split = "train";
  std::string mode;
  std::string attention_csv;
  RunFlags decode;
};

int cmd_generate(const GenerateFlags& flags, std::ostream& out, spdlog::logger& log) {
  auto m = load_model(flags.checkpoint);
  auto videos = load_videos(m, flags.features, flags.split);
  prepare_frames(videos, m.config, flags.decode.frames_opt->count() ? flags.decode.frames : 0);

  GenerateOptions options = generate_options(m.config);
  if (flags.decode.beam_opt->count()) options.beam_width = flags.decode.beam;
  if (flags.decode.max_len_opt->count()) options.max_len = flags.decode.max_len;
  if (flags.mode == "greedy") {
    options.mode = DecodeMode::Greedy;
  } else if (flags.mode == "beam") {
    options.mode = DecodeMode::Beam;
  } else {
    options.mode = options.beam_width > 1 ? DecodeMode::Beam : DecodeMode::Greedy;
  }
  log.info("generate: {} videos, {} decoding", videos.size(),
           options.mode == DecodeMode::Beam ? "beam " + std::to_string(options.beam_width) : std::string("greedy"));

  std::ofstream attention;
  if (!flags.attention_csv.empty()) {
    attention.open(flags.attention_csv);
    if (!attention) throw UsageError("cannot write " + flags.attention_csv);
    attention << std::setprecision(17) << "id,position,word";
    const std::size_t n = videos.empty() ? 0 : videos.front().frames.size();
    for (std::size_t i = 0; i < n; ++i) attention << ",alpha_" << i;
    attention << '\n';
  }
  for (const auto& v : videos) {
    const auto g = generate(*m.model, v.frames, options);
    out << v.id << '\t' << m.vocab.decode(g.words()) << '\n';
    if (attention.is_open()) {
      for (std::size_t t = 0; t < g.tokens.size(); ++t) {
        attention << v.id << ',' << t << ',' << m.vocab.token(g.tokens[t]);
        for (double a : g.alphas[t]) attention << ',' << a;
        attention << '\n';
      }
    }
  }
  return kExitOk;
}

// ---- evaluate ----------------------------------------------------------

struct EvaluateFlags {
  std::string candidates;
  std::string references;
  std::string per_sentence;
};

int cmd_evaluate(const EvaluateFlags& flags, std::ostream& out, spdlog::logger& log) {
  for (const auto& p : {flags.candidates, flags.references}) {
    if (!fs::exists(p)) throw UsageError("file not found: " + p);
  }
  fs::path ref_path = flags.references;
  if (ref_path.extension() == ".manifest") ref_path = captions_path_for(ref_path);
  std::map<std::string, std::vector<Words>> refs;
  for (const auto& [id, caption] : read_caption_tsv(ref_path)) refs[id].push_back(tokenize(caption));

  std::vector<std::string> ids;
  std::vector<EvalPair> pairs;
  for (const auto& [id, caption] : read_caption_tsv(flags.candidates)) {
    auto it = refs.find(id);
    if (it == refs.end()) throw UsageError("no reference captions for candidate '" + id + "'");
    ids.push_back(id);
    pairs.push_back({tokenize(caption), it->second});
  }
  if (pairs.empty()) throw UsageError("no candidate captions in " + flags.candidates);
  log.info("evaluate: {} candidates against {} referenced videos", pairs.size(), refs.size());

  const auto c = cider(pairs);
  CaptionScores scores;
  for (std::size_t n = 1; n <= 4; ++n) scores.bleu[n - 1] = bleu(pairs, n);
  scores.cider = c.score;
  out << "pairs=" << pairs.size() << ' ' << score_report(scores) << '\n';

  if (!flags.per_sentence.empty()) {
    std::ofstream per(flags.per_sentence);
    if (!per) throw UsageError("cannot write " + flags.per_sentence);
    per << std::setprecision(17) << "id\tbleu4\tcider\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      per << ids[i] << '\t' << bleu({pairs[i]}, 4) << '\t' << c.per_pair[i] << '\n';
    }
  }
  return kExitOk;
}

// ---- ablate ------------------------------------------------------------

int cmd_ablate(const RunFlags& flags, std::size_t seeds, std::ostream& out, spdlog::logger& log) {
  const RunConfig config = resolve(flags);
  log.info("ablate: five variants x {} seed(s), {} epochs each", seeds, config.train.epochs);
  const auto cells = run_ablation(config, seeds, [&](AblationVariant v, std::uint64_t seed, const CaptionScores& s) {
    log.info("{} seed {}: {}", variant_tag(v), seed, score_report(s));
  });

  out << "variant\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU-4\tCIDEr\n";
  for (const auto& cell : cells) {
    out << variant_tag(cell.variant);
    for (std::size_t metric = 0; metric < 5; ++metric) {
      std::vector<double> values;
      for (const auto& s : cell.scores) values.push_back(metric < 4 ? s.bleu[metric] : s.cider);
      const auto ms = mean_std(values);
      out << '\t' << fixed(ms.mean);
      if (seeds > 1) out << "±" << fixed(ms.std);
    }
    out << '\n';
  }
  return kExitOk;
}

// ---- inspect -----------------------------------------------------------

int cmd_inspect(const std::string& checkpoint, std::ostream& out) {
  const auto m = load_model(checkpoint);
  std::size_t count = 0;
  for (const auto& b : m.checkpoint.blobs) count += b.values.size();
  out << "variant=" << variant_tag(m.config.variant) << " step=" << m.checkpoint.step
      << " epoch=" << m.checkpoint.epoch << " vocabulary=" << m.vocab.size()
      << " tensors=" << m.checkpoint.blobs.size() << " parameters=" << count << '\n';
  out << "name\tshape\tl2_norm\n";
  for (const auto& b : m.checkpoint.blobs) {
    double ss = 0.0;
    for (double v : b.values) ss += v * v;
    std::string shape;
    for (std::size_t i = 0; i < b.shape.size(); ++i) shape += (i ? "x" : "") + std::to_string(b.shape[i]);
    out << b.name << '\t' << shape << '\t' << fixed(std::sqrt(ss), 6) << '\n';
  }
  return kExitOk;
}

// ---- synth -------------------------------------------------------------

int cmd_synth(const RunFlags& flags, std::ostream& out) {
  const RunConfig config = resolve(flags);
  const auto raw = generate_synthetic_raw(config.synthetic_spec(),
                                          config.synth_train + config.synth_val + config.synth_test);
  const fs::path dir = config.output_dir;
  std::size_t begin = 0;
  for (const auto& [name, count] : {std::pair<const char*, std::size_t>{"train", config.synth_train},
                                    {"val", config.synth_val},
                                    {"test", config.synth_test}}) {
    std::vector<RawVideo> part(raw.begin() + static_cast<std::ptrdiff_t>(begin),
                               raw.begin() + static_cast<std::ptrdiff_t>(begin + count));
    out << name << '\t' << write_manifest(dir, name, part).string() << '\n';
    begin += count;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger();
  CLI::App app{"Memory-augmented attention video captioning"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoints and a per-epoch CSV log");
  add_run_options(*train_cmd, train_flags);

  GenerateFlags gen;
  auto* gen_cmd = app.add_subcommand("generate", "Caption videos with a checkpoint; TSV on standard output");
  gen_cmd->add_option("--checkpoint", gen.checkpoint, "Checkpoint file")->required();
  gen_cmd->add_option("--features", gen.features, "Feature manifest or single feature file");
  gen_cmd->add_option("--split", gen.split, "Synthetic split when --features is absent")
      ->check(CLI::IsMember({"train", "val", "test"}));
  gen_cmd->add_option("--mode", gen.mode, "greedy or beam (default: beam when --beam > 1)")
      ->check(CLI::IsMember({"greedy", "beam"}));
  gen_cmd->add_option("--dump-attention", gen.attention_csv, "Write per-word frame attention as CSV");
  add_frames_option(*gen_cmd, gen.decode.frames, gen.decode.frames_opt);
  add_decode_options(*gen_cmd, gen.decode);

  EvaluateFlags eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score candidate captions with BLEU-1..4 and CIDEr");
  eval_cmd->add_option("--candidates", eval.candidates, "id<TAB>caption TSV")->required();
  eval_cmd->add_option("--references", eval.references, "Manifest or reference caption TSV")->required();
  eval_cmd->add_option("--per-sentence", eval.per_sentence, "Write per-candidate BLEU-4 and CIDEr TSV");

  RunFlags ablate_flags;
  std::size_t seeds = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train all five variants and print the score grid");
  add_run_options(*ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--seeds", seeds, "Seeds per variant; cells become mean±std")->check(CLI::PositiveNumber);

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a checkpoint");
  inspect_cmd->add_option("--checkpoint", inspect_path, "Checkpoint file")->required();

  RunFlags synth_flags;
  auto* synth_cmd = app.add_subcommand("synth", "Write the configured synthetic splits as feature manifests");
  add_run_options(*synth_cmd, synth_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags, out, *log);
    if (gen_cmd->parsed()) return cmd_generate(gen, out, *log);
    if (eval_cmd->parsed()) return cmd_evaluate(eval, out, *log);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, seeds, out, *log);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_path, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_flags, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace memcap::cli
