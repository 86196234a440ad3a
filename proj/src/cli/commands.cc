// Copyright 2026  sdpn-desk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sdpn/cli/commands.h"

#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sdpn/core/self_check.h"
#include "sdpn/dataio/manifest.h"
#include "sdpn/error.h"
#include "sdpn/eval/scoring.h"
#include "sdpn/train/checkpoint.h"
#include "sdpn/train/trainer.h"

namespace sdpn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string ReadText(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename T>
void Take(const json &j, const char *key, T *dst) {
  if (j.contains(key)) *dst = j.at(key).get<T>();
}

void RequireKeys(const json &j, std::initializer_list<const char *> keys,
                 const std::string &where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown config key '" + where + it.key() + "'");
  }
}

}  // namespace

RunConfig RunConfigFromJson(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RequireKeys(j, {"preset", "corpus", "trials", "dcf", "train"}, "");
  RunConfig c;
  try {
    Take(j, "preset", &c.preset);
    if (c.preset == "desk")
      c.train = train::DeskConfig();
    else if (c.preset == "full")
      c.train = train::FullConfig();
    else
      throw ConfigError("preset must be 'desk' or 'full'");
    if (j.contains("corpus")) {
      const auto &s = j.at("corpus");
      RequireKeys(s, {"n_speakers", "utts_per_speaker", "utt_duration_s", "sample_rate",
                      "seed"}, "corpus.");
      Take(s, "n_speakers", &c.corpus.n_speakers);
      Take(s, "utts_per_speaker", &c.corpus.utts_per_speaker);
      Take(s, "utt_duration_s", &c.corpus.utt_duration_s);
      Take(s, "sample_rate", &c.corpus.sample_rate);
      Take(s, "seed", &c.corpus.seed);
    }
    if (j.contains("trials")) {
      const auto &s = j.at("trials");
      RequireKeys(s, {"n_target", "n_nontarget"}, "trials.");
      Take(s, "n_target", &c.trials.n_target);
      Take(s, "n_nontarget", &c.trials.n_nontarget);
    }
    if (j.contains("dcf")) {
      const auto &s = j.at("dcf");
      RequireKeys(s, {"p_target", "c_fa", "c_miss"}, "dcf.");
      Take(s, "p_target", &c.dcf.p_target);
      Take(s, "c_fa", &c.dcf.c_fa);
      Take(s, "c_miss", &c.dcf.c_miss);
    }
    if (j.contains("train")) c.train = train::MergeTrainConfig(c.train, j.at("train").dump());
  } catch (const json::exception &ex) {
    throw ConfigError(std::string("bad config value: ") + ex.what());
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path &path) {
  return RunConfigFromJson(ReadText(path));
}

std::string RunConfigToJson(const RunConfig &c) {
  json j;
  j["preset"] = c.preset;
  j["corpus"] = {{"n_speakers", c.corpus.n_speakers},
                 {"utts_per_speaker", c.corpus.utts_per_speaker},
                 {"utt_duration_s", c.corpus.utt_duration_s},
                 {"sample_rate", c.corpus.sample_rate},
                 {"seed", c.corpus.seed}};
  j["trials"] = {{"n_target", c.trials.n_target}, {"n_nontarget", c.trials.n_nontarget}};
  j["dcf"] = {{"p_target", c.dcf.p_target}, {"c_fa", c.dcf.c_fa}, {"c_miss", c.dcf.c_miss}};
  j["train"] = json::parse(train::TrainConfigToJson(c.train));
  return j.dump(2) + "\n";
}

void ValidateRunConfig(const RunConfig &c) {
  dataio::ValidateSynthConfig(c.corpus);
  if (c.trials.n_target < 0 || c.trials.n_nontarget < 0)
    throw ConfigError("trial counts must be >= 0");
  eval::ValidateDcfParams(c.dcf);
  train::ValidateTrainConfig(c.train);
}

namespace {

struct Common {
  std::string config;
  uint64_t seed = 0;
  std::string out;
  CLI::Option *seed_opt = nullptr;
};

void AddCommon(CLI::App *sub, Common *c, bool out_required) {
  sub->add_option("--config", c->config, "JSON run config")->check(CLI::ExistingFile);
  c->seed_opt = sub->add_option("--seed", c->seed, "random seed");
  auto *o = sub->add_option("--out", c->out, "output directory");
  if (out_required) o->required();
}

RunConfig BaseConfig(const Common &c) {
  return c.config.empty() ? RunConfig{} : LoadRunConfig(c.config);
}

void Echo(const RunConfig &config, const fs::path &dir) {
  fs::create_directories(dir);
  WriteText(dir / "effective-config.json", RunConfigToJson(config));
}

eval::EvalModel LoadOrInitModel(const std::string &ckpt_path, bool random_init,
                                const RunConfig &config) {
  if (random_init) {
    spdlog::info("using a randomly initialized model (seed {})", config.train.seed);
    return eval::EvalModel(config.train.net, config.train.sdpn, config.train.seed);
  }
  if (ckpt_path.empty()) throw ConfigError("--checkpoint is required (or --random-init)");
  return train::ModelFromCheckpoint(train::LoadCheckpoint(ckpt_path));
}

int GenData(const Common &common, const std::optional<int> &speakers,
            const std::optional<int> &utts, const std::optional<double> &duration,
            const std::optional<int> &n_target, const std::optional<int> &n_nontarget,
            bool no_trials, std::ostream &out) {
  RunConfig config = BaseConfig(common);
  if (common.seed_opt->count()) config.corpus.seed = common.seed;
  if (speakers) config.corpus.n_speakers = *speakers;
  if (utts) config.corpus.utts_per_speaker = *utts;
  if (duration) config.corpus.utt_duration_s = *duration;
  if (n_target) config.trials.n_target = *n_target;
  if (n_nontarget) config.trials.n_nontarget = *n_nontarget;
  ValidateRunConfig(config);
  if (!no_trials) {
    if (config.corpus.n_speakers < 2 && config.trials.n_nontarget > 0)
      throw ConfigError("non-target trials need at least 2 speakers");
    if (config.corpus.utts_per_speaker < 2 && config.trials.n_target > 0)
      throw ConfigError("target trials need at least 2 utterances per speaker");
  }
  const fs::path dir = common.out;
  Echo(config, dir);
  const auto manifest = dataio::GenerateSynthCorpus(config.corpus, dir);
  out << fmt::format("manifest: {} ({} utterances)\n", (dir / "manifest.tsv").string(),
                     manifest.size());
  if (!no_trials) {
    const auto trials = eval::MakeTrials(manifest, config.trials.n_target,
                                         config.trials.n_nontarget, config.corpus.seed);
    eval::WriteTrials(trials, dir / "trials.txt");
    out << fmt::format("trials: {} ({} rows)\n", (dir / "trials.txt").string(),
                       trials.size());
  }
  return kExitOk;
}

struct TrainFlags {
  std::string manifest;
  std::string resume;
  std::optional<double> mu;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> peak_lr;
  bool no_wav_aug = false;
  bool no_spec_aug = false;
  bool no_prototypes = false;
  bool dr_literal = false;
  int stop_after_epoch = -1;
};

int Train(const Common &common, const TrainFlags &f, std::ostream &out) {
  RunConfig config = BaseConfig(common);
  auto &t = config.train;
  if (common.seed_opt->count()) t.seed = common.seed;
  if (f.mu) t.sdpn.mu = *f.mu;
  if (f.epochs) t.epochs = *f.epochs;
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.peak_lr) t.peak_lr = *f.peak_lr;
  if (f.no_wav_aug) t.augment.wav_augment = false;
  if (f.no_spec_aug) t.augment.spec_augment = false;
  if (f.no_prototypes) t.sdpn.use_prototypes = false;
  if (f.dr_literal) t.sdpn.dr_literal = true;
  ValidateRunConfig(config);

  const fs::path dir = common.out;
  Echo(config, dir);
  train::Trainer trainer(dataio::LoadManifest(f.manifest), t, dir);
  if (!f.resume.empty()) {
    const auto ckpt = train::LoadCheckpoint(f.resume);
    trainer.Resume(ckpt);
    spdlog::info("resumed from {} (epoch {}, step {})", f.resume, ckpt.epoch, ckpt.step);
  }
  train::TrainOptions options;
  options.stop_after_epoch = f.stop_after_epoch;
  const auto result = trainer.Run(options);
  train::SaveCheckpoint(result.checkpoint, dir / "final.ckpt");

  const auto &g = result.global_augment, &l = result.local_augment;
  const std::string counters = fmt::format(
      "global_noise: {}\nglobal_rir: {}\nglobal_spec_augment: {}\n"
      "local_noise: {}\nlocal_rir: {}\nlocal_spec_augment: {}\n",
      g.mix_noise, g.rir, g.spec_augment, l.mix_noise, l.rir, l.spec_augment);
  WriteText(dir / "augment-counters.txt", counters);
  out << fmt::format("epochs_completed: {}\nsteps: {}\n", result.checkpoint.epoch,
                     result.steps);
  if (!result.log.empty()) {
    const auto &last = result.log.back();
    out << fmt::format("final_l_ce: {:.6f}\nfinal_l_dr: {:.6f}\nfinal_total: {:.6f}\n",
                       last.l_ce, last.l_dr, last.total);
  }
  out << counters;
  out << fmt::format("checkpoint: {}\n", (dir / "final.ckpt").string());
  return kExitOk;
}

int Extract(const Common &common, const std::string &ckpt, const std::string &manifest_path,
            bool random_init, bool use_student, std::ostream &out) {
  RunConfig config = BaseConfig(common);
  if (common.seed_opt->count()) config.train.seed = common.seed;
  ValidateRunConfig(config);
  eval::EvalModel model = LoadOrInitModel(ckpt, random_init, config);
  const auto manifest = dataio::LoadManifest(manifest_path);
  const fs::path dir = common.out;
  Echo(config, dir);
  const pipeline::Fbank fbank(config.train.fbank, config.train.sample_rate);
  std::vector<std::string> ids;
  std::vector<eval::Embedding> embs;
  for (const auto &e : manifest.entries) {
    ids.push_back(e.utterance_id);
    embs.push_back(eval::ExtractEmbedding(model, dataio::ReadWav(manifest.Resolve(e)),
                                          fbank, use_student));
  }
  eval::WriteEmbeddings(ids, embs, dir / "embeddings.txt");
  out << fmt::format("embeddings: {} ({} rows x {} columns)\n",
                     (dir / "embeddings.txt").string(), embs.size(),
                     embs.empty() ? 0 : embs.front().size());
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string manifest;
  std::string trials;
  std::string scores_in;
  std::optional<double> p_target;
  bool random_init = false;
  bool use_student = false;
};

eval::TrialScoreSet ReadScoreTable(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  eval::TrialScoreSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string score, label;
    if (!(is >> score)) continue;
    if (lineno == 1 && score == "score") continue;
    if (!(is >> label) || (label != "0" && label != "1"))
      throw FormatError(fmt::format("{}:{}: expected 'score is_target'", path.string(), lineno));
    set.Add(std::stod(score), label == "1");
  }
  return set;
}

int Evaluate(const Common &common, const EvalFlags &f, std::ostream &out) {
  RunConfig config = BaseConfig(common);
  if (common.seed_opt->count()) config.train.seed = common.seed;
  if (f.p_target) config.dcf.p_target = *f.p_target;
  ValidateRunConfig(config);

  eval::TrialReport report;
  eval::TrialList trials;
  if (!f.scores_in.empty()) {
    report.scores = ReadScoreTable(f.scores_in);
    report.n_trials = report.scores.size();
    report.eer = eval::ComputeEer(report.scores);
    report.dcf = eval::ComputeMinDcf(report.scores, config.dcf);
  } else {
    if (f.manifest.empty() || f.trials.empty())
      throw ConfigError("--manifest and --trials are required (or --scores-in)");
    eval::EvalModel model = LoadOrInitModel(f.checkpoint, f.random_init, config);
    const auto manifest = dataio::LoadManifest(f.manifest);
    trials = eval::ReadTrials(f.trials);
    const pipeline::Fbank fbank(config.train.fbank, config.train.sample_rate);
    report = eval::RunTrials(model, manifest, trials, fbank, config.dcf, f.use_student);
  }
  std::ostringstream text;
  eval::WriteReport(report, text);
  out << text.str();
  if (!common.out.empty()) {
    const fs::path dir = common.out;
    Echo(config, dir);
    WriteText(dir / "report.txt", text.str());
    if (!trials.empty()) {
      std::ofstream table(dir / "scores.tsv");
      eval::WriteScoreTable(report, trials, table);
    }
  }
  return kExitOk;
}

int GradCheck(const Common &common, double eps, int n_probe, std::ostream &out) {
  core::TinyCheckConfig c;
  if (common.seed_opt->count()) c.seed = common.seed;
  c.eps = eps;
  c.n_probe = n_probe;
  const auto r = core::RunTinyGradCheck(c);
  out << fmt::format("max_rel_error: {:.3e}\nworst: {}[{}]\nprobed: {}\nskipped_at_kinks: {}\n",
                     r.max_rel_error, r.worst_param, r.worst_index, r.n_probed, r.n_skipped);
  for (const auto &[family, err] : r.by_family)
    out << fmt::format("  {}: {:.3e}\n", family, err);
  const long total = r.n_probed + r.n_skipped;
  const bool ok = r.max_rel_error < 1e-4 && r.n_skipped * 100 <= total;
  out << (ok ? "gradcheck: ok\n" : "gradcheck: FAILED\n");
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Self-distilled prototype speaker embeddings: data, training, evaluation",
               "sdpn"};
  app.require_subcommand(1);

  Common gen_c, train_c, ext_c, eval_c, gc_c;

  auto *gen = app.add_subcommand("gen-data", "generate a synthetic speaker corpus and trials");
  AddCommon(gen, &gen_c, true);
  std::optional<int> speakers, utts, n_target, n_nontarget;
  std::optional<double> duration;
  bool no_trials = false;
  gen->add_option("--speakers", speakers, "number of speakers");
  gen->add_option("--utts", utts, "utterances per speaker");
  gen->add_option("--duration", duration, "utterance duration in seconds");
  gen->add_option("--n-target", n_target, "target trials to write");
  gen->add_option("--n-nontarget", n_nontarget, "non-target trials to write");
  gen->add_flag("--no-trials", no_trials, "skip trial list generation");

  auto *tr = app.add_subcommand("train", "train student/teacher networks");
  AddCommon(tr, &train_c, true);
  TrainFlags tf;
  tr->add_option("--manifest", tf.manifest, "training manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--resume", tf.resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  tr->add_option("--mu", tf.mu, "diversity regularization weight");
  tr->add_option("--epochs", tf.epochs, "training epochs");
  tr->add_option("--batch-size", tf.batch_size, "utterances per step");
  tr->add_option("--peak-lr", tf.peak_lr, "learning rate after warmup");
  tr->add_flag("--no-wav-aug", tf.no_wav_aug, "disable noise and reverberation");
  tr->add_flag("--no-spec-aug", tf.no_spec_aug, "disable time/frequency masking");
  tr->add_flag("--no-prototypes", tf.no_prototypes, "use head outputs as logits");
  tr->add_flag("--dr-literal", tf.dr_literal, "sum the diversity term instead of averaging");
  tr->add_option("--stop-after-epoch", tf.stop_after_epoch,
                 "stop once this many epochs are complete");

  auto *ex = app.add_subcommand("extract", "write one embedding row per utterance");
  AddCommon(ex, &ext_c, true);
  std::string ex_ckpt, ex_manifest;
  bool ex_random = false, ex_student = false;
  ex->add_option("--checkpoint", ex_ckpt, "trained checkpoint")->check(CLI::ExistingFile);
  ex->add_option("--manifest", ex_manifest, "utterances to embed")->required()->check(CLI::ExistingFile);
  ex->add_flag("--random-init", ex_random, "use an untrained model built from --config/--seed");
  ex->add_flag("--student", ex_student, "use the student instead of the teacher");

  auto *ev = app.add_subcommand("evaluate", "score a trial list and print EER and minDCF");
  AddCommon(ev, &eval_c, false);
  EvalFlags ef;
  ev->add_option("--checkpoint", ef.checkpoint, "trained checkpoint")->check(CLI::ExistingFile);
  ev->add_option("--manifest", ef.manifest, "manifest resolving trial ids")->check(CLI::ExistingFile);
  ev->add_option("--trials", ef.trials, "trial list")->check(CLI::ExistingFile);
  ev->add_option("--scores-in", ef.scores_in, "precomputed 'score is_target' table")
      ->check(CLI::ExistingFile);
  ev->add_option("--p-target", ef.p_target, "target prior for minDCF");
  ev->add_flag("--random-init", ef.random_init, "use an untrained model built from --config/--seed");
  ev->add_flag("--student", ef.use_student, "use the student instead of the teacher");

  auto *gc = app.add_subcommand("gradcheck", "finite-difference check of the full loss gradient");
  AddCommon(gc, &gc_c, false);
  double eps = 1e-5;
  int n_probe = 0;
  gc->add_option("--eps", eps, "finite-difference step");
  gc->add_option("--n-probe", n_probe, "number of scalars to probe (0 = all)");

  std::vector<std::string> argv_store{"sdpn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return GenData(gen_c, speakers, utts, duration, n_target, n_nontarget, no_trials, out);
    if (tr->parsed()) return Train(train_c, tf, out);
    if (ex->parsed()) return Extract(ext_c, ex_ckpt, ex_manifest, ex_random, ex_student, out);
    if (ev->parsed()) return Evaluate(eval_c, ef, out);
    if (gc->parsed()) return GradCheck(gc_c, eps, n_probe, out);
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sdpn::cli
