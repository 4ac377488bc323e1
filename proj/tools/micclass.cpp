// micclass: command-line front end for the microphone-classification pipeline.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "micclass/audio.hpp"
#include "micclass/binary_io.hpp"
#include "micclass/channel.hpp"
#include "micclass/container.hpp"
#include "micclass/error.hpp"
#include "micclass/harness/config.hpp"
#include "micclass/harness/experiment.hpp"
#include "micclass/harness/manifest.hpp"
#include "micclass/harness/synth.hpp"
#include "micclass/spectral.hpp"

namespace fs = std::filesystem;
using namespace micclass;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> sets;
  bool quiet = false;
};

ExperimentConfig make_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
  }
  // command-line flags win over the file
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.jobs = *g.jobs;
  if (!g.out.empty()) cfg.out = g.out;
  cfg.validate();
  return cfg;
}

void say(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << "\n";
}

fs::path model_path(const ExperimentConfig& cfg, const std::string& explicit_path) {
  return explicit_path.empty() ? cfg.out / "models.mfml" : fs::path(explicit_path);
}

ModelContainer open_models(const fs::path& p) {
  if (!fs::exists(p)) throw ModelError("model file '" + p.string() + "' not found");
  return load_model(p);
}

ModelContainer open_or_new(const fs::path& p) { return fs::exists(p) ? load_model(p) : ModelContainer{}; }

void write_text(const fs::path& p, const std::string& s) {
  write_file_bytes(p, std::vector<std::uint8_t>(s.begin(), s.end()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microphone classification under noise: spectrogram denoising, channel fingerprints, SVM"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--config", g.config, "Experiment config (key = value text)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--jobs", g.jobs, "Worker threads for per-file stages")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Override a config key (key=value), repeatable")->allow_extra_args(false);
  app.add_flag("-q,--quiet", g.quiet, "No progress messages");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a speaker-wise manifest from class/speaker/file.wav");
  std::string ingest_root, ingest_split, ingest_dest;
  bool ingest_any = false;
  ingest->add_option("root", ingest_root, "Corpus root")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--split", ingest_split, "first:N | fraction:F | explicit:train=a,b;test=c");
  ingest->add_option("--manifest-out", ingest_dest, "Where to write the manifest (default <out>/manifest.csv)");
  ingest->add_flag("--no-eval-checks", ingest_any, "Allow manifests unusable for evaluation");

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Generate the synthetic device corpus and speech corpus");

  // add-noise
  auto* noise = app.add_subcommand("add-noise", "Add white Gaussian noise at a given SNR");
  std::string noise_in, noise_out;
  double noise_snr = 25;
  std::uint64_t noise_seed_value = 0;
  noise->add_option("input", noise_in)->required()->check(CLI::ExistingFile);
  noise->add_option("output", noise_out)->required();
  noise->add_option("--snr", noise_snr, "SNR in dB")->required();
  noise->add_option("--noise-seed", noise_seed_value, "Noise seed (default: --seed)");

  // extract
  auto* extract = app.add_subcommand("extract", "Spectrograms (and channel features with a model) for a manifest");
  double extract_snr = kCleanSnr;
  std::string extract_model;
  extract->add_option("--snr", extract_snr, "Corrupt at this SNR first (default clean)");
  extract->add_option("--model", extract_model, "Model file with a speech model; adds features.csv");

  // train-gmm / train-svm / train-dncnn
  auto* tgmm = app.add_subcommand("train-gmm", "Fit the speech GMM and average spectra on speech_manifest");
  auto* tsvm = app.add_subcommand("train-svm", "Fit the SVM on clean training features");
  auto* tdn = app.add_subcommand("train-dncnn", "Train SNR-matched DnCNN denoisers");
  std::string train_model;
  std::vector<double> dn_snrs;
  for (auto* sc : {tgmm, tsvm, tdn}) sc->add_option("--model", train_model, "Model file (default <out>/models.mfml)");
  tdn->add_option("--snr", dn_snrs, "Training SNRs (default: finite ladder entries)");

  // denoise
  auto* den = app.add_subcommand("denoise", "Denoise a spectrogram file");
  std::string den_in, den_out, den_method = "dncnn", den_model;
  double den_snr = 25;
  den->add_option("input", den_in)->required()->check(CLI::ExistingFile);
  den->add_option("output", den_out)->required();
  den->add_option("--method", den_method, "none|tv|nlm|bilateral|wavelet|dncnn");
  den->add_option("--snr", den_snr, "Which DnCNN to use");
  den->add_option("--model", den_model, "Model file");

  // classify
  auto* cls = app.add_subcommand("classify", "Classify WAV files with the trained models");
  std::vector<std::string> cls_inputs;
  std::string cls_model;
  cls->add_option("inputs", cls_inputs)->required()->check(CLI::ExistingFile);
  cls->add_option("--model", cls_model, "Model file");

  // select-denoiser / evaluate
  auto* sel = app.add_subcommand("select-denoiser", "Denoiser comparison report (table1)");
  auto* eval = app.add_subcommand("evaluate", "SNR sweep with and without denoising (table2, table3)");
  std::string run_model;
  sel->add_option("--model", run_model, "Model file");
  eval->add_option("--model", run_model, "Model file");

  // whole pipeline
  auto* pipe = app.add_subcommand("pipeline", "Train everything and write every report");
  bool pipe_synth = false;
  pipe->add_flag("--synth", pipe_synth, "Generate the synthetic corpora first");

  // inspect-model
  auto* insp = app.add_subcommand("inspect-model", "Describe a model container");
  std::string insp_path;
  insp->add_option("path", insp_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = make_config(g);
    auto progress = [&](const std::string& m) { say(g, m); };

    if (*ingest) {
      const SplitRule rule = parse_split_rule(ingest_split.empty() ? cfg.split_rule : ingest_split);
      const Manifest m = build_manifest(ingest_root, rule, !ingest_any);
      fs::path dest = ingest_dest.empty() ? cfg.out / "manifest.csv" : fs::path(ingest_dest);
      // entries are stored relative to the manifest's own directory
      Manifest stored = m;
      const fs::path root_abs = fs::absolute(ingest_root);
      const fs::path dest_dir = fs::absolute(dest).parent_path();
      for (auto& e : stored.entries) e.path = fs::relative(root_abs / e.path, dest_dir).generic_string();
      save_manifest(dest, stored);
      std::printf("%zu files, %zu classes, %zu train / %zu test speakers -> %s\n", m.entries.size(),
                  m.classes().size(), m.speakers(Split::kTrain).size(), m.speakers(Split::kTest).size(),
                  dest.string().c_str());
    } else if (*synth) {
      auto so = cfg.synth;
      so.seed = cfg.seed;
      const auto c = synth_device_corpus(cfg.out / "corpus", so);
      auto sp = cfg.synth_speech;
      sp.seed = cfg.seed;
      synth_speech_corpus(cfg.out / "speech", sp);
      std::printf("%zu device recordings, %zu devices -> %s\n", c.manifest.entries.size(), c.devices.size(),
                  (cfg.out / "corpus").string().c_str());
    } else if (*noise) {
      AudioClip clip = load_wav(noise_in);
      const std::uint64_t s = noise->count("--noise-seed") ? noise_seed_value : cfg.seed;
      save_wav(noise_out, add_awgn(clip, NoiseSpec{noise_snr, s}));
    } else if (*extract) {
      if (cfg.manifest.empty()) throw UsageError("extract needs manifest in the config");
      const Manifest m = load_manifest(cfg.manifest);
      const auto ex = load_examples(m, cfg);
      const auto specs = spectrograms(ex, extract_snr, cfg);
      for (std::size_t i = 0; i < ex.size(); ++i) {
        std::string name = ex[i].clip.source_id;
        for (char& c : name)
          if (c == '#') c = '_';
        save_spectrogram(cfg.out / "spectrograms" / (name + ".mfsg"), specs[i]);
      }
      if (!extract_model.empty()) {
        const auto mc = open_models(extract_model);
        const SpeechModel sm = decode_speech_model(mc.require(SectionType::kSpeechModel).payload);
        const Matrix X = channel_features(specs, sm, cfg);
        std::string csv = "source,class,speaker,split";
        for (std::size_t k = 0; k < X.cols(); ++k) csv += ",h" + std::to_string(k);
        csv += "\n";
        char buf[40];
        for (std::size_t i = 0; i < ex.size(); ++i) {
          csv += ex[i].clip.source_id + "," + ex[i].class_label + "," + ex[i].speaker_id + "," + split_name(ex[i].split);
          for (double v : X.row(i)) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            csv += buf;
          }
          csv += "\n";
        }
        write_text(cfg.out / "features.csv", csv);
      }
      std::printf("%zu spectrograms -> %s\n", ex.size(), (cfg.out / "spectrograms").string().c_str());
    } else if (*tgmm) {
      if (cfg.speech_manifest.empty()) throw UsageError("train-gmm needs speech_manifest in the config");
      const fs::path mp = model_path(cfg, train_model);
      auto mc = open_or_new(mp);
      const SpeechModel sm = fit_speech_model(load_manifest(cfg.speech_manifest), cfg);
      mc.put({SectionType::kSpeechModel, "speech", encode_speech_model(sm)});
      mc.put({SectionType::kDenoiserParams, "dsp", encode_denoiser_params(cfg.dsp)});
      save_model(mp, mc);
      std::printf("speech model: %zu mixtures x %zu dims -> %s\n", sm.gmm.mixtures(), sm.gmm.dim(), mp.string().c_str());
    } else if (*tsvm) {
      if (cfg.manifest.empty()) throw UsageError("train-svm needs manifest in the config");
      const fs::path mp = model_path(cfg, train_model);
      auto mc = open_models(mp);
      const SpeechModel sm = decode_speech_model(mc.require(SectionType::kSpeechModel).payload);
      const Manifest m = load_manifest(cfg.manifest);
      validate_manifest(m, true);
      const auto train = select_split(load_examples(m, cfg), Split::kTrain);
      const SvmModel svm = fit_classifier(train, sm, cfg);
      mc.put({SectionType::kSvm, "svm", encode_svm(svm)});
      save_model(mp, mc);
      std::printf("svm: %zu classes, %zu machines, gamma %.6g -> %s\n", svm.classes.size(), svm.machines.size(),
                  svm.gamma, mp.string().c_str());
    } else if (*tdn) {
      if (cfg.manifest.empty()) throw UsageError("train-dncnn needs manifest in the config");
      const fs::path mp = model_path(cfg, train_model);
      auto mc = open_or_new(mp);
      const Manifest m = load_manifest(cfg.manifest);
      const auto train = select_split(load_examples(m, cfg), Split::kTrain);
      if (dn_snrs.empty())
        for (double s : cfg.snr_ladder)
          if (!std::isinf(s)) dn_snrs.push_back(s);
      for (double s : dn_snrs) {
        say(g, "training DnCNN at " + format_snr(s) + " dB");
        const auto rec = fit_dncnn(train, s, cfg, [&](int e, double loss) {
          say(g, "  epoch " + std::to_string(e + 1) + " loss " + std::to_string(loss));
        });
        mc.put({SectionType::kDnCnn, dncnn_section_name(s), encode_dncnn(rec)});
        save_model(mp, mc);
      }
      std::printf("%zu denoisers -> %s\n", dn_snrs.size(), mp.string().c_str());
    } else if (*den) {
      const LogPowerSpectrogram spec = load_spectrogram(den_in);
      DenoiserParams dsp = cfg.dsp;
      std::optional<DnCnnRecord> rec;
      if (den_method == "dncnn") {
        const auto mc = open_models(model_path(cfg, den_model));
        rec = decode_dncnn(mc.require(SectionType::kDnCnn, dncnn_section_name(den_snr)).payload);
      }
      save_spectrogram(den_out, denoise_spectrogram(den_method, spec, dsp, rec ? &rec->model : nullptr));
    } else if (*cls) {
      const ModelBundle b = unpack_models(open_models(model_path(cfg, cls_model)));
      for (const auto& path : cls_inputs) {
        AudioClip clip = load_wav(path);
        if (clip.sample_rate != cfg.sample_rate) clip = resample(clip, cfg.sample_rate);
        const auto h = estimate_channel(log_power(clip, b.speech.stft_cfg), b.speech, cfg.channel).h;
        std::printf("%s,%s\n", path.c_str(), predict(b.svm, h).label.c_str());
      }
    } else if (*sel || *eval) {
      if (cfg.manifest.empty()) throw UsageError("needs manifest in the config");
      const ModelBundle b = unpack_models(open_models(model_path(cfg, run_model)));
      const Manifest m = load_manifest(cfg.manifest);
      validate_manifest(m, true);
      const auto test = select_split(load_examples(m, cfg), Split::kTest);
      if (*sel) {
        const auto rep = run_denoiser_selection(cfg, b, test);
        write_text(cfg.out / "table1.csv", table1_csv(rep));
        write_text(cfg.out / "table1.txt", table1_text(rep));
        std::fputs(table1_text(rep).c_str(), stdout);
      } else {
        const auto rep = run_evaluation(cfg, b, test);
        write_text(cfg.out / "table2.csv", table2_csv(rep));
        if (cfg.denoise) write_text(cfg.out / "table3.csv", table3_csv(rep));
        write_text(cfg.out / "evaluation.txt", evaluation_text(rep));
        std::fputs(evaluation_text(rep).c_str(), stdout);
      }
    } else if (*pipe) {
      PipelineOptions po;
      po.synthesize = pipe_synth;
      po.log = progress;
      const auto res = run_pipeline(cfg, po);
      std::fputs(table1_text(res.selection).c_str(), stdout);
      std::fputs("\n", stdout);
      std::fputs(evaluation_text(res.evaluation).c_str(), stdout);
    } else if (*insp) {
      std::fputs(describe(open_models(insp_path)).c_str(), stdout);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
