#include "micclass/harness/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "micclass/binary_io.hpp"
#include "micclass/channel.hpp"
#include "micclass/denoise_dsp.hpp"
#include "micclass/error.hpp"
#include "micclass/rng.hpp"

namespace micclass {

namespace fs = std::filesystem;

namespace {

std::uint64_t snr_tag(double snr_db) { return std::bit_cast<std::uint64_t>(snr_db); }

std::string num(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::vector<Example> load_examples(const Manifest& m, const ExperimentConfig& cfg) {
  std::vector<std::vector<AudioClip>> per_entry(m.entries.size());
  std::vector<std::string> errors(m.entries.size());
  const long n = static_cast<long>(m.entries.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
  for (long i = 0; i < n; ++i) {
    const auto& e = m.entries[static_cast<std::size_t>(i)];
    try {
      AudioClip clip = load_wav(m.resolve(e));
      if (clip.sample_rate != cfg.sample_rate) clip = resample(clip, cfg.sample_rate);
      clip.source_id = e.path;
      clip.speaker_id = e.speaker_id;
      clip.class_label = e.class_label;
      per_entry[static_cast<std::size_t>(i)] = segment(clip, cfg.segment_seconds);
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(i)] = ex.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw DataError(err);

  std::vector<Example> out;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    for (std::size_t k = 0; k < per_entry[i].size(); ++k) {
      Example ex;
      ex.clip = std::move(per_entry[i][k]);
      ex.clip.source_id = e.path + "#" + std::to_string(k);
      ex.class_label = e.class_label;
      ex.speaker_id = e.speaker_id;
      ex.split = e.split;
      ex.index = out.size();
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<Example> select_split(const std::vector<Example>& all, Split s) {
  std::vector<Example> out;
  for (const auto& e : all)
    if (e.split == s) out.push_back(e);
  return out;
}

std::uint64_t noise_seed(std::uint64_t seed, double snr_db, std::size_t example_index) {
  return derive_seed(derive_seed(seed, 0x6e6f697365ULL ^ snr_tag(snr_db)), example_index);
}

AudioClip corrupt(const Example& e, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return e.clip;
  return add_awgn(e.clip, NoiseSpec{snr_db, noise_seed(seed, snr_db, e.index)});
}

std::vector<LogPowerSpectrogram> spectrograms(const std::vector<Example>& ex, double snr_db,
                                              const ExperimentConfig& cfg) {
  std::vector<LogPowerSpectrogram> out(ex.size());
  const long n = static_cast<long>(ex.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
  for (long i = 0; i < n; ++i) {
    const auto& e = ex[static_cast<std::size_t>(i)];
    auto spec = log_power(corrupt(e, snr_db, cfg.seed), cfg.stft);
    spec.class_label = e.class_label;
    out[static_cast<std::size_t>(i)] = std::move(spec);
  }
  return out;
}

Matrix channel_features(const std::vector<LogPowerSpectrogram>& specs, const SpeechModel& model,
                        const ExperimentConfig& cfg) {
  if (specs.empty()) return {};
  if (!(model.stft_cfg == specs.front().config))
    throw ModelError("speech model was trained with a different STFT configuration");
  const std::size_t bins = specs.front().bins();
  Matrix out(specs.size(), bins);
  std::vector<std::string> errors(specs.size());
  const long n = static_cast<long>(specs.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
  for (long i = 0; i < n; ++i) {
    try {
      const auto h = estimate_channel(specs[static_cast<std::size_t>(i)], model, cfg.channel).h;
      std::copy(h.begin(), h.end(), out.row(static_cast<std::size_t>(i)).begin());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw DataError(err);
  return out;
}

std::vector<std::string> labels_of(const std::vector<Example>& ex) {
  std::vector<std::string> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.push_back(e.class_label);
  return out;
}

SpeechModel fit_speech_model(const Manifest& speech, const ExperimentConfig& cfg) {
  const auto ex = load_examples(speech, cfg);
  if (ex.empty()) throw DataError("speech manifest yields no segments");
  const auto specs = spectrograms(ex, kCleanSnr, cfg);
  SpeechModelOptions o;
  o.mfcc = cfg.mfcc;
  o.gmm = cfg.gmm;
  o.gmm.seed = derive_seed(cfg.seed, 11);
  o.avg = cfg.avg;
  return train_speech_model(specs, o);
}

SvmModel fit_classifier(const std::vector<Example>& train, const SpeechModel& model, const ExperimentConfig& cfg) {
  if (train.empty()) throw DataError("no training examples");
  const auto X = channel_features(spectrograms(train, kCleanSnr, cfg), model, cfg);
  return svm_train(X, labels_of(train), cfg.svm);
}

DnCnnRecord fit_dncnn(const std::vector<Example>& train, double snr_db, const ExperimentConfig& cfg,
                      const EpochCallback& on_epoch) {
  if (train.empty()) throw DataError("no training examples");
  if (std::isinf(snr_db)) throw UsageError("a denoiser needs a finite training SNR");
  const auto clean = spectrograms(train, kCleanSnr, cfg);
  const auto noisy = spectrograms(train, snr_db, cfg);
  std::vector<ImagePair> pairs;
  pairs.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    pairs.push_back({to_image(noisy[i]).pixels, to_image(clean[i]).pixels});
  DnCnnRecord r;
  r.snr_db = snr_db;
  r.train = cfg.dncnn_train;
  r.train.seed = derive_seed(cfg.seed, 0x646e636eULL ^ snr_tag(snr_db));
  r.model = make_dncnn(cfg.dncnn_depth, cfg.dncnn_width, derive_seed(r.train.seed, 1));
  r.epoch_loss = train_paired(r.model, pairs, r.train, on_epoch).epoch_loss;
  return r;
}

std::string dncnn_section_name(double snr_db) { return "snr=" + format_snr(snr_db); }

ModelContainer pack_models(const ModelBundle& b) {
  ModelContainer c;
  c.put({SectionType::kSpeechModel, "speech", encode_speech_model(b.speech)});
  c.put({SectionType::kSvm, "svm", encode_svm(b.svm)});
  c.put({SectionType::kDenoiserParams, "dsp", encode_denoiser_params(b.dsp)});
  for (const auto& [snr, rec] : b.dncnn) c.put({SectionType::kDnCnn, dncnn_section_name(snr), encode_dncnn(rec)});
  return c;
}

ModelBundle unpack_models(const ModelContainer& c) {
  ModelBundle b;
  b.speech = decode_speech_model(c.require(SectionType::kSpeechModel).payload);
  b.svm = decode_svm(c.require(SectionType::kSvm).payload);
  if (const auto* s = c.find(SectionType::kDenoiserParams)) b.dsp = decode_denoiser_params(s->payload);
  for (const auto& s : c.sections) {
    if (s.type != SectionType::kDnCnn) continue;
    auto rec = decode_dncnn(s.payload);
    const double snr = rec.snr_db;
    b.dncnn.emplace(snr, std::move(rec));
  }
  return b;
}

namespace {

Matrix denoise_image(const std::string& name, const Matrix& v, const DenoiserParams& dsp, const DnCnnModel* net) {
  if (name == "none") return v;
  if (name == "tv") return tv_denoise(v, dsp.tv);
  if (name == "nlm") return nlm_denoise(v, dsp.nlm);
  if (name == "bilateral") return bilateral_denoise(v, dsp.bilateral);
  if (name == "wavelet") return bayes_shrink(v, dsp.wavelet);
  if (name == "dncnn") {
    if (!net) throw ModelError("dncnn denoiser requested without a trained model");
    return dncnn_denoise(*net, v);
  }
  throw UsageError("unknown denoiser '" + name + "'");
}

}  // namespace

LogPowerSpectrogram denoise_spectrogram(const std::string& name, const LogPowerSpectrogram& spec,
                                        const DenoiserParams& dsp, const DnCnnModel* net) {
  ImageView img = to_image(spec);
  img.pixels = denoise_image(name, img.pixels, dsp, net);
  return from_image(img, spec);
}

ClassificationMetrics score(const SvmModel& svm, const Matrix& features, const std::vector<std::string>& truth) {
  if (features.rows() != truth.size()) throw DataError("feature/label count mismatch");
  ConfusionMatrix cm(svm.classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predict(svm, features.row(i)).label);
  return classification_metrics(cm);
}

SelectionReport run_denoiser_selection(const ExperimentConfig& cfg, const ModelBundle& models,
                                       const std::vector<Example>& test) {
  if (test.empty()) throw DataError("no test examples");
  SelectionReport rep;
  rep.snr_db = cfg.selection_snr;
  rep.n_test = test.size();
  const DnCnnModel* net = nullptr;
  if (std::find(cfg.selection_denoisers.begin(), cfg.selection_denoisers.end(), "dncnn") !=
      cfg.selection_denoisers.end()) {
    const auto it = models.dncnn.find(cfg.selection_snr);
    if (it == models.dncnn.end())
      throw ModelError("no DnCNN trained at " + format_snr(cfg.selection_snr) + " dB");
    net = &it->second.model;
  }
  const auto clean = spectrograms(test, kCleanSnr, cfg);
  const auto noisy = spectrograms(test, cfg.selection_snr, cfg);
  const auto truth = labels_of(test);
  const long n = static_cast<long>(test.size());
  for (const auto& name : cfg.selection_denoisers) {
    std::vector<LogPowerSpectrogram> den(test.size());
    std::vector<double> p(test.size()), s(test.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
    for (long i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const Matrix ref = to_image(clean[k]).pixels;
      ImageView img = to_image(noisy[k]);
      img.pixels = denoise_image(name, img.pixels, models.dsp, net);
      p[k] = psnr(ref, img.pixels);
      s[k] = ssim(ref, img.pixels);
      den[k] = from_image(img, noisy[k]);
    }
    SelectionRow row;
    row.denoiser = name;
    for (std::size_t k = 0; k < test.size(); ++k) {
      row.psnr += p[k];
      row.ssim += s[k];
    }
    row.psnr /= static_cast<double>(test.size());
    row.ssim /= static_cast<double>(test.size());
    row.mca = score(models.svm, channel_features(den, models.speech, cfg), truth).mca;
    rep.rows.push_back(row);
  }
  return rep;
}

EvaluationReport run_evaluation(const ExperimentConfig& cfg, const ModelBundle& models,
                                const std::vector<Example>& test) {
  if (test.empty()) throw DataError("no test examples");
  EvaluationReport rep;
  const auto truth = labels_of(test);
  for (double snr : cfg.snr_ladder) {
    const auto noisy = spectrograms(test, snr, cfg);
    rep.without_denoising.push_back(
        {snr, "none", score(models.svm, channel_features(noisy, models.speech, cfg), truth), test.size()});
    if (!cfg.denoise) continue;

    const DnCnnRecord* rec = nullptr;
    if (auto it = models.dncnn.find(snr); it != models.dncnn.end()) {
      rec = &it->second;
    } else if (std::isinf(snr)) {
      // clean input: borrow the model trained at the mildest noise level
      for (const auto& [s, r] : models.dncnn)
        if (!std::isinf(s) && (!rec || s > rec->snr_db)) rec = &r;
    }
    if (!rec) throw ModelError("no SNR-matched DnCNN for " + format_snr(snr) + " dB");

    std::vector<LogPowerSpectrogram> den(noisy.size());
    const long n = static_cast<long>(noisy.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
    for (long i = 0; i < n; ++i)
      den[static_cast<std::size_t>(i)] =
          denoise_spectrogram("dncnn", noisy[static_cast<std::size_t>(i)], models.dsp, &rec->model);
    rep.with_denoising.push_back({snr, "dncnn@" + format_snr(rec->snr_db),
                                  score(models.svm, channel_features(den, models.speech, cfg), truth),
                                  test.size()});
  }
  return rep;
}

namespace {

std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w;
  for (const auto& r : rows) {
    if (w.size() < r.size()) w.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  std::string out;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    std::string line;
    for (std::size_t i = 0; i < rows[j].size(); ++i) {
      const std::string& cell = rows[j][i];
      // first column left aligned, numbers right aligned
      if (i == 0)
        line += cell + std::string(w[i] - cell.size(), ' ');
      else
        line += "  " + std::string(w[i] - cell.size(), ' ') + cell;
    }
    out += line + "\n";
    if (j == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < w.size(); ++i) total += w[i] + (i ? 2 : 0);
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

}  // namespace

std::string table1_csv(const SelectionReport& r) {
  std::string s = "denoiser,snr_db,psnr_db,ssim,mca_percent,n_test\n";
  for (const auto& row : r.rows)
    s += row.denoiser + "," + format_snr(r.snr_db) + "," + num(row.psnr, 4) + "," + num(row.ssim, 4) + "," +
         num(row.mca, 2) + "," + std::to_string(r.n_test) + "\n";
  return s;
}

std::string table1_text(const SelectionReport& r) {
  std::vector<std::vector<std::string>> rows{{"Denoiser", "PSNR", "SSIM", "MCA"}};
  for (const auto& row : r.rows) rows.push_back({row.denoiser, num(row.psnr, 2), num(row.ssim, 3), num(row.mca, 2)});
  return "Denoiser selection at " + format_snr(r.snr_db) + " dB SNR (" + std::to_string(r.n_test) +
         " test spectrograms)\n\n" + aligned(rows);
}

namespace {

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string s = "snr_db,model,accuracy_percent,precision,recall,n_test\n";
  for (const auto& r : rows)
    s += format_snr(r.snr_db) + "," + r.model + "," + num(r.metrics.mca, 2) + "," +
         num(r.metrics.macro_precision, 4) + "," + num(r.metrics.macro_recall, 4) + "," + std::to_string(r.n_test) +
         "\n";
  return s;
}

std::string eval_text(const std::string& title, const std::vector<EvalRow>& rows) {
  std::vector<std::vector<std::string>> t{{"SNR (dB)", "Model", "Accuracy", "Precision", "Recall"}};
  for (const auto& r : rows)
    t.push_back({format_snr(r.snr_db), r.model, num(r.metrics.mca, 2), num(r.metrics.macro_precision, 3),
                 num(r.metrics.macro_recall, 3)});
  return title + "\n\n" + aligned(t);
}

}  // namespace

std::string table2_csv(const EvaluationReport& r) { return eval_csv(r.without_denoising); }
std::string table3_csv(const EvaluationReport& r) { return eval_csv(r.with_denoising); }

std::string evaluation_text(const EvaluationReport& r) {
  std::string s = eval_text("Without denoising", r.without_denoising);
  if (!r.with_denoising.empty()) s += "\n" + eval_text("With SNR-matched DnCNN denoising", r.with_denoising);
  return s;
}

std::string counts_csv(const std::vector<Example>& all) {
  std::map<std::string, std::pair<long, long>> counts;
  for (const auto& e : all) {
    auto& c = counts[e.class_label];
    (e.split == Split::kTrain ? c.first : c.second) += 1;
  }
  std::string s = "class,train_segments,test_segments\n";
  for (const auto& [cls, c] : counts) s += cls + "," + std::to_string(c.first) + "," + std::to_string(c.second) + "\n";
  return s;
}

namespace {

void write_text(const fs::path& p, const std::string& text, std::vector<fs::path>& files) {
  write_file_bytes(p, std::vector<std::uint8_t>(text.begin(), text.end()));
  files.push_back(p);
}

}  // namespace

PipelineResult run_pipeline(ExperimentConfig cfg, const PipelineOptions& opts) {
  auto log = [&](const std::string& msg) {
    if (opts.log) opts.log(msg);
  };
  cfg.validate();
  PipelineResult res;
  fs::create_directories(cfg.out);

  if (opts.synthesize) {
    log("synthesizing corpora");
    auto so = cfg.synth;
    so.seed = cfg.seed;
    synth_device_corpus(cfg.out / "corpus", so);
    auto sp = cfg.synth_speech;
    sp.seed = cfg.seed;
    synth_speech_corpus(cfg.out / "speech", sp);
    cfg.manifest = cfg.out / "corpus" / "manifest.csv";
    cfg.speech_manifest = cfg.out / "speech" / "manifest.csv";
    for (const char* f : {"corpus/manifest.csv", "corpus/devices.csv", "speech/manifest.csv"})
      res.files.push_back(cfg.out / f);
  }
  if (cfg.manifest.empty()) throw UsageError("no manifest configured");
  if (cfg.speech_manifest.empty()) throw UsageError("no speech_manifest configured");

  const Manifest manifest = load_manifest(cfg.manifest);
  validate_manifest(manifest, true);
  const auto all = load_examples(manifest, cfg);
  const auto train = select_split(all, Split::kTrain);
  const auto test = select_split(all, Split::kTest);
  log("loaded " + std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test segments");

  log("training speech model");
  res.models.speech = fit_speech_model(load_manifest(cfg.speech_manifest), cfg);
  log("training classifier on clean features");
  res.models.svm = fit_classifier(train, res.models.speech, cfg);
  res.models.dsp = cfg.dsp;

  std::vector<double> dn_snrs;
  if (opts.evaluation && cfg.denoise)
    for (double s : cfg.snr_ladder)
      if (!std::isinf(s)) dn_snrs.push_back(s);
  if (opts.selection && std::find(cfg.selection_denoisers.begin(), cfg.selection_denoisers.end(), "dncnn") !=
                            cfg.selection_denoisers.end())
    dn_snrs.push_back(cfg.selection_snr);
  std::sort(dn_snrs.begin(), dn_snrs.end());
  dn_snrs.erase(std::unique(dn_snrs.begin(), dn_snrs.end()), dn_snrs.end());
  for (double s : dn_snrs) {
    log("training DnCNN at " + format_snr(s) + " dB");
    res.models.dncnn.emplace(s, fit_dncnn(train, s, cfg, [&](int e, double loss) {
      log("  epoch " + std::to_string(e + 1) + " loss " + num(loss, 6));
    }));
  }

  const fs::path model_path = cfg.out / "models.mfml";
  save_model(model_path, pack_models(res.models));
  res.files.push_back(model_path);

  if (opts.selection) {
    log("denoiser selection at " + format_snr(cfg.selection_snr) + " dB");
    res.selection = run_denoiser_selection(cfg, res.models, test);
    write_text(cfg.out / "table1.csv", table1_csv(res.selection), res.files);
    write_text(cfg.out / "table1.txt", table1_text(res.selection), res.files);
  }
  if (opts.evaluation) {
    log("SNR sweep");
    res.evaluation = run_evaluation(cfg, res.models, test);
    write_text(cfg.out / "table2.csv", table2_csv(res.evaluation), res.files);
    if (cfg.denoise) write_text(cfg.out / "table3.csv", table3_csv(res.evaluation), res.files);
    write_text(cfg.out / "evaluation.txt", evaluation_text(res.evaluation), res.files);
  }
  write_text(cfg.out / "counts.csv", counts_csv(all), res.files);
  write_text(cfg.out / "config.effective.txt", encode_config(cfg), res.files);
  std::sort(res.files.begin(), res.files.end());
  return res;
}

}  // namespace micclass
