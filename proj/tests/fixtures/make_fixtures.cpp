// Regenerates the committed container fixtures. Not part of the test run; the
// point of the fixtures is that they stay fixed while the code moves.
#include <cstdio>
#include <filesystem>

#include "micclass/container.hpp"
#include "micclass/spectral.hpp"
#include "micclass/svm.hpp"

using namespace micclass;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <dir>\n");
    return 1;
  }
  const std::filesystem::path dir = argv[1];

  // values are dyadic so every platform decodes them exactly
  LogPowerSpectrogram s;
  s.values = Matrix(6, 9);
  for (std::size_t l = 0; l < 6; ++l)
    for (std::size_t b = 0; b < 9; ++b) s.values(l, b) = -60.0 + 2.5 * l + 0.125 * b;
  s.config.n_fft = 16;
  s.config.hop = 8;
  s.sample_rate = 8000;
  s.source_id = "fixture.wav#0";
  s.speaker_id = "spk01";
  s.class_label = "dev01";
  save_spectrogram(dir / "fixture.mfsg", s);

  Matrix x(4, 2);
  const double pts[4][2] = {{0, 0}, {0, 1}, {2, 2}, {2, 3}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = pts[i][j];
  ModelContainer c;
  c.put({SectionType::kSvm, "svm", encode_svm(svm_train(x, {"a", "a", "b", "b"}))});
  DnCnnRecord r;
  r.model = make_dncnn(2, 2, 7);
  r.snr_db = 25.0;
  r.epoch_loss = {0.5, 0.25};
  c.put({SectionType::kDnCnn, "snr=25", encode_dncnn(r)});
  c.put({SectionType::kDenoiserParams, "dsp", encode_denoiser_params(DenoiserParams{})});
  save_model(dir / "fixture.mfml", c);
  return 0;
}
