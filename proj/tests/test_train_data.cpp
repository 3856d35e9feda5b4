#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"
#include "varsig/physics/registry.hpp"
#include "varsig/train/idx.hpp"
#include "varsig/train/images.hpp"
#include "varsig/train/metrics.hpp"
#include "varsig/train/report.hpp"
#include "varsig/train/synth.hpp"

namespace fs = std::filesystem;
using namespace varsig;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("varsig_train_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> dir_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::uint8_t> all;
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, dir).string();
    all.insert(all.end(), rel.begin(), rel.end());
    const auto b = read_file_bytes(f);
    all.insert(all.end(), b.begin(), b.end());
  }
  return all;
}

}  // namespace

TEST(Psnr, ExactMatchIsCapped) {
  const std::vector<double> f{0.2, 1.0, 0.5};
  EXPECT_EQ(psnr(f, f), 99.0);
  EXPECT_EQ(psnr_raw(f, f), std::numeric_limits<double>::infinity());
}

TEST(Psnr, HandEvaluatedPaperFormula) {
  const std::vector<double> t{1.0, 1.0}, h{1.0, 0.9};
  // MSE = 0.005, 10 log10(1 / 0.005) = 23.0103
  EXPECT_NEAR(psnr(h, t), 10.0 * std::log10(200.0), 1e-12);
  EXPECT_NEAR(psnr(h, t), 23.0103, 1e-4);
  EXPECT_DOUBLE_EQ(psnr(h, t, PsnrFormula::standard), psnr(h, t, PsnrFormula::peak));
}

TEST(Psnr, FormulasDifferByLogOfPeak) {
  const std::vector<double> t{2.0, 0.5, 1.0}, h{1.8, 0.6, 1.1};
  EXPECT_NEAR(psnr(h, t, PsnrFormula::standard) - psnr(h, t, PsnrFormula::peak), 10.0 * std::log10(2.0), 1e-12);
}

TEST(Psnr, ErrorsOnBadInput) {
  const std::vector<double> neg{-1.0, 0.0}, other{0.0, 0.1};
  EXPECT_THROW(psnr(other, neg), DomainError);
  EXPECT_THROW(psnr(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ShapeError);
  EXPECT_THROW(psnr_formula_from_string("max"), ConfigError);
}

TEST(Psnr, StrictlyDecreasingInMse) {
  const std::vector<double> t{1.0, 0.3, 0.7, 0.1};
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 50; ++k) {
    std::vector<double> h = t;
    h[2] += 0.01 * k;
    const double p = psnr_raw(h, t);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Fidelity, PerfectEstimateIsCapped) {
  const auto fm = make_forward_model(SystemId::hologram);
  std::vector<double> f(64 * 64, 0.0);
  f[40 * 64 + 30] = 0.8;
  EXPECT_EQ(fidelity(f, fm->apply(f), *fm), 99.0);
}

TEST(Fidelity, ZeroVideoEstimateClosedForm) {
  VideoConfig cfg;
  cfg.mask_seed = 2;
  const VideoCsModel model(cfg);
  SplitMix64 rng(3);
  const auto g = model.apply(synthetic_scene(rng, 64, 4));
  const std::vector<double> zero(model.signal_len(), 0.0);
  double gmax = 0, g2 = 0;
  for (double v : g) {
    gmax = std::max(gmax, v);
    g2 += v * v;
  }
  EXPECT_NEAR(fidelity(zero, g, model), 10.0 * std::log10(gmax / (g2 / static_cast<double>(g.size()))), 1e-10);
}

TEST(Fidelity, InvariantToNullSpaceComponents) {
  VideoConfig cfg;
  cfg.mask_seed = 4;
  const VideoCsModel model(cfg);
  SplitMix64 rng(5);
  const auto f_true = synthetic_scene(rng, 64, 4);
  const auto g = model.apply(f_true);
  std::vector<double> f_hat = f_true;
  for (double& v : f_hat) v += 0.05 * rng.normal();
  // Columns of A with no nonzeros span part of the null space.
  const auto A = as_matrix(model.masks());
  std::vector<double> colnorm(A.cols(), 0.0);
  for (int k = 0; k < A.outerSize(); ++k)
    for (decltype(A)::InnerIterator it(A, k); it; ++it) colnorm[it.col()] += it.value() * it.value();
  std::vector<double> shifted = f_hat;
  std::size_t touched = 0;
  for (std::size_t c = 0; c < colnorm.size(); ++c) {
    if (colnorm[c] == 0.0) {
      shifted[c] += rng.normal();
      ++touched;
    }
  }
  ASSERT_GT(touched, 1000u);
  EXPECT_DOUBLE_EQ(fidelity(shifted, g, model), fidelity(f_hat, g, model));
}

TEST(Idx, RoundTripAndLayout) {
  IdxArray a;
  a.dims = {2, 3, 2};
  for (int i = 0; i < 12; ++i) a.data.push_back(static_cast<std::uint8_t>(i * 20));
  const auto bytes = idx_encode(a);
  ASSERT_EQ(bytes.size(), 4u + 12 + 12);
  EXPECT_EQ(bytes[0], 0);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(bytes[2], 0x08);
  EXPECT_EQ(bytes[3], 3);
  EXPECT_EQ(bytes[7], 2);  // big-endian first dim
  const auto back = idx_decode(bytes);
  EXPECT_EQ(back.dims, a.dims);
  EXPECT_EQ(back.data, a.data);
  EXPECT_EQ(back.item_size(), 6u);
}

TEST(Idx, LabelFileMagic) {
  // 0x00000801, one dim of 3, labels 7 2 1
  const std::vector<std::uint8_t> bytes{0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1};
  const auto a = idx_decode(bytes);
  EXPECT_EQ(a.dims, std::vector<std::uint32_t>{3});
  EXPECT_EQ(a.data, (std::vector<std::uint8_t>{7, 2, 1}));
}

TEST(Idx, MalformedInputIsAFormatError) {
  EXPECT_THROW(idx_decode(std::vector<std::uint8_t>{0, 0, 9, 1, 0, 0, 0, 1, 5}), FormatError);
  EXPECT_THROW(idx_decode(std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 0, 3, 7}), FormatError);
  EXPECT_THROW(idx_decode(std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 0, 1, 7, 7}), FormatError);
  EXPECT_THROW(idx_decode(std::vector<std::uint8_t>{0, 0, 8}), FormatError);
}

TEST(Images, PngRoundTrip) {
  const fs::path dir = scratch("png");
  std::vector<std::uint8_t> px(5 * 3 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 7);
  write_png(dir / "a.png", 5, 3, 3, px);
  const auto img = load_image(dir / "a.png");
  ASSERT_EQ(img.width, 5u);
  ASSERT_EQ(img.height, 3u);
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_DOUBLE_EQ(img.rgb[i], px[i] / 255.0);
}

TEST(Images, PpmBinaryAndAscii) {
  const fs::path dir = scratch("ppm");
  const std::string bin = std::string("P6\n# comment\n2 1\n255\n") + std::string("\x00\x80\xff\x10\x20\x30", 6);
  write_text_file(dir / "b.ppm", bin);
  write_text_file(dir / "a.ppm", "P3\n2 1\n255\n0 128 255 16 32 48\n");
  const auto a = load_image(dir / "a.ppm"), b = load_image(dir / "b.ppm");
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_DOUBLE_EQ(a.rgb[1], 128.0 / 255.0);
  EXPECT_EQ(list_images(dir).size(), 2u);
  write_text_file(dir / "c.ppm", "P5\n1 1\n255\n");
  EXPECT_THROW(load_image(dir / "c.ppm"), FormatError);
}

TEST(Images, FitSquareCropsAndResizes) {
  RgbImage img{8, 4, std::vector<double>(8 * 4 * 3, 0.0)};
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 2; x < 6; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.rgb[(y * 8 + x) * 3 + c] = 1.0;
  const auto out = fit_square(img, 16);
  EXPECT_EQ(out.width, 16u);
  for (double v : out.rgb) EXPECT_DOUBLE_EQ(v, 1.0);  // central square is all ones
}

TEST(Images, DigitsAreDeterministicAndInked) {
  const auto a = synthetic_digits(20, 3), b = synthetic_digits(20, 3);
  EXPECT_EQ(a.images.data, b.images.data);
  EXPECT_EQ(a.images.dims, (std::vector<std::uint32_t>{20, 28, 28}));
  for (std::size_t i = 0; i < 20; ++i) {
    std::size_t ink = 0;
    for (std::size_t p = 0; p < 784; ++p) ink += a.images.data[i * 784 + p] > 128;
    EXPECT_GT(ink, 20u);
    EXPECT_LT(ink, 400u);
    EXPECT_LT(a.labels.data[i], 10);
  }
}

TEST(SynthPulse, RecordMatchesRecomputedTrace) {
  const auto ds = synth_pulse_dataset({1, 7}, StreakingConfig::defaults());
  ASSERT_EQ(ds.size(), 1u);
  const StreakingModel m;
  const auto g = m.apply(ds.records[0].f.data());
  EXPECT_EQ(std::vector<double>(ds.records[0].g.data().begin(), ds.records[0].g.data().end()), g);
  EXPECT_EQ(ds.records[0].f.shape(), Shape{440});
  EXPECT_EQ(ds.records[0].g.shape(), (Shape{256, 35}));
}

TEST(SynthPulse, CepDuplicatesHaveIdenticalTraces) {
  const auto ds = synth_pulse_dataset({100, 11}, StreakingConfig::defaults());
  EXPECT_EQ(ds.size(), 100u);
  std::size_t dups = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto it = ds.records[i].meta.find("cep_duplicate_of");
    if (it == ds.records[i].meta.end()) continue;
    ++dups;
    const std::size_t j = std::stoul(it->second);
    const auto gi = ds.records[i].g.data(), gj = ds.records[j].g.data();
    double d = 0, s = 0;
    for (std::size_t k = 0; k < gi.size(); ++k) {
      d = std::max(d, std::abs(gi[k] - gj[k]));
      s = std::max(s, std::abs(gj[k]));
    }
    EXPECT_LT(d / s, 1e-9);
    EXPECT_NE(ds.records[i].f, ds.records[j].f);
  }
  EXPECT_GE(dups, 1u);
  EXPECT_LE(dups, 15u);
  const fs::path root = scratch("pulse");
  const auto dir = write_dataset(root, ds);
  EXPECT_EQ(read_json_file(dir / "manifest.json")["count"], 100);
}

TEST(SynthVideo, DeterministicAndConsistent) {
  VideoConfig cfg;
  cfg.mask_seed = 3;
  const auto a = synth_video_dataset({3, 5}, cfg), b = synth_video_dataset({3, 5}, cfg);
  ASSERT_EQ(a.size(), 3u);
  const VideoCsModel model(cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.records[i].f, b.records[i].f);
    const auto g = compress(a.records[i].f.data(), model.masks());
    EXPECT_EQ(std::vector<double>(a.records[i].g.data().begin(), a.records[i].g.data().end()), g);
    for (double v : a.records[i].f.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(SynthVideo, FromImageDirectory) {
  const fs::path dir = scratch("imgdir");
  for (int k = 0; k < 3; ++k) {
    std::vector<std::uint8_t> px(80 * 60 * 3);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>((i * (k + 3)) % 251);
    write_png(dir / ("img" + std::to_string(k) + ".png"), 80, 60, 3, px);
  }
  VideoConfig cfg;
  cfg.size = 32;
  const auto ds = synth_video_dataset({2, 1}, cfg, dir);
  EXPECT_EQ(ds.extra["source"], "image_dir");
  EXPECT_EQ(ds.records[0].f.shape(), (Shape{32, 32, 3, 4}));
  EXPECT_THROW(synth_video_dataset({2, 1}, cfg, scratch("noimg")), MissingFileError);
}

TEST(SynthHologram, DeterministicAndConsistent) {
  const FresnelConfig cfg;
  const auto a = synth_hologram_dataset({3, 9}, cfg), b = synth_hologram_dataset({3, 9}, cfg);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.records[i].f, b.records[i].f);
    EXPECT_EQ(a.records[i].g, b.records[i].g);
    const auto f = a.records[i].f.data();
    std::vector<cplx> e(f.begin(), f.end());
    const auto I = hologram_intensity(fresnel_propagate(e, cfg), cfg.a_ref);
    for (std::size_t k = 0; k < I.size(); ++k) EXPECT_NEAR(a.records[i].g.data()[k], I[k], 1e-12 * (1 + I[k]));
    // zero padding outside the central 28 x 28
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 64; ++x)
        if (y < 18 || y >= 46 || x < 18 || x >= 46) EXPECT_EQ(f[y * 64 + x], 0.0);
  }
}

TEST(SynthHologram, ReadsMnistIdx) {
  const fs::path dir = scratch("mnist");
  const auto digits = synthetic_digits(5, 1);
  idx_write(dir / "train-images-idx3-ubyte", digits.images);
  const auto ds = synth_hologram_dataset({4, 2}, FresnelConfig{}, dir);
  EXPECT_EQ(ds.extra["source"], "mnist");
  for (const auto& r : ds.records) {
    const std::size_t idx = std::stoul(r.meta.at("digit_index"));
    for (std::size_t y = 0; y < 28; ++y)
      for (std::size_t x = 0; x < 28; ++x)
        EXPECT_DOUBLE_EQ(r.f.data()[(y + 18) * 64 + x + 18], digits.images.data[idx * 784 + y * 28 + x] / 255.0);
  }
}

TEST(SynthGeneric, PairsShareTheirMeasurement) {
  const json phys = default_physics(SystemId::generic);
  const auto ds = synth_generic_dataset({10, 4}, phys);
  for (std::size_t i = 0; i + 1 < ds.size(); i += 2) {
    EXPECT_EQ(ds.records[i].g, ds.records[i + 1].g);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(ds.records[i + 1].f.data()[k], -ds.records[i].f.data()[k]);
  }
}

TEST(SynthNoise, RecordedAndOffByDefault) {
  const json phys = default_physics(SystemId::generic);
  const auto clean = synth_generic_dataset({2, 4}, phys);
  EXPECT_EQ(clean.records[0].meta.at("noise_sigma"), "0");
  const auto fm = make_forward_model(SystemId::generic, phys);
  EXPECT_EQ(fm->apply(clean.records[0].f.data()),
            std::vector<double>(clean.records[0].g.data().begin(), clean.records[0].g.data().end()));
  SynthOptions noisy{2, 4};
  noisy.noise_sigma = 0.01;
  const auto n = synth_generic_dataset(noisy, phys);
  EXPECT_EQ(n.records[0].meta.at("noise_sigma"), "0.01");
  EXPECT_NE(n.records[0].g, clean.records[0].g);
  EXPECT_EQ(n.records[0].f, clean.records[0].f);
}

TEST(SynthDataset, WrittenTwiceIsByteIdentical) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_dataset(a, synth_hologram_dataset({4, 7}, FresnelConfig{}));
  write_dataset(b, synth_hologram_dataset({4, 7}, FresnelConfig{}));
  EXPECT_EQ(dir_bytes(a), dir_bytes(b));
}

TEST(Report, AggregatesAreOrderFreeMeans) {
  MetricsReport r;
  r.methods = {"variational", "deterministic"};
  SplitMix64 rng(1);
  for (std::size_t rec = 0; rec < 7; ++rec)
    for (const char* m : {"variational", "deterministic"})
      r.rows.push_back({rec, m, 0, rng.uniform(10, 40), rng.uniform(10, 40)});
  const auto agg = r.aggregates();
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].method, "variational");
  double s = 0;
  for (const auto& row : r.rows)
    if (row.method == "deterministic") s += row.fidelity_db;
  EXPECT_NEAR(agg[1].mean_fidelity_db, s / 7.0, 1e-12);
  MetricsReport shuffled = r;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  std::swap(shuffled.rows[1], shuffled.rows[5]);
  const auto agg2 = shuffled.aggregates();
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(agg2[i].mean_psnr_db, agg[i].mean_psnr_db);
    EXPECT_EQ(agg2[i].mean_fidelity_db, agg[i].mean_fidelity_db);
  }
  const auto csv = r.to_csv();
  EXPECT_EQ(csv.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(csv.find("record,method,instance,psnr_db,fidelity_db\n"), std::string::npos);
}
