#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "varsig/core/dataset.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/core/tensor_file.hpp"
#include "varsig/physics/registry.hpp"
#include "varsig/physics/video_cs.hpp"

namespace fs = std::filesystem;
using namespace varsig;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("varsig_core_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  rng.fill_normal(v);
  return v;
}

}  // namespace

TEST(Flatten, StreakingSignalIsAlreadyFlat) {
  auto v = random_values(440, 1);
  SignalVec f(SystemId::streaking, {440}, v);
  EXPECT_EQ(flatten(f), v);
}

TEST(Flatten, VideoFramesHave12NSquaredEntries) {
  SignalVec f(SystemId::video_cs, native_signal_shape(SystemId::video_cs),
              random_values(64 * 64 * 3 * 4, 2));
  EXPECT_EQ(flatten(f).size(), 12u * 64u * 64u);
  EXPECT_EQ(f.flat_len(), 49152u);
}

TEST(Flatten, RoundTripIsBitExactOverRandomShapes) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Shape s;
    const std::size_t rank = 1 + rng.below(4);
    for (std::size_t r = 0; r < rank; ++r) s.push_back(1 + rng.below(7));
    const auto v = random_values(shape_size(s), 100 + trial);
    SignalVec f(SystemId::generic, s, v);
    const SignalVec back = unflatten(SystemId::generic, s, flatten(f));
    EXPECT_EQ(back, f);
    EXPECT_EQ(std::memcmp(back.data().data(), v.data(), v.size() * sizeof(double)), 0);
  }
}

TEST(SignalVec, RejectsNonFiniteAndWrongSize) {
  EXPECT_THROW(SignalVec(SystemId::generic, {3}, {1.0, 2.0}), ShapeError);
  EXPECT_THROW(SignalVec(SystemId::generic, {2}, {1.0, NAN}), DomainError);
}

TEST(MeasurementVec, NonnegFlagIsEnforced) {
  EXPECT_THROW(MeasurementVec(SystemId::hologram, {2}, {1.0, -0.5}, true), DomainError);
  EXPECT_NO_THROW(MeasurementVec(SystemId::video_cs, {2}, {1.0, -0.5}, false));
}

TEST(TensorFile, EmptyArrayHasDimsZero) {
  const Tensor t = make_tensor({0}, {});
  const auto bytes = tensor_encode(t);
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 8);
  const Tensor back = tensor_decode(bytes);
  EXPECT_EQ(back.dims, Shape{0});
  EXPECT_TRUE(back.values.empty());
}

TEST(TensorFile, RandomF64RoundTripIsBitExact) {
  const fs::path dir = scratch("tns");
  const Tensor t = make_tensor({3, 5, 7}, random_values(105, 4));
  tensor_write(dir / "a.tns", t);
  const Tensor back = tensor_read(dir / "a.tns");
  EXPECT_EQ(back.dims, t.dims);
  ASSERT_EQ(back.values.size(), t.values.size());
  EXPECT_EQ(std::memcmp(back.values.data(), t.values.data(), 105 * sizeof(double)), 0);
  // re-encoding reproduces the file byte for byte
  EXPECT_EQ(tensor_encode(back), read_file_bytes(dir / "a.tns"));
}

TEST(TensorFile, F32RoundTripOfF32Values) {
  std::vector<double> v = random_values(24, 5);
  for (double& x : v) x = static_cast<float>(x);
  const Tensor t = make_tensor({2, 3, 4}, v, DType::f32);
  const auto bytes = tensor_encode(t);
  EXPECT_EQ(bytes.size(), 16u + 3 * 8 + 24 * 4);
  EXPECT_EQ(tensor_decode(bytes), t);
}

TEST(TensorFile, HeaderLayoutIsLittleEndian) {
  const auto bytes = tensor_encode(make_tensor({2}, {1.0, -2.0}));
  ASSERT_GE(bytes.size(), 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TNSR");
  EXPECT_EQ(bytes[4], 1);   // version
  EXPECT_EQ(bytes[8], 1);   // dtype f64
  EXPECT_EQ(bytes[12], 1);  // rank
  EXPECT_EQ(bytes[16], 2);  // dims[0]
  double x;
  std::memcpy(&x, bytes.data() + 24, 8);
  EXPECT_EQ(x, 1.0);
}

TEST(TensorFile, TruncatedPayloadIsAFormatError) {
  auto bytes = tensor_encode(make_tensor({4}, {1, 2, 3, 4}));
  bytes.resize(bytes.size() - 3);
  try {
    tensor_decode(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), bytes.size());  // where the data ran out
  }
}

TEST(TensorFile, MalformedHeadersAreFormatErrors) {
  const auto good = tensor_encode(make_tensor({2, 2}, {1, 2, 3, 4}));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(tensor_decode(bad_magic), FormatError);
  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(tensor_decode(bad_version), FormatError);
  auto bad_rank = good;
  bad_rank[12] = 5;
  EXPECT_THROW(tensor_decode(bad_rank), FormatError);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(tensor_decode(trailing), FormatError);
  EXPECT_THROW(tensor_decode(std::span<const std::uint8_t>(good.data(), 10)), FormatError);
  EXPECT_THROW(tensor_read("/nonexistent/x.tns"), MissingFileError);
}

TEST(TensorFile, RejectsNonFiniteAndHighRank) {
  EXPECT_THROW(tensor_encode(make_tensor({1}, {INFINITY})), DomainError);
  EXPECT_THROW(tensor_encode(make_tensor({1, 1, 1, 1, 1}, {1.0})), ShapeError);
}

TEST(Rng, SplitMix64ReferenceSequence) {
  // First outputs for seed 0 of the published SplitMix64 generator.
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(r.next(), 0x06C45D188009454FULL);
}

TEST(Rng, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Rng, NormalMomentsAreStandard) {
  SplitMix64 r(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Parallel, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 5) throw DomainError("boom");
               }),
               DomainError);
}

TEST(ConfigHash, IndependentOfKeyOrder) {
  json a = json::parse(R"({"x": 1, "y": [1, 2]})");
  json b = json::parse(R"({"y": [1, 2], "x": 1})");
  EXPECT_EQ(config_hash_hex(a), config_hash_hex(b));
  EXPECT_EQ(config_hash_hex(a).size(), 16u);
  EXPECT_NE(config_hash_hex(a), config_hash_hex(json::parse(R"({"x": 2, "y": [1, 2]})")));
}

TEST(ConfigHash, Fnv1aOfKnownString) {
  // FNV-1a 64 of the dump "1" (one byte 0x31).
  EXPECT_EQ(config_hash(json(1)), 0xaf63ac4c86019afcULL);
}

TEST(ForwardModel, ApplyIsDeterministicForEverySystem) {
  for (SystemId s : {SystemId::video_cs, SystemId::hologram, SystemId::generic}) {
    const auto fm = make_forward_model(s, default_physics(s));
    const auto f = random_values(fm->signal_len(), 6);
    std::vector<double> fpos = f;
    for (double& v : fpos) v = std::abs(v);
    EXPECT_EQ(fm->apply(fpos), fm->apply(fpos)) << to_string(s);
  }
}

TEST(ForwardModel, LinearModelsSuperpose) {
  for (const json& phys : {json{{"kind", "matrix"}, {"rows", 12}, {"cols", 20}, {"seed", 3}}}) {
    const auto fm = make_forward_model(SystemId::generic, phys);
    const auto f1 = random_values(20, 7), f2 = random_values(20, 8);
    std::vector<double> mix(20);
    for (int i = 0; i < 20; ++i) mix[i] = 0.3 * f1[i] - 1.7 * f2[i];
    const auto g1 = fm->apply(f1), g2 = fm->apply(f2), gm = fm->apply(mix);
    for (int i = 0; i < 12; ++i) EXPECT_NEAR(gm[i], 0.3 * g1[i] - 1.7 * g2[i], 1e-10 * (1 + std::abs(gm[i])));
  }
}

TEST(ForwardModel, TypedApplyChecksSystemAndShape) {
  const auto fm = make_forward_model(SystemId::generic, default_physics(SystemId::generic));
  SignalVec wrong_system(SystemId::hologram, {16}, random_values(16, 9));
  EXPECT_THROW(fm->apply(wrong_system), SystemMismatchError);
  SignalVec wrong_shape(SystemId::generic, {15}, random_values(15, 9));
  EXPECT_THROW(fm->apply(wrong_shape), ShapeError);
  SignalVec ok(SystemId::generic, {16}, random_values(16, 9));
  const MeasurementVec g = fm->apply(ok);
  EXPECT_TRUE(g.nonneg());
  EXPECT_EQ(g.shape(), Shape{32});
}

TEST(Dataset, WriteReadRoundTrip) {
  const fs::path root = scratch("ds");
  Dataset ds;
  ds.system = SystemId::generic;
  ds.split = "test";
  ds.seed = 42;
  ds.physics = {{"kind", "matrix"}};
  for (std::size_t i = 0; i < 3; ++i) {
    ds.records.push_back({SignalVec(SystemId::generic, {4}, random_values(4, i)),
                          MeasurementVec(SystemId::generic, {2}, random_values(2, 10 + i), false),
                          i * 17, {{"k", std::to_string(i)}}});
  }
  const fs::path dir = write_dataset(root, ds);
  EXPECT_EQ(dir, root / "generic" / "test");
  EXPECT_TRUE(fs::exists(dir / "000002.f.tns"));
  const Dataset back = read_dataset(root, SystemId::generic, "test");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.config_hash(), ds.config_hash());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.records[i].f, ds.records[i].f);
    EXPECT_EQ(back.records[i].g, ds.records[i].g);
    EXPECT_EQ(back.records[i].seed, ds.records[i].seed);
    EXPECT_EQ(back.records[i].meta, ds.records[i].meta);
  }
  const json manifest = read_json_file(dir / "manifest.json");
  EXPECT_EQ(manifest["count"], 3);
  EXPECT_EQ(manifest["config_hash"], ds.config_hash());
}

TEST(Dataset, MissingManifestIsReported) {
  EXPECT_THROW(read_dataset(scratch("empty")), MissingFileError);
}
