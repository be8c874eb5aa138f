#include "rmdm/errors.hpp"
#include "rmdm/io.hpp"
#include "rmdm/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

using namespace rmdm;
using namespace rmdm::testing;

namespace {

std::vector<Epoch> float_epochs(int n_trials, int n, int t, std::mt19937_64& rng) {
  std::vector<Epoch> out;
  for (int k = 0; k < n_trials; ++k) {
    Epoch e;
    e.fs = 250.0;
    e.data = gaussian(n, t, rng).cast<float>().cast<double>();
    e.label = k % 3 == 2 ? std::nullopt : std::optional<int>(k % 3);
    for (int c = 0; c < n; ++c) e.channels.push_back("ch" + std::to_string(c));
    out.push_back(e);
  }
  return out;
}

std::string serialized(const std::vector<Epoch>& epochs) {
  std::ostringstream out;
  write_epochs(out, epochs, "mi");
  return out.str();
}

EpochSet parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_epochs(in);
}

std::string error_of(const std::string& bytes) {
  try {
    parse(bytes);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("rmdm_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(EpochFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  const auto epochs = float_epochs(7, 4, 33, rng);
  const EpochSet back = parse(serialized(epochs));
  EXPECT_EQ(back.modality, "mi");
  ASSERT_EQ(back.epochs.size(), epochs.size());
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    EXPECT_EQ(back.epochs[k].data, epochs[k].data);
    EXPECT_EQ(back.epochs[k].label, epochs[k].label);
    EXPECT_EQ(back.epochs[k].fs, 250.0);
    EXPECT_EQ(back.epochs[k].channels, epochs[k].channels);
  }
  EXPECT_EQ(serialized(back.epochs), serialized(epochs));
}

TEST(EpochFile, HeaderIsOneJsonLineThenLittleEndianFloats) {
  Epoch e;
  e.fs = 10.0;
  e.data = Matrix{{1.0, -2.0}};
  e.label = 1;
  const std::string bytes = serialized({e});
  const auto nl = bytes.find('\n');
  ASSERT_NE(nl, std::string::npos);
  EXPECT_EQ(bytes.size() - nl - 1, 2 * sizeof(float));
  const unsigned char one[4] = {0x00, 0x00, 0x80, 0x3f};
  EXPECT_EQ(std::memcmp(bytes.data() + nl + 1, one, 4), 0);
  EXPECT_NE(bytes.find("\"n_trials\":1"), std::string::npos);
}

TEST(EpochFile, TruncatedPayloadNamesTrialCount) {
  std::mt19937_64 rng(2);
  const std::string bytes = serialized(float_epochs(5, 3, 10, rng));
  const std::string msg = error_of(bytes.substr(0, bytes.size() - 7));
  EXPECT_NE(msg.find("n_trials"), std::string::npos) << msg;
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
}

TEST(EpochFile, RejectsMalformedInputs) {
  std::mt19937_64 rng(3);
  const std::string good = serialized(float_epochs(2, 2, 4, rng));
  EXPECT_NE(error_of("").find("header"), std::string::npos);
  EXPECT_NE(error_of("not json\n").find("epoch file"), std::string::npos);
  EXPECT_NE(error_of("[1,2]\n").find("epoch file"), std::string::npos);
  EXPECT_FALSE(error_of(good + "xyz").empty());
  std::string wrong_version = good;
  wrong_version.replace(wrong_version.find("\"version\":1"), 11, "\"version\":9");
  EXPECT_NE(error_of(wrong_version).find("version"), std::string::npos);
  std::string no_fs = good;
  no_fs.replace(no_fs.find("\"fs_hz\""), 7, "\"fs_xx\"");
  EXPECT_NE(error_of(no_fs).find("fs_hz"), std::string::npos);
  std::string bad_labels = good;
  const auto pos = bad_labels.find("\"labels\":[");
  bad_labels.insert(pos + 10, "0,");
  EXPECT_NE(error_of(bad_labels).find("labels"), std::string::npos);
}

TEST(EpochFile, EmptySetRoundTrips) {
  std::vector<Epoch> none;
  // An empty set has no shape; writing it must still produce a readable file.
  const EpochSet back = parse(serialized(none));
  EXPECT_TRUE(back.epochs.empty());
}

TEST(EpochFile, WriterRejectsMixedShapes) {
  std::mt19937_64 rng(4);
  auto epochs = float_epochs(2, 3, 8, rng);
  epochs[1].data = gaussian(3, 9, rng);
  std::ostringstream out;
  EXPECT_THROW(write_epochs(out, epochs), ContractError);
}

TEST(ModelFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  MdmModel m;
  m.recipe.modality = Modality::P300TwoClass;
  m.recipe.shrinkage = 0.01;
  m.recipe.prototypes = {Prototype{1, gaussian(3, 6, rng), 12}};
  m.class_ids = {0, 1};
  m.means = {random_spd(6, 100, rng), random_spd(6, 100, rng)};
  m.counts = {40, 12};
  Preprocess pre;
  pre.band = kErpBand;
  pre.decimate_to = 64.0;
  const LoadedModel back = model_from_string(model_to_string(m, pre));
  EXPECT_EQ(back.model.class_ids, m.class_ids);
  EXPECT_EQ(back.model.counts, m.counts);
  for (int z = 0; z < 2; ++z) EXPECT_EQ(back.model.means[z].values(), m.means[z].values());
  EXPECT_EQ(back.model.recipe.modality, Modality::P300TwoClass);
  EXPECT_EQ(std::get<double>(back.model.recipe.shrinkage), 0.01);
  ASSERT_EQ(back.model.recipe.prototypes.size(), 1u);
  EXPECT_EQ(back.model.recipe.prototypes[0].mean, m.recipe.prototypes[0].mean);
  ASSERT_TRUE(back.preprocess && back.preprocess->band);
  EXPECT_EQ(back.preprocess->band->high_hz, 16.0);
  EXPECT_EQ(back.preprocess->decimate_to, 64.0);
  EXPECT_EQ(model_to_string(back.model, back.preprocess), model_to_string(m, pre));
}

TEST(ModelFile, RejectsBrokenDocuments) {
  EXPECT_THROW(model_from_string("{"), DataError);
  EXPECT_THROW(model_from_string("{}"), DataError);
  MdmModel m;
  m.class_ids = {0, 1};
  m.means = {SpdMatrix::identity(2), SpdMatrix::identity(2)};
  m.counts = {1, 1};
  std::string text = model_to_string(m);
  text.replace(text.find("rmdm-model"), 10, "other-kind");
  EXPECT_THROW(model_from_string(text), DataError);
}

TEST(FusedFile, RoundTripRestoresState) {
  std::mt19937_64 rng(6);
  MdmModel g;
  g.recipe.modality = Modality::MotorImagery;
  g.class_ids = {1, 2};
  g.means = {random_spd(3, 10, rng), random_spd(3, 10, rng)};
  g.counts = {5, 5};
  FusionConfig cfg;
  cfg.ramp = 10;
  FusedClassifier fc(g, cfg);
  for (int i = 0; i < 9; ++i) fc.absorb_feature(random_spd(3, 10, rng), 1 + i % 2);
  fc.complete_repetitions(3);
  const FusedClassifier back = fused_from_string(fused_to_string(fc));
  EXPECT_EQ(back.n_rep(), 3);
  EXPECT_EQ(back.ramp(), 10);
  EXPECT_EQ(back.alpha(), fc.alpha());
  for (const auto& [z, st] : fc.individual_state()) {
    EXPECT_EQ(back.individual_state().at(z).mean.values(), st.mean.values());
    EXPECT_EQ(back.individual_state().at(z).count, st.count);
  }
  const SpdMatrix probe = random_spd(3, 10, rng);
  EXPECT_EQ(back.fused_distances(probe).values, fc.fused_distances(probe).values);
  EXPECT_EQ(fused_to_string(back), fused_to_string(fc));
}

TEST(Files, AtomicWriteReplacesWholeFile) {
  const auto dir = scratch_dir();
  const auto path = dir / "out.bin";
  write_file_atomic(path, std::string(1000, 'a'));
  write_file_atomic(path, "short");
  EXPECT_EQ(read_file(path), "short");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.bin.tmp"));
  EXPECT_THROW(write_file_atomic(dir / "missing" / "x", "y"), DataError);
  EXPECT_THROW(read_file(dir / "nope"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Files, EpochPathRoundTrip) {
  std::mt19937_64 rng(7);
  const auto dir = scratch_dir();
  const auto epochs = float_epochs(3, 2, 5, rng);
  write_epochs(dir / "e.bin", epochs, "erp");
  const EpochSet back = read_epochs(dir / "e.bin");
  EXPECT_EQ(back.modality, "erp");
  EXPECT_EQ(back.epochs[2].data, epochs[2].data);
  EXPECT_THROW(read_epochs(dir / "absent.bin"), DataError);
  std::filesystem::remove_all(dir);
}
