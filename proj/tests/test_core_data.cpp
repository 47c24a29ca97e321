#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "psodr/core_data.hpp"
#include "psodr/record_io.hpp"
#include "psodr/synth.hpp"

namespace psodr {
namespace {

namespace fs = std::filesystem;

SubjectRecord small_record(std::size_t super_epochs = 5) {
  SynthConfig cfg;
  cfg.n_super_epochs = super_epochs;
  cfg.n_channels = 4;
  cfg.sub_epoch_samples = 20;
  cfg.informative_bins = {3};
  cfg.seed = 42;
  return synth_subject(cfg);
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("psodr_core_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ValidateRecord, WellFormedRecordHasNoViolations) { EXPECT_TRUE(validate_record(small_record()).empty()); }

TEST(ValidateRecord, MissingLabelIsReported) {
  auto r = small_record();
  r.labels.pop_back();
  const auto problems = validate_record(r);
  ASSERT_FALSE(problems.empty());
  EXPECT_EQ(problems, std::vector<std::string>{"label length mismatch"});
}

TEST(ValidateRecord, ZeroSampleRateIsReported) {
  auto r = small_record();
  r.sample_rate = 0;
  EXPECT_EQ(validate_record(r), std::vector<std::string>{"sample_rate must be positive"});
}

TEST(ValidateRecord, IsPureAndDetectsLabelDisagreement) {
  auto r = small_record();
  r.trials.label[0] = 1 - r.trials.label[0];
  const auto first = validate_record(r);
  EXPECT_EQ(first, validate_record(r));
  EXPECT_NE(std::find(first.begin(), first.end(), "sub-epoch label differs from super-epoch label"), first.end());
}

TEST(ValidateRecord, NonContiguousGroupsAreReported) {
  auto r = small_record();
  for (int& g : r.trials.group_id)
    if (g == 1) g = 7;
  const auto problems = validate_record(r);
  EXPECT_NE(std::find(problems.begin(), problems.end(), "group ids not contiguous"), problems.end());
}

TEST(RecordIo, SaveLoadRoundTripIsExact) {
  const auto dir = scratch_dir("roundtrip");
  const auto r = small_record(5);
  const auto manifest = save_record(r, dir);
  const auto loaded = load_record(manifest);
  EXPECT_EQ(loaded, r);

  // Saving the loaded record again reproduces the payload byte for byte.
  const auto dir2 = scratch_dir("roundtrip2");
  save_record(loaded, dir2);
  std::ifstream a(dir / (r.subject_id + ".f32"), std::ios::binary), b(dir2 / (r.subject_id + ".f32"), std::ios::binary);
  const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.size(), r.trials.data.values.size() * 4);
}

TEST(RecordIo, PayloadIsLittleEndianFloat32InSubepochChannelSampleOrder) {
  SubjectRecord r;
  r.subject_id = "tiny";
  r.sample_rate = 4;
  r.n_channels = 2;
  r.labels = {1};
  r.trials.data = Tensor3(1, 2, 2);
  r.trials.data.values = {1.0, -2.0, 0.5, 3.0};
  r.trials.group_id = {0};
  r.trials.label = {1};
  const auto dir = scratch_dir("layout");
  save_record(r, dir);
  std::ifstream in(dir / "tiny.f32", std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  ASSERT_EQ(bytes.size(), 16u);
  // 1.0f = 0x3f800000, -2.0f = 0xc0000000
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[2]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0xc0);
}

TEST(RecordIo, DimensionMismatchIsRejected) {
  const auto dir = scratch_dir("mismatch");
  const auto manifest = save_record(small_record(), dir);
  nlohmann::json j;
  std::ifstream(manifest) >> j;
  j["n_channels"] = j["n_channels"].get<int>() + 1;
  std::ofstream(manifest, std::ios::trunc) << j.dump();
  EXPECT_THROW(
      {
        try {
          load_record(manifest);
        } catch (const DataError& e) {
          EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
          throw;
        }
      },
      DataError);
}

TEST(RecordIo, UnknownVersionIsRejected) {
  const auto dir = scratch_dir("version");
  const auto manifest = save_record(small_record(), dir);
  nlohmann::json j;
  std::ifstream(manifest) >> j;
  j["format_version"] = "2";
  std::ofstream(manifest, std::ios::trunc) << j.dump();
  try {
    load_record(manifest);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown format version"), std::string::npos);
  }
}

TEST(RecordIo, MissingFileIsRejected) {
  EXPECT_THROW(load_record(fs::temp_directory_path() / "psodr_does_not_exist.json"), DataError);
}

TEST(Mask, ValidateMaskFlagsDuplicatesAndRange) {
  EXPECT_TRUE(validate_mask(Mask{{0, 3}, {{1, 2}, {0, 4}}}, 4, 5).empty());
  EXPECT_FALSE(validate_mask(Mask{{0, 0}, {{1, 2}, {0, 4}}}, 4, 5).empty());
  EXPECT_FALSE(validate_mask(Mask{{0, 1}, {{1, 1}, {0, 4}}}, 4, 5).empty());
  EXPECT_FALSE(validate_mask(Mask{{0, 4}, {{1, 2}, {0, 4}}}, 4, 5).empty());
  EXPECT_FALSE(validate_mask(Mask{{0, 1}, {{1, 2}, {0, 5}}}, 4, 5).empty());
}

TEST(ContingencyTable, CountsAddUpToPredictions) {
  const std::vector<int> truth{1, 1, 0, 0, 1}, pred{1, 0, 0, 1, 1};
  const auto t = ContingencyTable::from_predictions(truth, pred);
  EXPECT_EQ(t.tp, 2u);
  EXPECT_EQ(t.fn, 1u);
  EXPECT_EQ(t.tn, 1u);
  EXPECT_EQ(t.fp, 1u);
  EXPECT_EQ(t.total(), truth.size());
}

}  // namespace
}  // namespace psodr
