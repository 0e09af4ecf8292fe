#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "comrope/io.hpp"

namespace comrope::io {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int t = 0; t < 1000; ++t) {
    const double v = std::bit_cast<double>(bits(rng));
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(AngleSetJson, BitExactRoundTrip) {
  const ModelDims dims{16, 2, 4, 2, 1};
  for (Variant v : {Variant::LieRE, Variant::ComRoPE_AP, Variant::ComRoPE_LD}) {
    const auto set = build_set(v, dims, 31);
    const auto text = set_to_json(set).dump();
    const auto back = set_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back.variant(), v);
    EXPECT_EQ(back.dims(), dims);
    EXPECT_EQ(back.seed(), 31u);
    EXPECT_EQ(back.params().flatten(), set.params().flatten());
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(back.block(a, h, j).matrix(), set.block(a, h, j).matrix());
  }
}

TEST(AngleSetJson, VanillaRoundTrip) {
  const auto set = build_vanilla({8, 1, 2, 2, 1}, 1e-3);
  const auto back = set_from_json(set_to_json(set));
  EXPECT_EQ(back.theta_base(), 1e-3);
  EXPECT_EQ(back.block(1, 0, 1).matrix(), set.block(1, 0, 1).matrix());
}

TEST(AngleSetJson, RejectsTamperedBlocks) {
  auto doc = set_to_json(build_set(Variant::ComRoPE_LD, {8, 1, 4, 2, 1}, 1));
  doc["blocks"][0][0][0][0][1] = 123.0;
  EXPECT_THROW(set_from_json(doc), FormatError);
  auto bad = set_to_json(build_set(Variant::ComRoPE_LD, {8, 1, 4, 2, 1}, 1));
  bad["variant"] = "mixed";
  EXPECT_THROW(set_from_json(bad), FormatError);
  EXPECT_THROW(set_from_json(nlohmann::json::object()), FormatError);
}

TEST(CrpeBatch, RoundTrip) {
  Rng rng(2);
  const auto batch = attention::random_batch(5, {24, 3, 4, 2, 1}, rng);
  std::stringstream ss;
  write_batch(ss, batch);
  EXPECT_EQ(ss.str().size(), 4u + 16u + 2u * 5 * 24 * 8);
  EXPECT_EQ(ss.str().substr(0, 4), "CRPE");
  EXPECT_EQ(read_batch(ss), batch);
}

TEST(CrpeBatch, LittleEndianHeader) {
  attention::AttentionBatch b(1, 1, 2);
  b.q = {1.0, 2.0};
  b.k = {3.0, 4.0};
  std::stringstream ss;
  write_batch(ss, b);
  const std::string s = ss.str();
  EXPECT_EQ(static_cast<unsigned char>(s[4]), 1u);  // version
  EXPECT_EQ(static_cast<unsigned char>(s[16]), 2u); // head_dim
  // 1.0 = 0x3ff0000000000000, lowest byte first
  EXPECT_EQ(static_cast<unsigned char>(s[20]), 0u);
  EXPECT_EQ(static_cast<unsigned char>(s[27]), 0x3fu);
}

TEST(CrpeBatch, RejectsCorruptStreams) {
  std::stringstream bad_magic("CRPX0000000000000000");
  EXPECT_THROW(read_batch(bad_magic), FormatError);
  attention::AttentionBatch b(2, 1, 2);
  std::stringstream ss;
  write_batch(ss, b);
  std::stringstream truncated(ss.str().substr(0, ss.str().size() - 3));
  EXPECT_THROW(read_batch(truncated), FormatError);
  std::string wrong_version = ss.str();
  wrong_version[4] = 7;
  std::stringstream wv(wrong_version);
  EXPECT_THROW(read_batch(wv), FormatError);
}

TEST(CoordsCsv, RoundTrip) {
  const std::vector<Coordinate> cs{{0.1, 1.0 / 3.0, -2.0}, {1e-300, 5.0, 7.25}};
  std::stringstream ss;
  write_coords_csv(ss, cs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "x1,x2,x3");
  EXPECT_EQ(read_coords_csv(ss), cs);
}

TEST(CoordsCsv, Errors) {
  std::stringstream empty;
  EXPECT_THROW(read_coords_csv(empty), FormatError);
  std::stringstream ragged("x1,x2\n1,2\n3\n");
  EXPECT_THROW(read_coords_csv(ragged), FormatError);
  std::stringstream junk("x1\nabc\n");
  EXPECT_THROW(read_coords_csv(junk), FormatError);
  const std::vector<Coordinate> mixed{{1.0}, {1.0, 2.0}};
  std::stringstream out;
  EXPECT_THROW(write_coords_csv(out, mixed), FormatError);
}

TEST(Reports, JsonAndCsv) {
  verify::VerificationReport r;
  r.suite = "rope-equation";
  r.trials = 100;
  r.max_residual = 2.5e-15;
  r.tolerance = 1e-8;
  r.passed = true;
  r.seed = 7;
  const auto j = report_to_json(r);
  EXPECT_EQ(j["suite"], "rope-equation");
  EXPECT_EQ(j["tol"].get<double>(), 1e-8);
  EXPECT_FALSE(j.contains("witness"));
  r.witness = verify::Witness{{1.0, 2.0}, {3.0, 4.0}, 1};
  EXPECT_TRUE(report_to_json(r).contains("witness"));

  std::ostringstream os;
  const std::vector<verify::VerificationReport> reports{r};
  write_reports_csv(os, reports);
  EXPECT_EQ(os.str(), "suite,seed,trials,tol,max_residual,passed\nrope-equation,7,100,1e-08,2.5e-15,true\n");
}

TEST(WriteAtomic, ReplacesContentAndLeavesNoTemp) {
  const auto dir = std::filesystem::temp_directory_path() / "comrope_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_atomic(path, "first");
  write_atomic(path, "second");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace comrope::io
