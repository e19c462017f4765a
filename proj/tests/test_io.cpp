#include <gpl/io.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace gpl::io {
namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("gpl_io_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a gpl::Error";
  return ErrorCode::InvalidArgument;
}

void write_raw(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string raw_pgm(std::size_t w, std::size_t h, unsigned char value) {
  return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + std::string(w * h, static_cast<char>(value));
}

// ---------------------------------------------------------------------------
// PGM

TEST_F(IoTest, SecondSliceAllWhiteReadsAsOnes) {
  write_raw(dir_ / "slice_0000.pgm", raw_pgm(4, 4, 0));
  write_raw(dir_ / "slice_0001.pgm", raw_pgm(4, 4, 255));
  const auto v = read_mask_stack(dir_);
  ASSERT_EQ(v.shape(), (Shape3{2, 4, 4}));
  for (auto e : v.slice(0)) EXPECT_EQ(e, 0);
  for (auto e : v.slice(1)) EXPECT_EQ(e, 1);
}

TEST_F(IoTest, MixedSlicesAreInconsistent) {
  write_raw(dir_ / "slice_0000.pgm", raw_pgm(4, 4, 0));
  write_raw(dir_ / "slice_0001.pgm", raw_pgm(8, 8, 0));
  EXPECT_EQ(code_of([&] { read_mask_stack(dir_); }), ErrorCode::InconsistentDimensions);
}

TEST_F(IoTest, HeaderCommentsAndNonzeroForeground) {
  write_raw(dir_ / "a.pgm", std::string("P5 # c\n3 1\n# another\n255\n") + std::string("\x00\x07\xff", 3));
  const auto m = read_pgm(dir_ / "a.pgm");
  EXPECT_EQ(m(0, 0), 0);
  EXPECT_EQ(m(1, 0), 1);
  EXPECT_EQ(m(2, 0), 1);
}

TEST_F(IoTest, MalformedPgm) {
  write_raw(dir_ / "p2.pgm", "P2\n2 2\n255\n0 0 0 0\n");
  EXPECT_EQ(code_of([&] { read_pgm(dir_ / "p2.pgm"); }), ErrorCode::UnreadableFile);
  write_raw(dir_ / "short.pgm", raw_pgm(4, 4, 0).substr(0, 20));
  EXPECT_EQ(code_of([&] { read_pgm(dir_ / "short.pgm"); }), ErrorCode::TruncatedFile);
  EXPECT_EQ(code_of([&] { read_pgm(dir_ / "missing.pgm"); }), ErrorCode::UnreadableFile);
  EXPECT_EQ(code_of([&] { read_mask_stack(dir_ / "nowhere"); }), ErrorCode::UnreadableFile);
}

TEST_F(IoTest, MaskStackRoundTrip) {
  std::mt19937_64 rng(1);
  const auto v = oracle::random_mask(rng, {5, 7, 9}, 0.4);
  write_mask_stack(v, dir_ / "stack");
  EXPECT_TRUE(fs::exists(dir_ / "stack" / "slice_0004.pgm"));
  EXPECT_EQ(read_mask_stack(dir_ / "stack"), v);
  const auto bytes = read_file(dir_ / "stack" / "slice_0000.pgm");
  for (std::size_t i = bytes.size() - 63; i < bytes.size(); ++i) EXPECT_TRUE(bytes[i] == 0 || bytes[i] == 255);
}

TEST_F(IoTest, MaskStackOverwriteLeavesNoStaleSlices) {
  std::mt19937_64 rng(2);
  write_mask_stack(oracle::random_mask(rng, {6, 4, 4}, 0.5), dir_ / "stack");
  const auto v = oracle::random_mask(rng, {2, 4, 4}, 0.5);
  write_mask_stack(v, dir_ / "stack");
  EXPECT_EQ(list_slices(dir_ / "stack").size(), 2u);
  EXPECT_EQ(read_mask_stack(dir_ / "stack"), v);
}

// ---------------------------------------------------------------------------
// F32V

TEST_F(IoTest, SingleVoxelLayout) {
  const Volume<double> v(Shape3{1, 1, 1}, 1.0);
  const auto bytes = encode_f32v(v);
  ASSERT_EQ(bytes.size(), 21u);
  EXPECT_EQ(bytes.substr(0, 5), std::string("F32V\x01", 5));
  EXPECT_EQ(bytes.substr(5, 12), std::string("\x01\0\0\0\x01\0\0\0\x01\0\0\0", 12));
  EXPECT_EQ(bytes.substr(17), std::string("\x00\x00\x80\x3f", 4));
}

TEST_F(IoTest, HeaderDimensionsAreDepthHeightWidth) {
  const auto bytes = encode_f32v(Volume<double>(Shape3{2, 3, 5}, 0.0));
  EXPECT_EQ(bytes[5], 2);
  EXPECT_EQ(bytes[9], 3);
  EXPECT_EQ(bytes[13], 5);
  EXPECT_EQ(bytes.size(), 17u + 4u * 30u);
}

TEST_F(IoTest, F32vErrors) {
  auto bytes = encode_f32v(Volume<double>(Shape3{1, 2, 2}, 0.5));
  auto bad = bytes;
  bad[0] = 'X';
  write_raw(dir_ / "magic.f32v", bad);
  EXPECT_EQ(code_of([&] { read_f32v(dir_ / "magic.f32v"); }), ErrorCode::BadMagic);
  write_raw(dir_ / "trunc.f32v", bytes.substr(0, bytes.size() - 1));
  EXPECT_EQ(code_of([&] { read_f32v(dir_ / "trunc.f32v"); }), ErrorCode::TruncatedFile);
  write_raw(dir_ / "header.f32v", bytes.substr(0, 10));
  EXPECT_EQ(code_of([&] { read_f32v(dir_ / "header.f32v"); }), ErrorCode::TruncatedFile);
  auto v2 = bytes;
  v2[4] = 2;
  write_raw(dir_ / "version.f32v", v2);
  EXPECT_EQ(code_of([&] { read_f32v(dir_ / "version.f32v"); }), ErrorCode::UnsupportedVersion);
  write_raw(dir_ / "trailing.f32v", bytes + "x");
  EXPECT_EQ(code_of([&] { read_f32v(dir_ / "trailing.f32v"); }), ErrorCode::TruncatedFile);
}

TEST_F(IoTest, F32vRoundTripIsBitIdentical) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1e6f, 1e6f);
  std::vector<double> data(4 * 6 * 5);
  for (double& d : data) d = u(rng);
  data[0] = 0.0;
  data[1] = -0.0;
  data[2] = std::numeric_limits<float>::denorm_min();
  const Volume<double> v(Shape3{4, 6, 5}, data);
  write_f32v(v, dir_ / "v.f32v");
  const auto back = read_f32v(dir_ / "v.f32v");
  ASSERT_EQ(back.shape(), v.shape());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[i]), std::bit_cast<std::uint64_t>(data[i]));
  }
  EXPECT_EQ(encode_f32v(back), encode_f32v(v));
}

// ---------------------------------------------------------------------------
// ellipse CSV

TEST_F(IoTest, ParsesRecordLine) {
  const auto csv = parse_ellipse_csv("slice,cx,cy,semi_major,semi_minor,theta_rad\n3,128.0,120.0,40.0,25.0,0.6\n");
  ASSERT_EQ(csv.records.size(), 1u);
  EXPECT_TRUE(csv.warnings.empty());
  EXPECT_EQ(csv.records[0].slice_index, 3u);
  EXPECT_EQ(csv.records[0].params, (EllipseParams{128.0, 120.0, 40.0, 25.0, 0.6}));
}

TEST_F(IoTest, SwappedAxesAreCanonicalizedWithWarning) {
  const auto csv = parse_ellipse_csv("slice,cx,cy,semi_major,semi_minor,theta_rad\n0,10,10,25,40,0.3\n");
  ASSERT_EQ(csv.records.size(), 1u);
  ASSERT_EQ(csv.warnings.size(), 1u);
  EXPECT_NE(csv.warnings[0].find("line 2"), std::string::npos);
  const auto& p = csv.records[0].params;
  EXPECT_EQ(p.w, 40.0);
  EXPECT_EQ(p.h, 25.0);
  EXPECT_NEAR(p.theta, 0.3 + kHalfPi - kPi, 1e-15);
}

TEST_F(IoTest, ParseErrorsCarryLineNumbers) {
  const std::string header = "slice,cx,cy,semi_major,semi_minor,theta_rad\n";
  const std::pair<std::string, std::string> cases[] = {
      {header + "0,1,2,3,2,0\n1,abc,2,3,2,0\n", "line 3"},
      {header + "0,1,2,3,2\n", "line 2"},
      {header + "0,1,2,-3,2,0\n", "line 2"},
      {"slice,x\n", "line 1"},
      {header + "\n2,1,2,3,2,0\n2,1,2,3,2,0\n", "slice 2"},
  };
  for (const auto& [text, where] : cases) {
    try {
      parse_ellipse_csv(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  }
}

TEST_F(IoTest, CsvRoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c(0.0, 256.0), ax(2.0, 60.0), th(-kHalfPi, kHalfPi);
  std::vector<EllipseRecord> records;
  for (std::size_t z = 0; z < 40; z += 3) {
    const double a = ax(rng), b = ax(rng);
    records.push_back({z, canonicalize_ellipse(c(rng), c(rng), std::max(a, b), std::min(a, b), th(rng))});
  }
  write_ellipse_csv(records, dir_ / "e.csv");
  const auto back = read_ellipse_csv(dir_ / "e.csv");
  EXPECT_TRUE(back.warnings.empty());
  ASSERT_EQ(back.records.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back.records[i].slice_index, records[i].slice_index);
    const auto& p = back.records[i].params;
    const auto& q = records[i].params;
    EXPECT_NEAR(p.cx, q.cx, 1e-9);
    EXPECT_NEAR(p.cy, q.cy, 1e-9);
    EXPECT_NEAR(p.w, q.w, 1e-9);
    EXPECT_NEAR(p.h, q.h, 1e-9);
    EXPECT_NEAR(p.theta, q.theta, 1e-9);
  }
}

TEST_F(IoTest, RecordsAreSortedBySlice) {
  const auto csv = parse_ellipse_csv("slice,cx,cy,semi_major,semi_minor,theta_rad\r\n5,1,1,3,2,0\r\n1,1,1,3,2,0\r\n");
  ASSERT_EQ(csv.records.size(), 2u);
  EXPECT_EQ(csv.records[0].slice_index, 1u);
  EXPECT_EQ(csv.records[1].slice_index, 5u);
}

TEST_F(IoTest, AtomicWriteLeavesNoTemporaries) {
  write_file_atomic(dir_ / "x.txt", "hello");
  write_file_atomic(dir_ / "x.txt", "world");
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    (void)e;
    ++n;
  }
  EXPECT_EQ(n, 1u);
  const auto bytes = read_file(dir_ / "x.txt");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "world");
  EXPECT_EQ(code_of([&] { write_file_atomic(dir_ / "no" / "such" / "x.txt", "a"); }), ErrorCode::WriteFailed);
}

}  // namespace
}  // namespace gpl::io
