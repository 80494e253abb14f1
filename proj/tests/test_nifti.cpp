#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "armarecon/common.hpp"
#include "armarecon/nifti.hpp"
#include "support/nifti_testing.hpp"

using namespace armarecon;
using nifti_testing::WriteOptions;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("float32 volume with slope 0 loads unscaled") {
  const std::array<int, 3> dims{2, 2, 2};
  const std::vector<double> voxels{0.0, 0.25, 0.5, 0.75, 1.0, 0.125, 0.375, 0.625};
  auto bytes = nifti_testing::make_nifti_bytes(dims, voxels, {});
  Volume vol = parse_nifti(bytes, "mem");
  CHECK(vol.dims == dims);
  CHECK(vol.datatype_code == nifti::kFloat32);
  CHECK(vol.scale_slope == 1.0);
  REQUIRE(vol.voxels.size() == 8);
  for (std::size_t i = 0; i < voxels.size(); ++i) CHECK(vol.voxels[i] == voxels[i]);
}

TEST_CASE("float round trips are bit-exact") {
  const std::array<int, 3> dims{3, 2, 1};
  // Values chosen to be exactly representable in float32.
  const std::vector<double> voxels{0.5, -0.25, 1024.0, 0.0078125, -3.5, 0.0};

  WriteOptions f32;
  f32.datatype = nifti::kFloat32;
  Volume v32 = parse_nifti(nifti_testing::make_nifti_bytes(dims, voxels, f32), "f32");
  for (std::size_t i = 0; i < voxels.size(); ++i) CHECK(v32.voxels[i] == voxels[i]);

  WriteOptions f64;
  f64.datatype = nifti::kFloat64;
  const std::vector<double> irregular{0.1, -0.30000000000000004, 1e-17, 3.141592653589793, 2.0, -0.0};
  Volume v64 = parse_nifti(nifti_testing::make_nifti_bytes(dims, irregular, f64), "f64");
  for (std::size_t i = 0; i < irregular.size(); ++i) CHECK(v64.voxels[i] == irregular[i]);
}

TEST_CASE("int16 scaling: voxel 500 at slope 0.001 loads as 0.5") {
  WriteOptions opt;
  opt.datatype = nifti::kInt16;
  opt.scl_slope = 0.001f;
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 2}, {500.0, -250.0}, opt);
  Volume vol = parse_nifti(bytes, "mem");
  // The on-disk slope is a float32, so agreement is to single precision.
  CHECK(vol.voxels[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(vol.voxels[1] == doctest::Approx(-0.25).epsilon(1e-6));
}

TEST_CASE("uint8 and int32 datatypes decode with intercept applied") {
  WriteOptions u8;
  u8.datatype = nifti::kUint8;
  u8.scl_inter = 1.5f;
  Volume a = parse_nifti(nifti_testing::make_nifti_bytes({2, 1, 1}, {0.0, 255.0}, u8), "u8");
  CHECK(a.voxels[0] == 1.5);
  CHECK(a.voxels[1] == 256.5);

  WriteOptions i32;
  i32.datatype = nifti::kInt32;
  Volume b = parse_nifti(nifti_testing::make_nifti_bytes({2, 1, 1}, {-70000.0, 70000.0}, i32), "i32");
  CHECK(b.voxels[0] == -70000.0);
  CHECK(b.voxels[1] == 70000.0);
}

TEST_CASE("big-endian files are detected and swapped") {
  WriteOptions opt;
  opt.big_endian = true;
  opt.datatype = nifti::kFloat32;
  opt.scl_slope = 2.0f;
  auto bytes = nifti_testing::make_nifti_bytes({2, 2, 1}, {0.5, 0.25, -1.0, 0.0}, opt);
  Volume vol = parse_nifti(bytes, "be");
  CHECK(vol.dims == std::array<int, 3>{2, 2, 1});
  CHECK(vol.voxels[0] == 1.0);
  CHECK(vol.voxels[1] == 0.5);
  CHECK(vol.voxels[2] == -2.0);
}

TEST_CASE("4-D volumes with singleton trailing dims are accepted") {
  WriteOptions opt;
  opt.ndim = 4;
  auto bytes = nifti_testing::make_nifti_bytes({2, 2, 2}, std::vector<double>(8, 0.5), opt);
  Volume vol = parse_nifti(bytes, "mem");
  CHECK(vol.size() == 8);
}

TEST_CASE("vox_offset beyond 352 is honored") {
  WriteOptions opt;
  opt.vox_offset = 416.0f;
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 2}, {0.25, 0.75}, opt);
  Volume vol = parse_nifti(bytes, "mem");
  CHECK(vol.voxels[0] == 0.25);
  CHECK(vol.voxels[1] == 0.75);
}

TEST_CASE("detached-header magic ni1 is rejected") {
  WriteOptions opt;
  opt.magic = std::string("ni1\0", 4);
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 1}, {0.0}, opt);
  CHECK_THROWS_WITH_AS(parse_nifti(bytes, "mem"), doctest::Contains("detached header"), DataError);
}

TEST_CASE("unknown magic is rejected") {
  WriteOptions opt;
  opt.magic = std::string("oops", 4);
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 1}, {0.0}, opt);
  CHECK_THROWS_WITH_AS(parse_nifti(bytes, "mem"), doctest::Contains("magic"), DataError);
}

TEST_CASE("unsupported datatype code is a distinct error") {
  WriteOptions opt;
  opt.datatype = 128;  // RGB, unsupported here
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 1}, {0.0}, opt);
  CHECK_THROWS_WITH_AS(parse_nifti(bytes, "mem"), doctest::Contains("unsupported NIfTI datatype"),
                       DataError);
}

TEST_CASE("truncated data section is a distinct error") {
  auto bytes = nifti_testing::make_nifti_bytes({2, 2, 2}, std::vector<double>(8, 0.5), {});
  bytes.resize(bytes.size() - 5);
  CHECK_THROWS_WITH_AS(parse_nifti(bytes, "mem"), doctest::Contains("truncated NIfTI data"), DataError);
}

TEST_CASE("truncated header and non-NIfTI files are rejected") {
  std::vector<std::uint8_t> tiny(100, 0);
  CHECK_THROWS_WITH_AS(parse_nifti(tiny, "mem"), doctest::Contains("truncated NIfTI-1 header"), DataError);

  std::vector<std::uint8_t> junk(400, 7);
  CHECK_THROWS_WITH_AS(parse_nifti(junk, "mem"), doctest::Contains("not a NIfTI-1 file"), DataError);
}

TEST_CASE("NaN after scaling is rejected at load") {
  WriteOptions opt;
  auto bytes = nifti_testing::make_nifti_bytes({1, 1, 2}, {0.5, std::nan("")}, opt);
  CHECK_THROWS_WITH_AS(parse_nifti(bytes, "mem"), doctest::Contains("non-finite voxel"), DataError);
}

TEST_CASE("nonexistent path names the file") {
  CHECK_THROWS_WITH_AS(load_nifti("/nonexistent/vol.nii"), doctest::Contains("/nonexistent/vol.nii"),
                       DataError);
}

TEST_CASE("load_nifti reads from disk") {
  const std::string path = temp_path("armarecon_test_vol.nii");
  nifti_testing::write_nifti_file(path, {2, 1, 1}, {0.125, 0.875}, {});
  Volume vol = load_nifti(path);
  CHECK(vol.voxels[0] == 0.125);
  CHECK(vol.voxels[1] == 0.875);
  std::remove(path.c_str());
}
