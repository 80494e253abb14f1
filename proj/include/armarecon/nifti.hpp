#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace armarecon {

/// A scalar 3-D volume decoded from a single-file NIfTI-1 image.
/// Voxels are stored in on-disk order (first axis fastest: index = x + nx*(y + ny*z)),
/// already converted to double and intensity-scaled by v*slope + inter.
struct Volume {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> voxels;
  int datatype_code = 0;    // on-disk NIfTI datatype code
  double scale_slope = 1.0; // effective slope (scl_slope==0 is read as 1)
  double scale_inter = 0.0;

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
};

namespace nifti {

// Supported on-disk datatype codes.
inline constexpr int kUint8 = 2;
inline constexpr int kInt16 = 4;
inline constexpr int kInt32 = 8;
inline constexpr int kFloat32 = 16;
inline constexpr int kFloat64 = 64;

}  // namespace nifti

/// Parses a single-file NIfTI-1 volume (348-byte header, magic "n+1").
///
/// Little- and big-endian files are both accepted; endianness is detected from the
/// sizeof_hdr field. Datatype codes 2/4/8/16/64 are decoded; anything else, a detached
/// header ("ni1"), a truncated data section, or a non-finite voxel after scaling is a
/// DataError with a message naming the problem.
Volume load_nifti(const std::string& path);

/// Parses a NIfTI-1 volume from an in-memory byte buffer (same contract as load_nifti).
Volume parse_nifti(const std::vector<std::uint8_t>& bytes, const std::string& origin);

}  // namespace armarecon
