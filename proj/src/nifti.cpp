#include "armarecon/nifti.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "armarecon/common.hpp"

namespace armarecon {

namespace {

constexpr std::size_t kHeaderSize = 348;

// Header field offsets (NIfTI-1 standard layout).
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffMagic = 344;

struct FieldReader {
  const std::uint8_t* data;
  bool swap;

  std::uint16_t u16(std::size_t off) const {
    std::uint8_t b0 = data[off], b1 = data[off + 1];
    if (swap) std::swap(b0, b1);
    return static_cast<std::uint16_t>(b0 | (b1 << 8));
  }
  std::int16_t i16(std::size_t off) const { return static_cast<std::int16_t>(u16(off)); }

  std::uint32_t u32(std::size_t off) const {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data[off + (swap ? 3 - i : i)];
    return v;
  }
  std::int32_t i32(std::size_t off) const { return static_cast<std::int32_t>(u32(off)); }

  float f32(std::size_t off) const {
    std::uint32_t bits = u32(off);
    float out;
    std::memcpy(&out, &bits, sizeof(out));
    return out;
  }

  double f64(std::size_t off) const {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data[off + (swap ? 7 - i : i)];
    double out;
    std::memcpy(&out, &v, sizeof(out));
    return out;
  }
};

int expected_bitpix(int datatype) {
  switch (datatype) {
    case nifti::kUint8: return 8;
    case nifti::kInt16: return 16;
    case nifti::kInt32: return 32;
    case nifti::kFloat32: return 32;
    case nifti::kFloat64: return 64;
    default: return 0;
  }
}

}  // namespace

Volume parse_nifti(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < kHeaderSize) {
    throw DataError("truncated NIfTI-1 header in '" + origin + "': " +
                    std::to_string(bytes.size()) + " bytes, need 348");
  }

  FieldReader native{bytes.data(), false};
  bool swap = false;
  if (native.i32(kOffSizeofHdr) != 348) {
    FieldReader swapped{bytes.data(), true};
    if (swapped.i32(kOffSizeofHdr) != 348) {
      throw DataError("'" + origin + "' is not a NIfTI-1 file (sizeof_hdr != 348 in either byte order)");
    }
    swap = true;
  }
  FieldReader hdr{bytes.data(), swap};

  const char* magic = reinterpret_cast<const char*>(bytes.data() + kOffMagic);
  if (std::strncmp(magic, "ni1", 3) == 0 && magic[3] == '\0') {
    throw DataError("'" + origin + "' uses a detached header (magic \"ni1\"); only single-file \"n+1\" images are supported");
  }
  if (std::strncmp(magic, "n+1", 3) != 0 || magic[3] != '\0') {
    throw DataError("'" + origin + "' has an unrecognized NIfTI magic string");
  }

  // Dimensions: require a 3-D volume; trailing singleton dims are tolerated.
  const int ndim = hdr.i16(kOffDim);
  if (ndim < 3 || ndim > 7) {
    throw DataError("'" + origin + "' is not a 3-D volume (dim[0]=" + std::to_string(ndim) + ")");
  }
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    int d = hdr.i16(kOffDim + 2 * (a + 1));
    if (d <= 0) {
      throw DataError("'" + origin + "' has non-positive dim[" + std::to_string(a + 1) + "]=" + std::to_string(d));
    }
    dims[a] = d;
  }
  for (int a = 4; a <= ndim; ++a) {
    int d = hdr.i16(kOffDim + 2 * a);
    if (d > 1) {
      throw DataError("'" + origin + "' is " + std::to_string(ndim) + "-D with dim[" + std::to_string(a) +
                      "]=" + std::to_string(d) + "; only 3-D volumes are supported");
    }
  }

  const int datatype = hdr.i16(kOffDatatype);
  const int want_bitpix = expected_bitpix(datatype);
  if (want_bitpix == 0) {
    throw DataError("'" + origin + "' has unsupported NIfTI datatype code " + std::to_string(datatype) +
                    " (supported: 2, 4, 8, 16, 64)");
  }
  const int bitpix = hdr.i16(kOffBitpix);
  if (bitpix != want_bitpix) {
    throw DataError("'" + origin + "' has bitpix " + std::to_string(bitpix) + " inconsistent with datatype code " +
                    std::to_string(datatype) + " (expected " + std::to_string(want_bitpix) + ")");
  }

  const float vox_offset_f = hdr.f32(kOffVoxOffset);
  if (!(vox_offset_f >= 348.0f)) {
    std::ostringstream msg;
    msg << "'" << origin << "' has invalid vox_offset " << vox_offset_f << " for a single-file image";
    throw DataError(msg.str());
  }
  const std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);

  const float scl_slope = hdr.f32(kOffSclSlope);
  const float scl_inter = hdr.f32(kOffSclInter);

  Volume vol;
  vol.dims = dims;
  vol.datatype_code = datatype;
  vol.scale_slope = (scl_slope == 0.0f) ? 1.0 : static_cast<double>(scl_slope);
  vol.scale_inter = static_cast<double>(scl_inter);

  const std::size_t count = vol.size();
  const std::size_t bytes_per_voxel = static_cast<std::size_t>(want_bitpix) / 8;
  const std::size_t need = vox_offset + count * bytes_per_voxel;
  if (bytes.size() < need) {
    throw DataError("truncated NIfTI data section in '" + origin + "': need " + std::to_string(need) +
                    " bytes, have " + std::to_string(bytes.size()));
  }

  FieldReader data{bytes.data(), swap};
  vol.voxels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = vox_offset + i * bytes_per_voxel;
    double raw;
    switch (datatype) {
      case nifti::kUint8: raw = static_cast<double>(bytes[off]); break;
      case nifti::kInt16: raw = static_cast<double>(data.i16(off)); break;
      case nifti::kInt32: raw = static_cast<double>(data.i32(off)); break;
      case nifti::kFloat32: raw = static_cast<double>(data.f32(off)); break;
      default: raw = data.f64(off); break;
    }
    const double scaled = raw * vol.scale_slope + vol.scale_inter;
    if (!std::isfinite(scaled)) {
      throw DataError("non-finite voxel value at index " + std::to_string(i) + " in '" + origin + "' after scaling");
    }
    vol.voxels[i] = scaled;
  }
  return vol;
}

Volume load_nifti(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open NIfTI file '" + path + "'");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw DataError("I/O error while reading '" + path + "'");
  }
  return parse_nifti(bytes, path);
}

}  // namespace armarecon
