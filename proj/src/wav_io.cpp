#include "fdnreverb/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

[[noreturn]] void bad_format(const std::string& path, const std::string& why) {
  throw_error(ErrorKind::config, path + ": " + why);
}

}  // namespace

SampledRir read_wav_mono(const std::string& path, bool require_nonzero) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorKind::io, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (f.bad()) throw_error(ErrorKind::io, "read failure on " + path);
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    bad_format(path, "not a RIFF/WAVE file");

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_len = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size())
      bad_format(path, "truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) bad_format(path, "fmt chunk too short");
      const unsigned char* p = bytes.data() + body;
      format = read_u16(p);
      channels = read_u16(p + 2);
      rate = read_u32(p + 4);
      bits = read_u16(p + 14);
      if (format == kFormatExtensible) {
        if (chunk_len < 40) bad_format(path, "extensible fmt chunk too short");
        format = read_u16(p + 24);  // first two bytes of the SubFormat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) bad_format(path, "missing fmt or data chunk");
  if (channels != 1)
    throw_error(ErrorKind::config,
                path + ": has " + std::to_string(channels) +
                    " channels; pre-mix to mono first");
  if (rate == 0) bad_format(path, "zero sample rate");

  SampledRir rir;
  rir.sample_rate_hz = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    rir.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
      rir.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    rir.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t u = read_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      rir.samples[i] = static_cast<double>(v);
    }
  } else {
    bad_format(path, "unsupported format (need 16-bit PCM or 32-bit float), "
                     "got format " +
                         std::to_string(format) + " at " +
                         std::to_string(bits) + " bits");
  }

  validate(rir);
  if (require_nonzero) {
    bool nonzero = false;
    for (double s : rir.samples) nonzero = nonzero || s != 0.0;
    if (!nonzero)
      throw_error(ErrorKind::degenerate_input, path + ": zero-energy input");
  }
  return rir;
}

void write_wav_float32(const std::string& path, const SampledRir& rir) {
  validate(rir);
  const auto n = static_cast<std::uint32_t>(rir.samples.size());
  const std::uint32_t data_bytes = n * 4;

  std::vector<unsigned char> out;
  out.reserve(58 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 18);
  put_u16(out, kFormatFloat);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(rir.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(rir.sample_rate_hz) * 4);
  put_u16(out, 4);   // block align
  put_u16(out, 32);  // bits per sample
  put_u16(out, 0);   // extension size
  put_tag(out, "fact");
  put_u32(out, 4);
  put_u32(out, n);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : rir.samples) {
    const float v = static_cast<float>(s);
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(out, u);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw_error(ErrorKind::io, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw_error(ErrorKind::io, "write failure on " + path);
}

}  // namespace fdnreverb
