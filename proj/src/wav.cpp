#include "beamlab/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace beamlab {

namespace {

uint32_t rd_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
uint16_t rd_u16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

void put_u32(std::string& s, uint32_t v) { s.append(reinterpret_cast<char*>(&v), 4); }
void put_u16(std::string& s, uint16_t v) { s.append(reinterpret_cast<char*>(&v), 2); }

}  // namespace

TimeTrackSet read_wav(const std::string& path, double expected_rate,
                      bool allow_resample) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  uint16_t fmt_tag = 0, n_ch = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const uint32_t len = rd_u32(bytes.data() + pos + 4);
    if (id == "fmt ") {
      fmt_tag = rd_u16(bytes.data() + pos + 8);
      n_ch = rd_u16(bytes.data() + pos + 10);
      rate = rd_u32(bytes.data() + pos + 12);
      bits = rd_u16(bytes.data() + pos + 22);
    } else if (id == "data") {
      data_off = pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (n_ch == 0 || data_off == 0)
    throw std::runtime_error("missing fmt/data chunk: " + path);
  if (!((fmt_tag == 1 && bits == 16) || (fmt_tag == 3 && bits == 32)))
    throw std::runtime_error("unsupported wav format (need int16 or float32): " + path);

  const size_t bytes_per = bits / 8;
  const size_t n_frames = data_len / (bytes_per * n_ch);
  TimeTrackSet out;
  out.sample_rate = rate;
  out.channels.assign(n_ch, std::vector<float>(n_frames));
  const char* d = bytes.data() + data_off;
  for (size_t i = 0; i < n_frames; ++i) {
    for (int c = 0; c < n_ch; ++c) {
      if (fmt_tag == 1) {
        int16_t s;
        std::memcpy(&s, d + (i * n_ch + c) * 2, 2);
        out.channels[c][i] = s / 32768.0f;
      } else {
        float s;
        std::memcpy(&s, d + (i * n_ch + c) * 4, 4);
        out.channels[c][i] = s;
      }
    }
  }

  if (rate != expected_rate) {
    if (!allow_resample)
      throw std::runtime_error("sample rate " + std::to_string(rate) +
                               " != expected (pass resample flag to convert): " + path);
    for (auto& ch : out.channels) ch = resample(ch, rate, expected_rate);
    out.sample_rate = expected_rate;
  }
  return out;
}

void write_wav(const std::string& path, const TimeTrackSet& tracks,
               bool as_float) {
  tracks.validate();
  const int n_ch = tracks.n_channels();
  const size_t n = tracks.length();
  const uint16_t bits = as_float ? 32 : 16;
  const uint32_t rate = static_cast<uint32_t>(tracks.sample_rate);
  const uint32_t data_len = static_cast<uint32_t>(n * n_ch * (bits / 8));

  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, as_float ? 3 : 1);
  put_u16(s, static_cast<uint16_t>(n_ch));
  put_u32(s, rate);
  put_u32(s, rate * n_ch * (bits / 8));
  put_u16(s, static_cast<uint16_t>(n_ch * (bits / 8)));
  put_u16(s, bits);
  s += "data";
  put_u32(s, data_len);
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < n_ch; ++c) {
      if (as_float) {
        float v = tracks.channels[c][i];
        s.append(reinterpret_cast<char*>(&v), 4);
      } else {
        const float x = std::clamp(tracks.channels[c][i], -1.0f, 1.0f);
        int16_t v = static_cast<int16_t>(std::lrint(x * 32767.0f));
        s.append(reinterpret_cast<char*>(&v), 2);
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write wav file: " + path);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::vector<float> resample(const std::vector<float>& in, double from_rate,
                            double to_rate) {
  if (from_rate == to_rate) return in;
  const double ratio = from_rate / to_rate;
  const size_t out_len = static_cast<size_t>(in.size() / ratio);
  const int half_taps = 16;
  const double cutoff = 0.45 * std::min(1.0, 1.0 / ratio);
  std::vector<float> out(out_len);
  for (size_t n = 0; n < out_len; ++n) {
    const double t = n * ratio;
    const int k0 = static_cast<int>(std::floor(t)) - half_taps + 1;
    double acc = 0.0;
    for (int k = k0; k < k0 + 2 * half_taps; ++k) {
      if (k < 0 || k >= static_cast<int>(in.size())) continue;
      const double x = t - k;
      const double sinc = (x == 0.0) ? 2.0 * cutoff
                                     : std::sin(2.0 * std::numbers::pi * cutoff * x) /
                                           (std::numbers::pi * x);
      // Hann taper over the kernel support
      const double wpos = (x + half_taps) / (2.0 * half_taps);
      const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * wpos));
      acc += in[k] * sinc * w;
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace beamlab
