#include "epicflow/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "epicflow/error.hpp"

namespace epic {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::uint32_t load_le32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void store_le32(unsigned char* b, std::uint32_t v) {
  b[0] = static_cast<unsigned char>(v);
  b[1] = static_cast<unsigned char>(v >> 8);
  b[2] = static_cast<unsigned char>(v >> 16);
  b[3] = static_cast<unsigned char>(v >> 24);
}

bool read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

// ---- netpbm headers ----

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;  // maxval for P5/P6, scale factor for Pf
};

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

std::string next_token(std::istream& in) {
  skip_space_and_comments(in);
  std::string tok;
  while (in.peek() != EOF) {
    int c = in.peek();
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') break;
    tok.push_back(static_cast<char>(in.get()));
  }
  if (tok.empty()) throw FormatError("truncated header");
  return tok;
}

PnmHeader read_pnm_header(std::istream& in) {
  PnmHeader h;
  char m[2];
  in.read(m, 2);
  if (in.gcount() != 2) throw FormatError("truncated header");
  h.magic.assign(m, 2);
  if (h.magic != "P5" && h.magic != "P6" && h.magic != "Pf") throw FormatError("unsupported format '" + h.magic + "'");
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.scale = std::stod(next_token(in));
  } catch (const std::logic_error&) {
    throw FormatError("malformed header");
  }
  if (h.width <= 0 || h.height <= 0) throw FormatError("non-positive dimensions");
  // exactly one whitespace byte separates the header from the raster
  in.get();
  if (h.magic != "Pf" && (h.scale < 1 || h.scale > 65535 || h.scale != std::floor(h.scale)))
    throw FormatError("invalid maxval");
  if (h.magic == "Pf" && (h.scale == 0.0 || !std::isfinite(h.scale))) throw FormatError("invalid pfm scale");
  return h;
}

// Reads w*h*channels samples normalised by maxval.
std::vector<double> read_pnm_samples(std::istream& in, const PnmHeader& h, int channels) {
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) *
                        static_cast<std::size_t>(channels);
  const int maxval = static_cast<int>(h.scale);
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes_per);
  if (!read_exact(in, raw.data(), raw.size())) throw FormatError("truncated body");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = bytes_per == 2 ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    if (static_cast<int>(v) > maxval) throw FormatError("sample exceeds maxval");
    out[i] = static_cast<double>(v) / maxval;
  }
  return out;
}

std::vector<double> read_pfm_samples(std::istream& in, const PnmHeader& h) {
  const std::size_t w = static_cast<std::size_t>(h.width), ht = static_cast<std::size_t>(h.height);
  std::vector<unsigned char> raw(w * ht * 4);
  if (!read_exact(in, raw.data(), raw.size())) throw FormatError("truncated body");
  const bool little = h.scale < 0;
  std::vector<double> out(w * ht);
  for (std::size_t row = 0; row < ht; ++row) {
    // rows are stored bottom to top
    const std::size_t dst_row = ht - 1 - row;
    for (std::size_t x = 0; x < w; ++x) {
      const unsigned char* b = &raw[(row * w + x) * 4];
      std::uint32_t bits = little ? load_le32(b)
                                  : (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
                                        (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
      out[dst_row * w + x] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return out;
}

void write_pnm_samples(std::ostream& out, std::span<const double> values, int maxval) {
  std::vector<unsigned char> raw;
  raw.reserve(values.size() * (maxval > 255 ? 2 : 1));
  for (double v : values) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (maxval > 255) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void check_maxval(int maxval) {
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("maxval must be in [1, 65535]");
}

}  // namespace

// ---- .flo ----

FlowFile read_flo(std::istream& in) {
  unsigned char header[12];
  if (!read_exact(in, header, sizeof header)) throw FormatError("truncated header");
  if (std::bit_cast<float>(load_le32(header)) != kFloMagic) throw FormatError("bad magic");
  const auto width = static_cast<std::int32_t>(load_le32(header + 4));
  const auto height = static_cast<std::int32_t>(load_le32(header + 8));
  if (width <= 0 || height <= 0) throw FormatError("non-positive dimensions");

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> body(n * 8);
  if (!read_exact(in, body.data(), body.size())) throw FormatError("truncated body");

  FlowFile f{FlowField(width, height), Mask(width, height)};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::bit_cast<float>(load_le32(&body[8 * i]));
    const double v = std::bit_cast<float>(load_le32(&body[8 * i + 4]));
    const bool known = std::abs(u) <= kFloUnknownThreshold && std::abs(v) <= kFloUnknownThreshold;
    if (known) {
      f.flow[i] = {u, v};
    } else {
      f.unknown[i] = 1;
    }
  }
  return f;
}

FlowFile read_flo(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_flo(in);
}

void write_flo(std::ostream& out, const FlowField& flow, const Mask* unknown) {
  if (flow.width() <= 0 || flow.height() <= 0) throw std::invalid_argument("non-positive dimensions");
  if (unknown && !unknown->same_shape(flow)) throw std::invalid_argument("unknown-flow mask shape mismatch");
  std::vector<unsigned char> buf(12 + flow.size() * 8);
  store_le32(&buf[0], std::bit_cast<std::uint32_t>(kFloMagic));
  store_le32(&buf[4], static_cast<std::uint32_t>(flow.width()));
  store_le32(&buf[8], static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    float u = static_cast<float>(flow[i].x);
    float v = static_cast<float>(flow[i].y);
    if (unknown && (*unknown)[i]) u = v = kFloUnknownValue;
    store_le32(&buf[12 + 8 * i], std::bit_cast<std::uint32_t>(u));
    store_le32(&buf[16 + 8 * i], std::bit_cast<std::uint32_t>(v));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_flo(const std::filesystem::path& path, const FlowField& flow, const Mask* unknown) {
  if (flow.width() <= 0 || flow.height() <= 0) throw std::invalid_argument("non-positive dimensions");
  auto out = open_out(path);
  write_flo(out, flow, unknown);
  finish(out, path);
}

// ---- matches ----

MatchFile read_matches(std::istream& in, int width, int height, double scale) {
  MatchFile result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::array<double, 4> v{};
    std::size_t count = 0;
    std::string tok;
    while (count < 4 && tokens >> tok) {
      const char* end = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(tok.data(), end, v[count]);
      if (ec != std::errc() || ptr != end || !std::isfinite(v[count]))
        throw FormatError("malformed line " + std::to_string(line_no));
      ++count;
    }
    if (count == 0) continue;
    if (count < 4) throw FormatError("malformed line " + std::to_string(line_no));

    Match m{{v[0] * scale, v[1] * scale}, {v[2] * scale, v[3] * scale}};
    const Pixel p = nearest_pixel(m.source);
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
      ++result.rejected;
      continue;
    }
    result.matches.push_back(m);
  }
  return result;
}

MatchFile read_matches(const std::filesystem::path& path, int width, int height, double scale) {
  auto in = open_in(path);
  return read_matches(in, width, height, scale);
}

void write_matches(std::ostream& out, const MatchSet& matches) {
  char buf[32];
  auto put = [&](double v, char sep) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
    out.put(sep);
  };
  for (const auto& m : matches) {
    put(m.source.x, ' ');
    put(m.source.y, ' ');
    put(m.target.x, ' ');
    put(m.target.y, '\n');
  }
}

void write_matches(const std::filesystem::path& path, const MatchSet& matches) {
  auto out = open_out(path);
  write_matches(out, matches);
  finish(out, path);
}

// ---- images ----

Image read_image(std::istream& in) {
  const PnmHeader h = read_pnm_header(in);
  if (h.magic == "Pf") throw FormatError("unsupported format 'Pf' for images");
  const int channels = h.magic == "P6" ? 3 : 1;
  const auto samples = read_pnm_samples(in, h, channels);
  Image img(h.width, h.height, channels);
  std::copy(samples.begin(), samples.end(), img.values().begin());
  return img;
}

Image read_image(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_image(in);
}

void write_image(std::ostream& out, const Image& image, int maxval) {
  check_maxval(maxval);
  if (image.width() <= 0 || image.height() <= 0) throw std::invalid_argument("non-positive dimensions");
  out << (image.channels() == 3 ? "P6" : "P5") << '\n' << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
  write_pnm_samples(out, image.values(), maxval);
}

void write_image(const std::filesystem::path& path, const Image& image, int maxval) {
  check_maxval(maxval);
  auto out = open_out(path);
  write_image(out, image, maxval);
  finish(out, path);
}

CostMapFile read_cost_map(std::istream& in) {
  const PnmHeader h = read_pnm_header(in);
  if (h.magic == "P6") throw FormatError("unsupported format 'P6' for cost maps");
  CostMapFile f{CostMap(h.width, h.height), 0};
  const auto samples = h.magic == "Pf" ? read_pfm_samples(in, h) : read_pnm_samples(in, h, 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = samples[i];
    if (!std::isfinite(v)) throw FormatError("non-finite cost value");
    if (v < 0.0) {
      v = 0.0;
      ++f.clamped;
    }
    f.map[i] = v;
  }
  return f;
}

CostMapFile read_cost_map(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_cost_map(in);
}

void write_pfm(std::ostream& out, const Grid<double>& values) {
  if (values.width() <= 0 || values.height() <= 0) throw std::invalid_argument("non-positive dimensions");
  out << "Pf\n" << values.width() << ' ' << values.height() << "\n-1\n";
  const std::size_t w = static_cast<std::size_t>(values.width());
  std::vector<unsigned char> row(w * 4);
  for (int y = values.height() - 1; y >= 0; --y) {
    for (std::size_t x = 0; x < w; ++x)
      store_le32(&row[4 * x], std::bit_cast<std::uint32_t>(static_cast<float>(values(static_cast<int>(x), y))));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

void write_pfm(const std::filesystem::path& path, const Grid<double>& values) {
  auto out = open_out(path);
  write_pfm(out, values);
  finish(out, path);
}

Mask read_mask(std::istream& in) {
  const PnmHeader h = read_pnm_header(in);
  if (h.magic != "P5") throw FormatError("unsupported format '" + h.magic + "' for masks");
  const auto samples = read_pnm_samples(in, h, 1);
  Mask m(h.width, h.height);
  for (std::size_t i = 0; i < samples.size(); ++i) m[i] = samples[i] != 0.0;
  return m;
}

Mask read_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mask(in);
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  Image img(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.values()[i] = mask[i] ? 1.0 : 0.0;
  write_image(path, img, 255);
}

void write_label_pgm(const std::filesystem::path& path, const Grid<int>& labels) {
  if (labels.width() <= 0 || labels.height() <= 0) throw std::invalid_argument("non-positive dimensions");
  auto out = open_out(path);
  out << "P5\n" << labels.width() << ' ' << labels.height() << "\n65535\n";
  std::vector<unsigned char> raw;
  raw.reserve(labels.size() * 2);
  for (int v : labels.values()) {
    const auto q = static_cast<unsigned>(std::clamp(v, 0, 65535));
    raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  finish(out, path);
}

}  // namespace epic
