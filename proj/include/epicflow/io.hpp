#pragma once

// File formats: Middlebury .flo, ASCII match lists, binary PGM/PPM and
// grey PFM. Readers throw FormatError on malformed input.

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "epicflow/image.hpp"

namespace epic {

inline constexpr float kFloMagic = 202021.25f;
/// Value written for unknown flow entries; anything above kFloUnknownThreshold reads as unknown.
inline constexpr float kFloUnknownValue = 1e10f;
inline constexpr double kFloUnknownThreshold = 1e9;

struct FlowFile {
  FlowField flow;  // unknown entries are stored as (0,0)
  Mask unknown;    // nonzero where the file holds the unknown-flow marker
};

FlowFile read_flo(std::istream& in);
FlowFile read_flo(const std::filesystem::path& path);
/// Writes `flow`; pixels flagged in `unknown` are written as kFloUnknownValue.
void write_flo(std::ostream& out, const FlowField& flow, const Mask* unknown = nullptr);
void write_flo(const std::filesystem::path& path, const FlowField& flow, const Mask* unknown = nullptr);

struct MatchFile {
  MatchSet matches;
  std::size_t rejected = 0;  // sources outside image 1
};

/// Parses `x1 y1 x2 y2 [ignored...]` lines; '#' starts a comment. Coordinates are
/// multiplied by `scale`, then matches whose source pixel is outside
/// width x height are dropped and counted.
MatchFile read_matches(std::istream& in, int width, int height, double scale = 1.0);
MatchFile read_matches(const std::filesystem::path& path, int width, int height, double scale = 1.0);
void write_matches(std::ostream& out, const MatchSet& matches);
void write_matches(const std::filesystem::path& path, const MatchSet& matches);

/// Binary P5 (grey) or P6 (RGB), 8 or 16 bit, normalised by maxval.
Image read_image(std::istream& in);
Image read_image(const std::filesystem::path& path);
/// Writes P5 for 1-channel, P6 for 3-channel images; maxval 255 or 65535.
void write_image(std::ostream& out, const Image& image, int maxval = 255);
void write_image(const std::filesystem::path& path, const Image& image, int maxval = 255);

struct CostMapFile {
  CostMap map;
  std::size_t clamped = 0;  // negative entries raised to 0 (PFM only)
};

/// P5 (maxval-normalised) or Pf grey float map.
CostMapFile read_cost_map(std::istream& in);
CostMapFile read_cost_map(const std::filesystem::path& path);
void write_pfm(std::ostream& out, const Grid<double>& values);
void write_pfm(const std::filesystem::path& path, const Grid<double>& values);

/// P5 mask, nonzero = set.
Mask read_mask(std::istream& in);
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

/// 16-bit P5 of integer labels, clamped to [0, 65535].
void write_label_pgm(const std::filesystem::path& path, const Grid<int>& labels);

}  // namespace epic
