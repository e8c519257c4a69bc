#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowscale/grid.hpp"

namespace flowscale {

inline constexpr const char* kToolVersion = "flowscale 0.1.0";

// Raw dump: 16-byte header (magic "FSGD", channels, height, width as uint32 LE)
// followed by float32 LE samples in storage order.
void write_grid(const Grid& g, const std::string& path);
Grid read_grid(const std::string& path);

// 8-bit PNG; 1 channel -> grayscale, 3 -> RGB. Values are windowed to [lo, hi]
// and clipped, never wrapped.
void write_png(const Grid& g, const std::string& path, double lo = -3.0, double hi = 3.0);
// Inverse of the window map (returns bucket centers of the 8-bit quantization).
Grid read_png(const std::string& path, double lo = -3.0, double hi = 3.0);

// FNV-1a 64-bit over the spec text; recorded in CSV provenance lines.
std::uint64_t spec_hash(const std::string& text);

// Deterministic CSV: provenance comment line, header row, then data rows.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header, std::uint64_t spec_hash);
    ~CsvWriter();

    void raw_line(const std::string& line);
    void row(const std::vector<std::string>& cells);

    static std::string num(double v);   // shortest round-trip decimal
    static std::string num(long long v);

  private:
    struct Impl;
    Impl* impl_;
};

}  // namespace flowscale
