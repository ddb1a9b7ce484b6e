#pragma once

// Field snapshots: a little-endian binary file plus a plain-text sidecar.
//
// Binary layout (all integers uint32, all reals IEEE-754 float64, little-endian):
//   offset  size  content
//   0       8     magic "MXHSNAP\0"
//   8       4     format version (1)
//   12      4     dim (1..3)
//   16      12    points per axis, 3 entries, absent axes stored as 1
//   28      24    box length per axis, 3 entries, absent axes stored as 0
//   52      8     time
//   60      4     component count (1 scalar, 3 vector)
//   64      4     name length n in bytes
//   68      n     field name, UTF-8, not terminated
//   68+n    ...   samples, component-major; within a component the node
//                 (i, j, k) sits at (i * ny + j) * nz + k
//
// The sidecar `<path>.txt` repeats the header as `key = value` lines.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mxh/grid.hpp"

namespace mxh {

struct Snapshot {
  std::string name;
  double time = 0.0;
  int dim = 0;
  std::array<int, 3> points{1, 1, 1};
  std::array<double, 3> lengths{0.0, 0.0, 0.0};
  int components = 0;
  std::vector<double> samples;
};

void write_snapshot(const std::filesystem::path& path, const std::string& name, const ScalarField& f, double time);
void write_snapshot(const std::filesystem::path& path, const std::string& name, const VectorField& f, double time);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Minimal CSV writer with a fixed header; values are written with 17
/// significant digits so rows round-trip.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);
  void row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

}  // namespace mxh
