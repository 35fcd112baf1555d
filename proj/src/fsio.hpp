#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pairre {

// Whole-file read; throws Error(Io) on failure.
std::string read_file(const std::string& path);

// Overwrites; throws Error(Io) on failure.
void write_file(const std::string& path, const std::string& content);

// FNV-1a, 64 bit. Used for input-file fingerprints in run manifests.
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);
uint64_t fnv1a64_file(const std::string& path);

// Shortest round-trip decimal for a double ("%.17g").
std::string fmt_g17(double v);

// Splits on a single delimiter; keeps empty fields.
std::vector<std::string> split(const std::string& line, char delim);

}  // namespace pairre
