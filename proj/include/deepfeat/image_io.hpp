#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deepfeat/imagery.hpp"

namespace deepfeat {

/// Reads an 8-bit grayscale PGM (P2/P5) or PNG. Color and 16-bit inputs are
/// rejected with InvalidData; unreadable files raise IoError.
GrayImage read_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayImage& img);

struct ManifestEntry {
    std::filesystem::path path;
    int score = 0;
};

/// CSV manifest with a `path,score` header. Relative paths are resolved
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Binary GLCM cache. Layout (little-endian):
///   "DGLC" | u32 version | u32 n_gray | u32 direction | u32 distance |
///   u64 count | count * n_gray * n_gray u32 entries (row-major)
inline constexpr std::uint32_t kGlcmCacheVersion = 1;

void write_glcm_cache(const std::filesystem::path& path, std::span<const Glcm> glcms);
std::vector<Glcm> read_glcm_cache(const std::filesystem::path& path);

}  // namespace deepfeat
