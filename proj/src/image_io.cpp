#include "deepfeat/image_io.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

#include "deepfeat/error.hpp"
#include "deepfeat/table_io.hpp"

namespace deepfeat {

namespace {

// Next whitespace-separated token of a PNM header, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int pnm_int(std::istream& in, const std::filesystem::path& path) {
    const std::string tok = pnm_token(in);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw InvalidData(path.string() + ": malformed PGM header");
    }
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    if (magic == "P3" || magic == "P6")
        throw InvalidData(path.string() + ": color PPM input is not supported");
    if (magic != "P2" && magic != "P5")
        throw InvalidData(path.string() + ": not a PGM file");
    const int width = pnm_int(in, path);
    const int height = pnm_int(in, path);
    const int maxval = pnm_int(in, path);
    if (width < 1 || height < 1) throw InvalidData(path.string() + ": empty image");
    if (maxval < 1 || maxval > 255)
        throw InvalidData(path.string() + ": only 8-bit PGM is supported");

    GrayImage img(height, width);
    if (magic == "P5") {
        in.read(reinterpret_cast<char*>(img.pixels.data()), img.pixels.size());
        if (in.gcount() != img.pixels.size())
            throw InvalidData(path.string() + ": truncated pixel data");
    } else {
        for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
            const int v = pnm_int(in, path);
            if (v < 0 || v > maxval) throw InvalidData(path.string() + ": pixel out of range");
            img.pixels.data()[i] = static_cast<std::uint8_t>(v);
        }
    }
    if (maxval != 255) {
        img.pixels = (img.pixels.cast<int>() * 255 / maxval).cast<std::uint8_t>();
    }
    return img;
}

GrayImage read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"),
                                                       &std::fclose);
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    GrayImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidData(path.string() + ": corrupt PNG");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidData(path.string() + ": only single-channel grayscale PNG is supported");
    }
    if (depth > 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidData(path.string() + ": only 8-bit grayscale PNG is supported");
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    img = GrayImage(height, width);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = img.pixels.data() + r * width;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in, int bytes, const std::filesystem::path& path) {
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), bytes);
    if (in.gcount() != bytes) throw InvalidData(path.string() + ": truncated GLCM cache");
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    std::array<unsigned char, 8> sig{};
    probe.read(reinterpret_cast<char*>(sig.data()), sig.size());
    probe.close();
    if (png_sig_cmp(sig.data(), 0, 8) == 0) return read_png(path);
    if (sig[0] == 'P') return read_pgm(path);
    throw InvalidData(path.string() + ": unsupported image format (expected PGM or PNG)");
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    std::ostringstream out(std::ios::binary);
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    write_file_atomically(path, out.str());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const auto path_col = table.column_index("path");
    const auto score_col = table.column_index("score");
    if (!path_col || !score_col)
        throw InvalidData(path.string() + ": manifest needs 'path' and 'score' columns");
    std::vector<ManifestEntry> entries;
    entries.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        ManifestEntry e;
        e.path = row[*path_col];
        if (e.path.is_relative()) e.path = path.parent_path() / e.path;
        try {
            e.score = std::stoi(row[*score_col]);
        } catch (const std::exception&) {
            throw InvalidData(path.string() + ": bad score '" + row[*score_col] + "'");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_glcm_cache(const std::filesystem::path& path, std::span<const Glcm> glcms) {
    std::ostringstream out(std::ios::binary);
    const int ng = glcms.empty() ? 0 : glcms.front().n_gray_levels;
    const SpatialRelationship rel = glcms.empty() ? SpatialRelationship{} : glcms.front().relationship;
    out.write("DGLC", 4);
    put_u32(out, kGlcmCacheVersion);
    put_u32(out, static_cast<std::uint32_t>(ng));
    put_u32(out, static_cast<std::uint32_t>(rel.direction));
    put_u32(out, static_cast<std::uint32_t>(rel.distance));
    put_u64(out, glcms.size());
    for (const auto& g : glcms) {
        if (g.n_gray_levels != ng || g.relationship.direction != rel.direction ||
            g.relationship.distance != rel.distance)
            throw InvalidData("GLCM cache entries must share gray levels and relationship");
        for (Eigen::Index i = 0; i < g.counts.size(); ++i)
            put_u32(out, static_cast<std::uint32_t>(g.counts.data()[i]));
    }
    write_file_atomically(path, out.str());
}

std::vector<Glcm> read_glcm_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != "DGLC")
        throw InvalidData(path.string() + ": not a GLCM cache");
    const auto version = get_le(in, 4, path);
    if (version != kGlcmCacheVersion)
        throw InvalidData(path.string() + ": unsupported cache version " + std::to_string(version));
    const int ng = static_cast<int>(get_le(in, 4, path));
    const auto dir = get_le(in, 4, path);
    const int dist = static_cast<int>(get_le(in, 4, path));
    const auto count = get_le(in, 8, path);
    if (dir > 7 || ng < 0 || ng > 256) throw InvalidData(path.string() + ": corrupt cache header");
    std::vector<Glcm> out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        Glcm g{ng, CountMatrix(ng, ng), {static_cast<Direction>(dir), dist}};
        for (Eigen::Index i = 0; i < g.counts.size(); ++i)
            g.counts.data()[i] = static_cast<std::int64_t>(get_le(in, 4, path));
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace deepfeat
