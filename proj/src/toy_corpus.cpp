#include "deepfeat/toy_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "deepfeat/error.hpp"
#include "deepfeat/random.hpp"

namespace deepfeat {

GrayImage render_toy_tissue(int score, int size, std::uint64_t seed) {
    if (score < 0 || score > 3) throw InvalidParameter("toy score must be in {0, 1, 2, 3}");
    if (size < 8) throw InvalidParameter("toy image size must be >= 8");
    Rng rng(seed);
    std::uniform_real_distribution<double> unit;
    std::normal_distribution<double> gauss;

    constexpr std::array<double, 4> stained_share{0.0, 0.12, 0.45, 0.8};
    constexpr std::array<double, 4> stain_level{150.0, 115.0, 85.0, 55.0};
    const double share = std::clamp(stained_share[score] + 0.08 * gauss(rng), 0.0, 1.0);
    const double dark = stain_level[score] + 10.0 * gauss(rng);

    Eigen::ArrayXXd canvas(size, size);
    const double base = 195.0 + 15.0 * gauss(rng);
    const double ripple = 2.0 * M_PI / (6.0 + 10.0 * unit(rng));
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) canvas(r, c) = base + 8.0 * std::sin(ripple * (r + 0.5 * c));

    const int nuclei = static_cast<int>(size * size / 90.0 * (0.7 + 0.6 * unit(rng)));
    for (int k = 0; k < nuclei; ++k) {
        const double cr = unit(rng) * size;
        const double cc = unit(rng) * size;
        const double radius = 2.0 + 3.0 * unit(rng);
        const double level = unit(rng) < share ? dark : 150.0 + 10.0 * gauss(rng);
        const int r0 = std::max(0, static_cast<int>(cr - radius));
        const int r1 = std::min(size - 1, static_cast<int>(cr + radius));
        const int c0 = std::max(0, static_cast<int>(cc - radius));
        const int c1 = std::min(size - 1, static_cast<int>(cc + radius));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) canvas(r, c) = level;
    }

    const double noise = 6.0 + 8.0 * unit(rng);
    const double speckle = 0.02 + 0.2 * unit(rng);
    GrayImage img(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            const double v = unit(rng) < speckle ? 256.0 * unit(rng) : canvas(r, c) + noise * gauss(rng);
            img.pixels(r, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    return img;
}

std::vector<ToyImage> toy_corpus(int n, int size, std::uint64_t seed) {
    if (n < 1) throw InvalidParameter("toy corpus needs at least one image");
    constexpr std::array<double, 4> prior{0.3, 0.15, 0.2, 0.35};
    Rng rng(seed);
    std::discrete_distribution<int> pick(prior.begin(), prior.end());
    std::vector<ToyImage> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].score = pick(rng);
        out[i].image = render_toy_tissue(out[i].score, size, derive_seed(seed, "toy-image", i));
    }
    return out;
}

}  // namespace deepfeat
