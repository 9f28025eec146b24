#pragma once

#include <cstdint>
#include <vector>

#include "deepfeat/imagery.hpp"

namespace deepfeat {

/// Synthetic stained-tissue image: round nuclei on a textured background, a
/// score-dependent share of them darkly stained, plus sensor noise and a
/// sprinkle of uniformly random pixels.
GrayImage render_toy_tissue(int score, int size, std::uint64_t seed);

struct ToyImage {
    GrayImage image;
    int score = 0;
};

/// n images with scores in {0, 1, 2, 3} drawn from a fixed prior.
std::vector<ToyImage> toy_corpus(int n, int size, std::uint64_t seed);

}  // namespace deepfeat
