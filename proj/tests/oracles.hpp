#pragma once

// Independent reference implementations, written straight from the textbook
// definitions with no attempt at speed.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/imagery.hpp"

namespace oracle {

using Partition = std::set<std::set<int>>;

inline Partition partition_of(const std::vector<int>& labels) {
    std::map<int, std::set<int>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(static_cast<int>(i));
    Partition out;
    for (auto& [id, members] : groups) out.insert(members);
    return out;
}

// (row step, column step) by compass name; row 0 is the top.
inline std::pair<int, int> compass_step(const std::string& name) {
    static const std::map<std::string, std::pair<int, int>> steps{
        {"NE", {-1, 1}}, {"SE", {1, 1}}, {"NW", {-1, -1}}, {"SW", {1, -1}},
        {"S", {1, 0}},   {"N", {-1, 0}}, {"E", {0, 1}},    {"W", {0, -1}}};
    return steps.at(name);
}

inline std::vector<std::vector<std::int64_t>> glcm(const deepfeat::GrayImage& img, int ng,
                                                   const std::string& direction, int distance) {
    const auto [dr, dc] = compass_step(direction);
    std::vector<std::vector<std::int64_t>> counts(ng, std::vector<std::int64_t>(ng, 0));
    const int h = static_cast<int>(img.height());
    const int w = static_cast<int>(img.width());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int r2 = r + dr * distance;
            const int c2 = c + dc * distance;
            if (r2 < 0 || r2 >= h || c2 < 0 || c2 >= w) continue;
            const int a = img.pixels(r, c) * ng / 256;
            const int b = img.pixels(r2, c2) * ng / 256;
            ++counts[a][b];
        }
    }
    return counts;
}

inline deepfeat::GrayImage random_image(std::mt19937_64& rng, int h, int w) {
    deepfeat::GrayImage img(h, w);
    std::uniform_int_distribution<int> g(0, 255);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) img.pixels(r, c) = static_cast<std::uint8_t>(g(rng));
    return img;
}

inline double euclid(const Eigen::MatrixXd& x, int i, int j) { return (x.row(i) - x.row(j)).norm(); }

enum class Link { Single, Complete, Average };

struct AggloStep {
    double height;
    Partition after;
};

// Recomputes every cluster-to-cluster linkage from point distances at each
// step. Ties go to the lexicographically smallest pair, a cluster being
// indexed by its smallest member.
inline std::vector<AggloStep> agglomerative(const Eigen::MatrixXd& x, Link link) {
    const int n = static_cast<int>(x.rows());
    std::vector<std::vector<int>> clusters(n);
    for (int i = 0; i < n; ++i) clusters[i] = {i};
    std::vector<AggloStep> steps;
    while (clusters.size() > 1) {
        std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
                for (int a : clusters[i]) {
                    for (int b : clusters[j]) {
                        const double d = euclid(x, a, b);
                        lo = std::min(lo, d);
                        hi = std::max(hi, d);
                        sum += d;
                    }
                }
                const double v = link == Link::Single     ? lo
                                 : link == Link::Complete ? hi
                                                          : sum / (clusters[i].size() * clusters[j].size());
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(clusters[bi].begin(), clusters[bi].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
        Partition p;
        for (const auto& c : clusters) p.insert(std::set<int>(c.begin(), c.end()));
        steps.push_back({best, p});
    }
    return steps;
}

// DIANA from its definition: split the cluster of largest diameter; the
// splinter starts at the member with the largest mean dissimilarity and
// absorbs the member with the largest positive (mean to rest - mean to
// splinter) until none is positive. Returns the partition after each split.
inline std::vector<Partition> diana(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.rows());
    auto diameter = [&](const std::vector<int>& c) {
        double d = 0.0;
        for (int a : c)
            for (int b : c) d = std::max(d, euclid(x, a, b));
        return d;
    };
    auto mean_to = [&](int a, const std::vector<int>& group) {
        double s = 0.0;
        int m = 0;
        for (int b : group) {
            if (b == a) continue;
            s += euclid(x, a, b);
            ++m;
        }
        return m == 0 ? 0.0 : s / m;
    };
    std::vector<std::vector<int>> clusters{std::vector<int>(n)};
    std::iota(clusters[0].begin(), clusters[0].end(), 0);
    std::vector<Partition> out;
    for (int split = 0; split < n - 1; ++split) {
        std::size_t pick = 0;
        double widest = -1.0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (clusters[c].size() < 2) continue;
            const double d = diameter(clusters[c]);
            if (d > widest) {
                widest = d;
                pick = c;
            }
        }
        std::vector<int> rest = clusters[pick];
        std::vector<int> splinter;
        int seed = rest.front();
        for (int a : rest)
            if (mean_to(a, rest) > mean_to(seed, rest)) seed = a;
        splinter.push_back(seed);
        rest.erase(std::find(rest.begin(), rest.end(), seed));
        while (rest.size() > 1) {
            int best = -1;
            double gap = 0.0;
            for (int a : rest) {
                const double g = mean_to(a, rest) - mean_to(a, splinter);
                if (best < 0 || g > gap) {
                    best = a;
                    gap = g;
                }
            }
            if (gap <= 0.0) break;
            splinter.push_back(best);
            rest.erase(std::find(rest.begin(), rest.end(), best));
        }
        std::sort(splinter.begin(), splinter.end());
        clusters[pick] = rest;
        clusters.push_back(splinter);
        Partition p;
        for (const auto& c : clusters) p.insert(std::set<int>(c.begin(), c.end()));
        out.push_back(p);
    }
    return out;
}

// Smallest within-cluster sum of squares over every labelling into exactly k
// nonempty groups.
inline double best_ssw(const Eigen::MatrixXd& x, int k) {
    const int n = static_cast<int>(x.rows());
    std::vector<int> labels(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<int> count(k, 0);
        for (int l : labels) ++count[l];
        if (std::all_of(count.begin(), count.end(), [](int c) { return c > 0; })) {
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(k, x.cols());
            for (int i = 0; i < n; ++i) mean.row(labels[i]) += x.row(i);
            for (int c = 0; c < k; ++c) mean.row(c) /= count[c];
            double ss = 0.0;
            for (int i = 0; i < n; ++i) ss += (x.row(i) - mean.row(labels[i])).squaredNorm();
            best = std::min(best, ss);
        }
        int pos = 0;
        while (pos < n && ++labels[pos] == k) labels[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

// Gini decrease of a categorical split, from the class counts of the rows.
inline double gini_gain(const std::vector<std::vector<int>>& counts, const std::set<int>& left) {
    const std::size_t k = counts.front().size();
    std::vector<double> l(k, 0.0), r(k, 0.0);
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (std::size_t j = 0; j < k; ++j) (left.count(static_cast<int>(c)) ? l : r)[j] += counts[c][j];
    auto gini = [](const std::vector<double>& v) {
        const double n = std::accumulate(v.begin(), v.end(), 0.0);
        if (n == 0) return 0.0;
        double s = 1.0;
        for (double x : v) s -= (x / n) * (x / n);
        return s;
    };
    const double nl = std::accumulate(l.begin(), l.end(), 0.0);
    const double nr = std::accumulate(r.begin(), r.end(), 0.0);
    std::vector<double> all(k);
    for (std::size_t j = 0; j < k; ++j) all[j] = l[j] + r[j];
    const double n = nl + nr;
    return n * gini(all) - nl * gini(l) - nr * gini(r);
}

}  // namespace oracle
