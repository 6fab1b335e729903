#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "demandforge/error.hpp"
#include "demandforge/random.hpp"

namespace demandforge::gbdt {

struct Params {
    int num_trees = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_leaf = 1;
    double feature_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(num_trees >= 1, ErrorKind::InvalidArgument, "gbdt: num_trees must be >= 1");
        require(learning_rate > 0.0 && learning_rate <= 1.0, ErrorKind::InvalidArgument,
                "gbdt: learning_rate must be in (0, 1]");
        require(max_depth >= 1, ErrorKind::InvalidArgument, "gbdt: max_depth must be >= 1");
        require(min_samples_leaf >= 1, ErrorKind::InvalidArgument, "gbdt: min_samples_leaf must be >= 1");
        require(feature_fraction > 0.0 && feature_fraction <= 1.0, ErrorKind::InvalidArgument,
                "gbdt: feature_fraction must be in (0, 1]");
    }
};

/// Flat node array; a node with feature < 0 is a leaf carrying `value`
/// (already scaled by the learning rate). Samples with x[feature] <= threshold go left.
struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    bool operator==(const Node&) const = default;
};

struct Tree {
    std::vector<Node> nodes;

    double predict(std::span<const double> x) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i].value;
    }
    bool operator==(const Tree&) const = default;
};

struct Model {
    double base = 0.0;
    std::size_t num_features = 0;
    std::vector<Tree> trees;

    double predict(std::span<const double> x) const {
        double y = base;
        for (const auto& t : trees) y += t.predict(x);
        return y;
    }
    bool operator==(const Model&) const = default;
};

/// Feature indices a given tree may split on: ceil(fraction * F) drawn
/// without replacement from a stream derived from (seed, tree), ascending.
inline std::vector<std::size_t> sample_features(std::size_t num_features, double fraction, std::uint64_t seed,
                                                std::size_t tree) {
    std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(num_features) - 1e-12));
    k = std::clamp<std::size_t>(k, std::min<std::size_t>(1, num_features), num_features);
    std::vector<std::size_t> all(num_features);
    std::iota(all.begin(), all.end(), 0);
    if (k < num_features) {
        std::mt19937_64 rng(derive_seed(seed, tree));
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, num_features - i));
            std::swap(all[i], all[j]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
    }
    return all;
}

namespace detail {

struct Split {
    bool found = false;
    std::size_t feature_slot = 0;  // position within the tree's sampled feature list
    std::size_t left_count = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<const double> residual,
                const Params& params, const std::vector<std::vector<std::uint32_t>>& presorted,
                std::vector<std::size_t> features)
        : x_(x), rows_(rows), cols_(cols), residual_(residual), params_(params), features_(std::move(features)) {
        order_.reserve(features_.size());
        for (std::size_t f : features_) order_.push_back(presorted[f]);
        goes_left_.assign(rows_, 0);
        scratch_.resize(rows_);
    }

    Tree build() {
        Tree tree;
        tree.nodes.emplace_back();
        grow(tree, 0, 0, rows_, 0);
        return tree;
    }

private:
    double value(std::uint32_t row, std::size_t feature) const { return x_[row * cols_ + feature]; }

    Split best_split(std::size_t begin, std::size_t end, double total) const {
        Split best;
        const std::size_t n = end - begin;
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        if (n < 2 * min_leaf) return best;
        double total_sq = 0.0;
        const auto& any = order_.front();
        for (std::size_t i = begin; i < end; ++i) total_sq += residual_[any[i]] * residual_[any[i]];
        const double parent = total * total / static_cast<double>(n);
        const double min_gain = 1e-12 * std::max(total_sq, 1e-300);

        for (std::size_t slot = 0; slot < features_.size(); ++slot) {
            const std::size_t f = features_[slot];
            const auto& ord = order_[slot];
            double left_sum = 0.0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                left_sum += residual_[ord[i]];
                const std::size_t n_left = i + 1 - begin;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf) continue;
                if (n_right < min_leaf) break;
                const double v = value(ord[i], f);
                const double v_next = value(ord[i + 1], f);
                if (!(v < v_next)) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n_right) - parent;
                if (gain > min_gain && (!best.found || gain > best.gain)) {
                    double threshold = v + (v_next - v) / 2.0;
                    if (!(threshold < v_next)) threshold = v;
                    best = Split{true, slot, n_left, threshold, gain};
                }
            }
        }
        return best;
    }

    void grow(Tree& tree, std::size_t node, std::size_t begin, std::size_t end, int depth) {
        double total = 0.0;
        const auto& any = order_.front();
        for (std::size_t i = begin; i < end; ++i) total += residual_[any[i]];
        const double mean = total / static_cast<double>(end - begin);

        Split split;
        if (depth < params_.max_depth) split = best_split(begin, end, total);
        if (!split.found) {
            tree.nodes[node].value = params_.learning_rate * mean;
            return;
        }

        const std::size_t f = features_[split.feature_slot];
        const auto& chosen = order_[split.feature_slot];
        for (std::size_t i = begin; i < end; ++i) goes_left_[chosen[i]] = 1;
        for (std::size_t i = begin + split.left_count; i < end; ++i) goes_left_[chosen[i]] = 0;
        for (auto& ord : order_) {
            std::size_t l = begin, r = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (goes_left_[ord[i]]) {
                    ord[l++] = ord[i];
                } else {
                    scratch_[r++] = ord[i];
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                      ord.begin() + static_cast<std::ptrdiff_t>(l));
        }

        const auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const auto right = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node].feature = static_cast<std::int32_t>(f);
        tree.nodes[node].threshold = split.threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = right;
        const std::size_t mid = begin + split.left_count;
        grow(tree, static_cast<std::size_t>(left), begin, mid, depth + 1);
        grow(tree, static_cast<std::size_t>(right), mid, end, depth + 1);
    }

    std::span<const double> x_;
    std::size_t rows_;
    std::size_t cols_;
    std::span<const double> residual_;
    const Params& params_;
    std::vector<std::size_t> features_;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
};

}  // namespace detail

/// Gradient boosting on squared error with exact greedy splits. Split search
/// visits features in ascending index and thresholds in ascending order and
/// only replaces the incumbent on strictly larger gain, so ties resolve to
/// the lowest feature index, then the lowest threshold.
inline Model fit(std::span<const double> x, std::span<const double> y, std::size_t rows, std::size_t cols,
                 const Params& params, std::vector<double>* training_mse = nullptr) {
    params.validate();
    require(rows > 0, ErrorKind::InsufficientData, "gbdt: no training rows");
    require(x.size() == rows * cols && y.size() == rows, ErrorKind::InvalidArgument, "gbdt: shape mismatch");

    Model model;
    model.num_features = cols;
    model.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(rows);
    std::vector<double> residual(rows);
    for (std::size_t r = 0; r < rows; ++r) residual[r] = y[r] - model.base;

    auto mse = [&] {
        double s = 0.0;
        for (double r : residual) s += r * r;
        return s / static_cast<double>(rows);
    };
    if (training_mse) training_mse->push_back(mse());

    std::vector<std::vector<std::uint32_t>> presorted(cols);
    for (std::size_t f = 0; f < cols; ++f) {
        auto& ord = presorted[f];
        ord.resize(rows);
        std::iota(ord.begin(), ord.end(), 0u);
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x[a * cols + f] < x[b * cols + f]; });
    }
    for (int t = 0; t < params.num_trees; ++t) {
        Tree tree;
        if (cols == 0) {
            tree.nodes.push_back(Node{-1, 0.0, -1, -1,
                                      params.learning_rate * std::accumulate(residual.begin(), residual.end(), 0.0) /
                                          static_cast<double>(rows)});
        } else {
            auto features = sample_features(cols, params.feature_fraction, params.seed, static_cast<std::size_t>(t));
            detail::TreeBuilder builder(x, rows, cols, residual, params, presorted, std::move(features));
            tree = builder.build();
        }
        for (std::size_t r = 0; r < rows; ++r) residual[r] -= tree.predict(x.subspan(r * cols, cols));
        model.trees.push_back(std::move(tree));
        if (training_mse) training_mse->push_back(mse());
    }
    return model;
}

}  // namespace demandforge::gbdt
