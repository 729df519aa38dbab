#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectflow/core.hpp"

namespace defectflow::learn {

enum class Criterion { gini, mse };

struct ForestConfig {
    int n_trees = 10;
    int min_samples_split = 2;
    int max_depth = -1;  // < 0: unbounded
    Criterion criterion = Criterion::gini;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;                // regressor: mean target; classifier: majority class label
    std::vector<double> class_counts;  // classifier leaves
    std::size_t samples = 0;
    double impurity = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(const double* row) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0)
            i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
        return nodes[i];
    }
    double predict(const double* row) const { return leaf_for(row).value; }
    std::size_t depth() const {
        std::vector<std::size_t> d(nodes.size(), 0);
        std::size_t best = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].feature >= 0) {
                d[static_cast<std::size_t>(nodes[i].left)] = d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
                best = std::max(best, d[i] + 1);
            }
        return best;
    }
};

enum class ForestMode { classifier, regressor };

struct ForestModel {
    ForestMode mode = ForestMode::regressor;
    std::vector<DecisionTree> trees;
    std::vector<double> classes;  // classifier: sorted distinct labels
    Vector feature_importances;   // sums to 1 unless all_zero_importances
    bool all_zero_importances = false;
    std::size_t n_features = 0;
};

inline double gini_impurity(const std::vector<double>& counts) {
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += (c / total) * (c / total);
    return 1.0 - s;
}

namespace detail {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
    std::size_t left_count = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<double>& target, const std::vector<int>& class_index,
                std::size_t n_classes, const ForestConfig& cfg, Vector& importance)
        : x_(x), y_(target), cls_(class_index), n_classes_(n_classes), cfg_(cfg), importance_(importance) {}

    DecisionTree build(std::vector<std::size_t> sample) {
        total_ = static_cast<double>(sample.size());
        tree_.nodes.clear();
        grow(sample, 0);
        return std::move(tree_);
    }

private:
    bool classifier() const { return cfg_.criterion == Criterion::gini; }

    double impurity(const std::vector<std::size_t>& idx, std::vector<double>& counts, double& mean) const {
        if (classifier()) {
            counts.assign(n_classes_, 0.0);
            for (auto i : idx) counts[static_cast<std::size_t>(cls_[i])] += 1.0;
            return gini_impurity(counts);
        }
        double s = 0.0, s2 = 0.0;
        for (auto i : idx) {
            s += y_[i];
            s2 += y_[i] * y_[i];
        }
        const double m = static_cast<double>(idx.size());
        mean = s / m;
        return std::max(0.0, s2 / m - mean * mean);
    }

    bool pure(const std::vector<std::size_t>& idx) const {
        for (auto i : idx)
            if (classifier() ? cls_[i] != cls_[idx.front()] : y_[i] != y_[idx.front()]) return false;
        return true;
    }

    SplitChoice best_split(const std::vector<std::size_t>& idx, double parent_impurity) const {
        SplitChoice best;
        const std::size_t m = idx.size();
        const double md = static_cast<double>(m);
        std::vector<std::size_t> order(idx);
        std::vector<double> left(n_classes_), right(n_classes_);
        for (Eigen::Index f = 0; f < x_.cols(); ++f) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f); });
            auto xv = [&](std::size_t k) { return x_(static_cast<Eigen::Index>(order[k]), f); };
            if (xv(0) == xv(m - 1)) continue;

            double ls = 0.0, ls2 = 0.0, rs = 0.0, rs2 = 0.0;
            if (classifier()) {
                std::fill(left.begin(), left.end(), 0.0);
                std::fill(right.begin(), right.end(), 0.0);
                for (auto i : order) right[static_cast<std::size_t>(cls_[i])] += 1.0;
            } else {
                for (auto i : order) {
                    rs += y_[i];
                    rs2 += y_[i] * y_[i];
                }
            }
            for (std::size_t k = 1; k < m; ++k) {
                const std::size_t moved = order[k - 1];
                if (classifier()) {
                    left[static_cast<std::size_t>(cls_[moved])] += 1.0;
                    right[static_cast<std::size_t>(cls_[moved])] -= 1.0;
                } else {
                    ls += y_[moved];
                    ls2 += y_[moved] * y_[moved];
                    rs -= y_[moved];
                    rs2 -= y_[moved] * y_[moved];
                }
                const double lo = xv(k - 1), hi = xv(k);
                if (lo == hi) continue;
                const double nl = static_cast<double>(k), nr = md - nl;
                double il, ir;
                if (classifier()) {
                    il = gini_impurity(left);
                    ir = gini_impurity(right);
                } else {
                    il = std::max(0.0, ls2 / nl - (ls / nl) * (ls / nl));
                    ir = std::max(0.0, rs2 / nr - (rs / nr) * (rs / nr));
                }
                const double decrease = parent_impurity - (nl / md) * il - (nr / md) * ir;
                if (decrease > best.decrease) {
                    double t = lo + (hi - lo) / 2.0;
                    if (t >= hi) t = lo;  // midpoint rounded onto the upper value
                    best = {static_cast<int>(f), t, decrease, k};
                }
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        std::vector<double> counts;
        double mean = 0.0;
        const double imp = impurity(idx, counts, mean);
        {
            auto& node = tree_.nodes.back();
            node.samples = idx.size();
            node.impurity = imp;
            if (classifier()) {
                node.class_counts = counts;
                node.value = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            } else {
                node.value = mean;
            }
        }
        const bool depth_limited = cfg_.max_depth >= 0 && depth >= cfg_.max_depth;
        if (depth_limited || idx.size() < static_cast<std::size_t>(cfg_.min_samples_split) || pure(idx)) return id;

        const auto split = best_split(idx, imp);
        if (split.feature < 0) return id;

        std::vector<std::size_t> l, r;
        for (auto i : idx) (x_(static_cast<Eigen::Index>(i), split.feature) <= split.threshold ? l : r).push_back(i);
        importance_(split.feature) += static_cast<double>(idx.size()) / total_ * split.decrease;

        tree_.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree_.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const int left = grow(l, depth + 1);
        const int right = grow(r, depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = left;
        tree_.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    const Matrix& x_;
    const std::vector<double>& y_;
    const std::vector<int>& cls_;
    std::size_t n_classes_;
    const ForestConfig& cfg_;
    Vector& importance_;
    DecisionTree tree_;
    double total_ = 0.0;
};

}  // namespace detail

// Bootstrap-aggregated CART trees grown to purity or min_samples_split.
// Classifier mode uses Gini, regressor mode uses MSE; the mode follows
// cfg.criterion. Tree t draws from seed derive_seed(cfg.seed, t).
inline ForestModel forest_fit(const Matrix& x, const Vector& y, const ForestConfig& cfg, unsigned threads = 1) {
    if (x.rows() == 0) throw EmptyInput("forest_fit");
    if (x.rows() != y.size()) throw DimensionMismatch(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.size()));
    if (cfg.n_trees < 1 || cfg.min_samples_split < 2) throw ConfigError("forest needs n_trees >= 1 and min_samples_split >= 2");
    require_finite(x);

    ForestModel model;
    model.mode = cfg.criterion == Criterion::gini ? ForestMode::classifier : ForestMode::regressor;
    model.n_features = static_cast<std::size_t>(x.cols());
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> target(y.data(), y.data() + y.size());
    std::vector<int> class_index(n, 0);
    if (model.mode == ForestMode::classifier) {
        model.classes = target;
        std::sort(model.classes.begin(), model.classes.end());
        model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
        for (std::size_t i = 0; i < n; ++i)
            class_index[i] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(), target[i]) -
                                              model.classes.begin());
    }

    model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
    std::vector<Vector> importance(model.trees.size(), Vector::Zero(x.cols()));
    parallel_for(model.trees.size(), threads, [&](std::size_t t) {
        std::vector<std::size_t> sample(n);
        if (cfg.bootstrap) {
            std::mt19937_64 rng(derive_seed(cfg.seed, t));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& s : sample) s = pick(rng);
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        detail::TreeBuilder builder(x, target, class_index, model.classes.size(), cfg, importance[t]);
        model.trees[t] = builder.build(std::move(sample));
        if (model.mode == ForestMode::classifier)
            for (auto& node : model.trees[t].nodes) node.value = model.classes[static_cast<std::size_t>(node.value)];
    });

    model.feature_importances = Vector::Zero(x.cols());
    for (const auto& imp : importance)
        for (Eigen::Index j = 0; j < x.cols(); ++j) model.feature_importances(j) += imp(j);
    double total = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) total += model.feature_importances(j);
    if (total > 0.0) model.feature_importances /= total;
    else model.all_zero_importances = true;
    return model;
}

// Classifier: majority vote over trees, ties to the lowest label.
// Regressor: mean of tree outputs.
inline Vector forest_predict(const ForestModel& m, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != m.n_features) throw DimensionMismatch(m.n_features, static_cast<std::size_t>(x.cols()));
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double* row = x.row(i).data();
        if (m.mode == ForestMode::regressor) {
            double s = 0.0;
            for (const auto& t : m.trees) s += t.predict(row);
            out(i) = s / static_cast<double>(m.trees.size());
        } else {
            std::map<double, int> votes;
            for (const auto& t : m.trees) ++votes[t.predict(row)];
            auto best = votes.begin();
            for (auto it = votes.begin(); it != votes.end(); ++it)
                if (it->second > best->second) best = it;
            out(i) = best->first;
        }
    }
    return out;
}

inline nlohmann::json to_json(const ForestModel& m) {
    nlohmann::json j;
    j["mode"] = m.mode == ForestMode::classifier ? "classifier" : "regressor";
    j["classes"] = m.classes;
    j["feature_importances"] = std::vector<double>(m.feature_importances.data(),
                                                   m.feature_importances.data() + m.feature_importances.size());
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& t : m.trees) {
        auto nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nlohmann::json jn{{"samples", n.samples}, {"value", n.value}};
            if (n.feature >= 0) {
                jn["feature"] = n.feature;
                jn["threshold"] = n.threshold;
                jn["left"] = n.left;
                jn["right"] = n.right;
            }
            nodes.push_back(std::move(jn));
        }
        trees.push_back(std::move(nodes));
    }
    return j;
}

}  // namespace defectflow::learn
