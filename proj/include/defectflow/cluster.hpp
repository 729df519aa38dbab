#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "defectflow/core.hpp"
#include "defectflow/csv.hpp"

namespace defectflow::cluster {

inline constexpr int kNoise = -1;

enum class Algorithm { kmeans, dbscan };

inline const char* to_string(Algorithm a) { return a == Algorithm::kmeans ? "kmeans" : "dbscan"; }

struct KMeansConfig {
    int k = 2;
    int n_init = 10;
    int max_iter = 300;
    double tol = 1e-4;
    std::uint64_t seed = 0;
};

struct DbscanConfig {
    double eps = 0.5;
    int min_pts = 5;
};

struct Distribution {
    std::size_t cluster_count = 0;
    double largest_fraction = 0.0;  // over non-noise points
    double noise_fraction = 0.0;    // over all points
};

struct ClusterModel {
    Algorithm algorithm = Algorithm::kmeans;
    std::vector<int> labels;  // per point; kNoise for DBSCAN noise
    Matrix centers;           // k-means only
    std::optional<double> silhouette;
    std::size_t cluster_count = 0;
    double largest_fraction = 0.0;
    double noise_fraction = 0.0;
    double inertia = 0.0;     // k-means only
    bool degenerate = false;  // k-means on identical points with k > 1
    std::string description;
};

struct SelectionPolicy {
    std::size_t max_clusters = 30;
    std::size_t min_clusters = 2;
    double max_largest_fraction = 0.95;
};

class TooFewPoints : public Error {
public:
    TooFewPoints(std::size_t needed, std::size_t got)
        : Error("TooFewPoints", "too few points: needed " + std::to_string(needed) + ", got " + std::to_string(got)) {}
};

class UndefinedScore : public Error {
public:
    UndefinedScore() : Error("UndefinedScore", "silhouette needs at least two non-noise clusters") {}
};

class NoFeasibleCandidate : public Error {
public:
    explicit NoFeasibleCandidate(std::vector<std::string> reasons)
        : Error("NoFeasibleCandidate", summarize(reasons)), reasons(std::move(reasons)) {}
    std::vector<std::string> reasons;  // one line per candidate

private:
    static std::string summarize(const std::vector<std::string>& r) {
        std::string s = "no feasible clustering among " + std::to_string(r.size()) + " candidates";
        for (std::size_t i = 0; i < r.size() && i < 5; ++i) s += "\n  " + r[i];
        if (r.size() > 5) s += "\n  ...";
        return s;
    }
};

inline double squared_distance(const double* a, const double* b, Eigen::Index d) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

inline double distance(const Matrix& p, Eigen::Index i, Eigen::Index j) {
    return std::sqrt(squared_distance(p.row(i).data(), p.row(j).data(), p.cols()));
}

// Dense symmetric Euclidean distance matrix.
class DistanceMatrix {
public:
    explicit DistanceMatrix(const Matrix& points) : n_(static_cast<std::size_t>(points.rows())), d_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double v = distance(points, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                d_[i * n_ + j] = v;
                d_[j * n_ + i] = v;
            }
    }
    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    const double* row(std::size_t i) const { return d_.data() + i * n_; }

private:
    std::size_t n_;
    std::vector<double> d_;
};

// ---------------------------------------------------------------------------
// Distribution and silhouette

inline Distribution distribution(const std::vector<int>& labels) {
    if (labels.empty()) throw EmptyInput("distribution");
    std::map<int, std::size_t> sizes;
    std::size_t noise = 0;
    for (int l : labels) {
        if (l == kNoise) ++noise;
        else ++sizes[l];
    }
    Distribution d;
    d.cluster_count = sizes.size();
    std::size_t largest = 0;
    for (const auto& [id, n] : sizes) largest = std::max(largest, n);
    const std::size_t clustered = labels.size() - noise;
    d.largest_fraction = clustered ? static_cast<double>(largest) / static_cast<double>(clustered) : 0.0;
    d.noise_fraction = static_cast<double>(noise) / static_cast<double>(labels.size());
    return d;
}

namespace detail {

// Maps arbitrary non-noise labels onto 0..m-1 in order of first appearance.
inline std::vector<int> compact_labels(const std::vector<int>& labels, std::size_t& count) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size(), kNoise);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kNoise) continue;
        auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    count = remap.size();
    return out;
}

template <typename DistFn>
double silhouette_impl(std::size_t n, const std::vector<int>& labels, DistFn&& dist) {
    std::size_t m = 0;
    const auto lab = compact_labels(labels, m);
    if (m < 2) throw UndefinedScore();
    std::vector<std::size_t> size(m, 0);
    for (int l : lab)
        if (l != kNoise) ++size[static_cast<std::size_t>(l)];

    std::vector<double> sums(m);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (lab[i] == kNoise) continue;
        ++counted;
        const auto own = static_cast<std::size_t>(lab[i]);
        if (size[own] == 1) continue;  // singleton scores 0
        std::fill(sums.begin(), sums.end(), 0.0);
        dist(i, lab, sums);
        const double a = sums[own] / static_cast<double>(size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < m; ++c)
            if (c != own) b = std::min(b, sums[c] / static_cast<double>(size[c]));
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(counted);
}

}  // namespace detail

// Mean silhouette over non-noise points; noise is excluded entirely.
inline double silhouette(const DistanceMatrix& dm, const std::vector<int>& labels) {
    if (labels.size() != dm.size()) throw DimensionMismatch(dm.size(), labels.size());
    return detail::silhouette_impl(dm.size(), labels, [&](std::size_t i, const std::vector<int>& lab, std::vector<double>& sums) {
        const double* row = dm.row(i);
        for (std::size_t j = 0; j < lab.size(); ++j)
            if (lab[j] != kNoise) sums[static_cast<std::size_t>(lab[j])] += row[j];
    });
}

inline double silhouette(const Matrix& points, const std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (labels.size() != n) throw DimensionMismatch(n, labels.size());
    return detail::silhouette_impl(n, labels, [&](std::size_t i, const std::vector<int>& lab, std::vector<double>& sums) {
        for (std::size_t j = 0; j < lab.size(); ++j)
            if (lab[j] != kNoise)
                sums[static_cast<std::size_t>(lab[j])] +=
                    distance(points, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
}

inline std::optional<double> try_silhouette(const DistanceMatrix& dm, const std::vector<int>& labels) {
    std::size_t m = 0;
    detail::compact_labels(labels, m);
    if (m < 2) return std::nullopt;
    return silhouette(dm, labels);
}

inline void fill_distribution(ClusterModel& model) {
    const auto d = distribution(model.labels);
    model.cluster_count = d.cluster_count;
    model.largest_fraction = d.largest_fraction;
    model.noise_fraction = d.noise_fraction;
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansTrace {
    std::vector<std::vector<double>> inertia;  // one sequence per restart
};

namespace detail {

// Nearest center, ties to the lowest index. Returns inertia.
inline double assign(const Matrix& p, const Matrix& centers, std::vector<int>& labels) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index c = 0; c < centers.rows(); ++c) {
            const double d = squared_distance(p.row(i).data(), centers.row(c).data(), p.cols());
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = arg;
        inertia += best;
    }
    return inertia;
}

inline Matrix kmeanspp_seed(const Matrix& p, int k, std::mt19937_64& rng) {
    const auto n = p.rows();
    Matrix centers(k, p.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = p.row(first(rng));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        d2[static_cast<std::size_t>(i)] = squared_distance(p.row(i).data(), centers.row(0).data(), p.cols());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            // D^2 sampling; zero-mass points can never be drawn.
            const double r = unit(rng) * total;
            double acc = 0.0;
            pick = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > r && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                pick = n - 1;
                while (d2[static_cast<std::size_t>(pick)] == 0.0) --pick;
            }
        } else {
            pick = first(rng);
        }
        centers.row(c) = p.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] = std::min(
                d2[static_cast<std::size_t>(i)], squared_distance(p.row(i).data(), centers.row(c).data(), p.cols()));
    }
    return centers;
}

struct KMeansRun {
    Matrix centers;
    std::vector<int> labels;
    double inertia = 0.0;
    std::vector<double> trace;
};

inline KMeansRun lloyd(const Matrix& p, const KMeansConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    KMeansRun run;
    run.centers = kmeanspp_seed(p, cfg.k, rng);
    run.labels.assign(static_cast<std::size_t>(p.rows()), 0);
    double inertia = assign(p, run.centers, run.labels);
    run.trace.push_back(inertia);
    for (int it = 0; it < cfg.max_iter; ++it) {
        // Update step; an empty cluster keeps its previous center.
        Matrix sums = Matrix::Zero(cfg.k, p.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.k), 0);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            sums.row(run.labels[static_cast<std::size_t>(i)]) += p.row(i);
            ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < cfg.k; ++c)
            if (counts[static_cast<std::size_t>(c)])
                run.centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);

        auto previous = run.labels;
        const double next = assign(p, run.centers, run.labels);
        run.trace.push_back(next);
        const bool stable = previous == run.labels;
        const bool small = inertia > 0.0 ? (inertia - next) <= cfg.tol * inertia : true;
        inertia = next;
        if (stable || small) break;
    }
    run.inertia = inertia;
    return run;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding; best of n_init restarts by
// inertia (ties to the earliest restart). The returned labels are the
// nearest-center assignment for the returned centers.
inline ClusterModel kmeans_fit(const Matrix& points, const KMeansConfig& cfg, KMeansTrace* trace = nullptr,
                               unsigned threads = 1) {
    if (points.rows() == 0) throw TooFewPoints(1, 0);
    if (cfg.k < 1 || cfg.n_init < 1 || cfg.max_iter < 1) throw ConfigError("k-means needs k, n_init, max_iter >= 1");
    if (static_cast<Eigen::Index>(cfg.k) > points.rows())
        throw TooFewPoints(static_cast<std::size_t>(cfg.k), static_cast<std::size_t>(points.rows()));
    require_finite(points);

    std::vector<detail::KMeansRun> runs(static_cast<std::size_t>(cfg.n_init));
    parallel_for(runs.size(), threads, [&](std::size_t r) { runs[r] = detail::lloyd(points, cfg, derive_seed(cfg.seed, r)); });

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].inertia < runs[best].inertia) best = r;
    if (trace)
        for (const auto& r : runs) trace->inertia.push_back(r.trace);

    ClusterModel m;
    m.algorithm = Algorithm::kmeans;
    m.centers = runs[best].centers;
    m.labels = runs[best].labels;
    m.inertia = runs[best].inertia;
    m.degenerate = cfg.k > 1 && (points.rowwise() - points.row(0)).cwiseAbs().maxCoeff() == 0.0;
    m.description = "kmeans(k=" + std::to_string(cfg.k) + ")";

    // Drop centers that ended up without points so ids stay contiguous.
    std::vector<std::size_t> used(static_cast<std::size_t>(cfg.k), 0);
    for (int l : m.labels) ++used[static_cast<std::size_t>(l)];
    if (!m.degenerate && std::count(used.begin(), used.end(), 0)) {
        std::vector<int> remap(static_cast<std::size_t>(cfg.k), kNoise);
        std::vector<Eigen::Index> keep;
        for (int c = 0; c < cfg.k; ++c)
            if (used[static_cast<std::size_t>(c)]) {
                remap[static_cast<std::size_t>(c)] = static_cast<int>(keep.size());
                keep.push_back(c);
            }
        Matrix centers(static_cast<Eigen::Index>(keep.size()), points.cols());
        for (std::size_t c = 0; c < keep.size(); ++c) centers.row(static_cast<Eigen::Index>(c)) = m.centers.row(keep[c]);
        m.centers = centers;
        for (int& l : m.labels) l = remap[static_cast<std::size_t>(l)];
    }
    fill_distribution(m);
    return m;
}

// ---------------------------------------------------------------------------
// DBSCAN

// Per-point neighbor lists sorted by distance, so any radius query is a
// prefix. Built once and shared by every cell of a grid search.
class NeighborIndex {
public:
    explicit NeighborIndex(const DistanceMatrix& dm) : n_(dm.size()), dist_(n_ * n_), idx_(n_ * n_) {
        std::vector<std::uint32_t> order(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = dm.row(i);
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
                return row[a] < row[b] || (row[a] == row[b] && a < b);
            });
            for (std::size_t k = 0; k < n_; ++k) {
                dist_[i * n_ + k] = row[order[k]];
                idx_[i * n_ + k] = order[k];
            }
        }
    }
    std::size_t size() const { return n_; }
    // Number of points within the closed ball of radius eps, self included.
    std::size_t count(std::size_t i, double eps) const {
        const double* b = dist_.data() + i * n_;
        return static_cast<std::size_t>(std::upper_bound(b, b + n_, eps) - b);
    }
    const std::uint32_t* neighbors(std::size_t i) const { return idx_.data() + i * n_; }

private:
    std::size_t n_;
    std::vector<double> dist_;
    std::vector<std::uint32_t> idx_;
};

namespace detail {

inline constexpr int kUnassigned = -2;

// Clusters are grown in index order of their first core point; a border point
// joins the first cluster whose expansion reaches it.
inline std::vector<int> dbscan_labels(const NeighborIndex& index, const DbscanConfig& cfg) {
    const std::size_t n = index.size();
    std::vector<std::size_t> degree(n);
    std::vector<char> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        degree[i] = index.count(i, cfg.eps);
        core[i] = degree[i] >= static_cast<std::size_t>(cfg.min_pts);
    }
    std::vector<int> labels(n, kUnassigned);
    std::vector<std::size_t> queue;
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || labels[i] != kUnassigned) continue;
        labels[i] = next;
        queue.assign(1, i);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t p = queue[head];
            const std::uint32_t* nb = index.neighbors(p);
            for (std::size_t k = 0; k < degree[p]; ++k) {
                const std::size_t q = nb[k];
                if (labels[q] != kUnassigned) continue;
                labels[q] = next;
                if (core[q]) queue.push_back(q);
            }
        }
        ++next;
    }
    for (int& l : labels)
        if (l == kUnassigned) l = kNoise;
    return labels;
}

inline std::string dbscan_description(const DbscanConfig& cfg) {
    std::ostringstream os;
    os << "dbscan(min_pts=" << cfg.min_pts << ",eps=" << cfg.eps << ")";
    return os.str();
}

}  // namespace detail

// Core point: at least min_pts points (itself included) in the closed
// eps-ball. Silhouette is filled when defined.
inline ClusterModel dbscan_fit(const Matrix& points, const DbscanConfig& cfg) {
    if (points.rows() == 0) throw TooFewPoints(1, 0);
    if (!(cfg.eps > 0.0)) throw ConfigError("DBSCAN eps must be positive");
    if (cfg.min_pts < 1) throw ConfigError("DBSCAN min_pts must be >= 1");
    require_finite(points);
    const DistanceMatrix dm(points);
    const NeighborIndex index(dm);
    ClusterModel m;
    m.algorithm = Algorithm::dbscan;
    m.labels = detail::dbscan_labels(index, cfg);
    m.description = detail::dbscan_description(cfg);
    fill_distribution(m);
    m.silhouette = try_silhouette(dm, m.labels);
    return m;
}

struct GridEntry {
    DbscanConfig config;
    ClusterModel model;
};

struct GridRanges {
    std::vector<int> min_pts;
    std::vector<double> eps;

    // m in [5, 20], eps in [0.1, 1.5] with step 0.1.
    static GridRanges defaults() {
        GridRanges r;
        for (int m = 5; m <= 20; ++m) r.min_pts.push_back(m);
        for (int e = 1; e <= 15; ++e) r.eps.push_back(e / 10.0);
        return r;
    }
};

namespace detail {

// Computes silhouettes for a batch of labelings, evaluating each distinct
// labeling once. Results land in input order.
inline std::vector<std::optional<double>> batch_silhouettes(const DistanceMatrix& dm,
                                                            const std::vector<const std::vector<int>*>& labelings,
                                                            unsigned threads) {
    std::map<std::vector<int>, std::size_t> unique_index;
    std::vector<std::size_t> slot(labelings.size());
    std::vector<const std::vector<int>*> unique;
    for (std::size_t i = 0; i < labelings.size(); ++i) {
        auto [it, inserted] = unique_index.emplace(*labelings[i], unique.size());
        if (inserted) unique.push_back(labelings[i]);
        slot[i] = it->second;
    }
    std::vector<std::optional<double>> scores(unique.size());
    parallel_for(unique.size(), threads, [&](std::size_t u) { scores[u] = try_silhouette(dm, *unique[u]); });
    std::vector<std::optional<double>> out(labelings.size());
    for (std::size_t i = 0; i < labelings.size(); ++i) out[i] = scores[slot[i]];
    return out;
}

}  // namespace detail

// Every (min_pts, eps) pair, min_pts-major, in the order given.
inline std::vector<GridEntry> grid_search_dbscan(const Matrix& points, const GridRanges& ranges = GridRanges::defaults(),
                                                 unsigned threads = 1, const DistanceMatrix* shared = nullptr) {
    if (points.rows() == 0) throw TooFewPoints(1, 0);
    require_finite(points);
    std::optional<DistanceMatrix> own;
    if (!shared) own.emplace(points);
    const DistanceMatrix& dm = shared ? *shared : *own;
    const NeighborIndex index(dm);

    std::vector<GridEntry> grid;
    for (int m : ranges.min_pts)
        for (double e : ranges.eps) grid.push_back({DbscanConfig{e, m}, {}});
    for (const auto& g : grid) {
        if (!(g.config.eps > 0.0) || g.config.min_pts < 1) throw ConfigError("invalid DBSCAN grid point");
    }
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        auto& g = grid[i];
        g.model.algorithm = Algorithm::dbscan;
        g.model.labels = detail::dbscan_labels(index, g.config);
        g.model.description = detail::dbscan_description(g.config);
        fill_distribution(g.model);
    });
    std::vector<const std::vector<int>*> labelings;
    for (const auto& g : grid) labelings.push_back(&g.model.labels);
    auto scores = detail::batch_silhouettes(dm, labelings, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i].model.silhouette = scores[i];
    return grid;
}

// k-means for each k in `ks` (skipping k > n), with silhouettes.
inline std::vector<ClusterModel> kmeans_sweep(const Matrix& points, const std::vector<int>& ks, const KMeansConfig& base,
                                              unsigned threads = 1, const DistanceMatrix* shared = nullptr) {
    std::optional<DistanceMatrix> own;
    if (!shared) own.emplace(points);
    const DistanceMatrix& dm = shared ? *shared : *own;
    std::vector<int> valid;
    for (int k : ks)
        if (k >= 1 && static_cast<Eigen::Index>(k) <= points.rows()) valid.push_back(k);
    std::vector<ClusterModel> out(valid.size());
    parallel_for(valid.size(), threads, [&](std::size_t i) {
        auto cfg = base;
        cfg.k = valid[i];
        cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(valid[i]));
        out[i] = kmeans_fit(points, cfg);
    });
    std::vector<const std::vector<int>*> labelings;
    for (const auto& m : out) labelings.push_back(&m.labels);
    auto scores = detail::batch_silhouettes(dm, labelings, threads);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].silhouette = scores[i];
    return out;
}

// ---------------------------------------------------------------------------
// Selection

inline std::optional<std::string> infeasibility(const ClusterModel& m, const SelectionPolicy& policy) {
    if (!m.silhouette) return "silhouette undefined";
    if (m.cluster_count < policy.min_clusters)
        return "cluster_count " + std::to_string(m.cluster_count) + " < " + std::to_string(policy.min_clusters);
    if (m.cluster_count > policy.max_clusters)
        return "cluster_count " + std::to_string(m.cluster_count) + " > " + std::to_string(policy.max_clusters);
    if (m.largest_fraction > policy.max_largest_fraction) {
        std::ostringstream os;
        os << "largest_fraction " << m.largest_fraction << " > " << policy.max_largest_fraction;
        return os.str();
    }
    return std::nullopt;
}

// Index of the feasible candidate with the highest silhouette; ties go to
// fewer clusters, then a smaller largest cluster, then input order.
inline std::size_t select_index(const std::vector<ClusterModel>& candidates, const SelectionPolicy& policy = {}) {
    if (candidates.empty()) throw NoFeasibleCandidate({});
    if (policy.min_clusters > policy.max_clusters) throw ConfigError("min_clusters > max_clusters");
    std::optional<std::size_t> best;
    std::vector<std::string> reasons;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (auto why = infeasibility(c, policy)) {
            reasons.push_back("#" + std::to_string(i) + " " + c.description + ": " + *why);
            continue;
        }
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = candidates[*best];
        if (*c.silhouette != *b.silhouette) {
            if (*c.silhouette > *b.silhouette) best = i;
        } else if (c.cluster_count != b.cluster_count) {
            if (c.cluster_count < b.cluster_count) best = i;
        } else if (c.largest_fraction < b.largest_fraction) {
            best = i;
        }
    }
    if (!best) throw NoFeasibleCandidate(std::move(reasons));
    return *best;
}

inline ClusterModel select_model(const std::vector<ClusterModel>& candidates, const SelectionPolicy& policy = {}) {
    return candidates[select_index(candidates, policy)];
}

// Grid report mirroring the clustering result tables.
inline csv::Table grid_report(const std::vector<GridEntry>& grid) {
    csv::Table t{{"min_pts", "eps", "silhouette", "clusters", "largest_fraction", "noise_fraction"}, {}};
    auto fmt = [](double v) {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(4);
        os << v;
        return os.str();
    };
    for (const auto& g : grid)
        t.rows.push_back({std::to_string(g.config.min_pts), fmt(g.config.eps),
                          g.model.silhouette ? fmt(*g.model.silhouette) : std::string("undefined"),
                          std::to_string(g.model.cluster_count), fmt(g.model.largest_fraction),
                          fmt(g.model.noise_fraction)});
    return t;
}

}  // namespace defectflow::cluster
