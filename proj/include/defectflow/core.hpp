#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace defectflow {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Base of every error raised by the library. `kind()` is a stable tag used
// by the CLI for structured diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("DimensionMismatch", "dimension mismatch: expected " + std::to_string(expected) +
                                         ", got " + std::to_string(got)) {}
};

class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& where) : Error("EmptyInput", "empty input: " + where) {}
};

class NonFiniteValue : public Error {
public:
    NonFiniteValue(std::size_t row, std::size_t col)
        : Error("NonFiniteValue", "non-finite value at row " + std::to_string(row) + ", column " +
                                      std::to_string(col)),
          row(row), col(col) {}
    std::size_t row;
    std::size_t col;
};

class TooFewRows : public Error {
public:
    TooFewRows(std::size_t needed, std::size_t got)
        : Error("TooFewRows", "too few rows: needed " + std::to_string(needed) + ", got " +
                                  std::to_string(got)),
          needed(needed), got(got) {}
    std::size_t needed;
    std::size_t got;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("InvalidConfig", what) {}
};

// splitmix64 finalizer. All derived seeds in the library go through this so
// that per-unit streams (trees, restarts, entities) are fixed functions of
// the master seed and the unit index, independent of scheduling.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(seed ^ h);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Indices are dealt
// round-robin; callers write results into preallocated slots so
// the outcome never depends on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline void require_finite(const Matrix& x) {
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            if (!std::isfinite(x(r, c)))
                throw NonFiniteValue(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

}  // namespace defectflow
