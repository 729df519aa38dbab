#pragma once

#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "defectflow/corpus.hpp"
#include "defectflow/date.hpp"

namespace testing_support {

using namespace defectflow;

inline Date day(const char* s) { return *parse_date(s); }

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("defectflow_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline corpus::CommitRecord commit(std::string id, std::string feature, const char* date, std::string system,
                                   std::string subsystem, long files, long added = 10, long removed = 2,
                                   long modified = 3) {
    return {std::move(id), std::move(feature), day(date), std::move(system), std::move(subsystem),
            files, added, removed, modified};
}

// Two releases, three features, four commits, five reports.
inline corpus::CorpusBundle tiny_bundle() {
    corpus::CorpusBundle b;
    b.releases = {{"R1", day("2020-03-01")}, {"R2", day("2020-06-01")}};
    b.features = {{"F1", day("2020-02-10"), 30, {}}, {"F2", day("2020-02-20"), 50, {}}, {"F3", day("2020-05-01"), 70, {}}};
    b.commits = {commit("C1", "F1", "2020-02-01", "SYS_A", "SUB_01", 3),
                 commit("C2", "F1", "2020-02-10", "SYS_B", "SUB_02", 2),
                 commit("C3", "F2", "2020-02-20", "SYS_A", "SUB_01", 5),
                 commit("C4", "F3", "2020-05-01", "SYS_B", "SUB_03", 1)};
    b.trouble_reports = {{"T1", day("2020-02-15"), "R1", 2},
                         {"T2", day("2020-03-10"), "R1", 3},
                         {"T3", day("2020-04-02"), "R1", 4},
                         {"T4", day("2020-05-20"), "R2", 2},
                         {"T5", day("2020-07-01"), "R2", 1}};
    return b;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace testing_support
