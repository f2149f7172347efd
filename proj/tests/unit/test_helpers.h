#ifndef CBIAS_TESTS_HELPERS_H_
#define CBIAS_TESTS_HELPERS_H_

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "cbias/embedding.h"
#include "cbias/util.h"

namespace cbias::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name()
                                : std::string("cbias");
        path_ = std::filesystem::temp_directory_path() / ("cbias_" + name);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return CBIAS_DATA_DIR; }

// Hand-written model; counts descend from 100 in row order.
inline EmbeddingModel model_from(
    const std::vector<std::pair<std::string, std::vector<float>>> &rows) {
    Vocabulary v;
    std::vector<float> m;
    std::uint64_t c = 100;
    for (const auto &[w, r] : rows) {
        v.add(w, c--);
        m.insert(m.end(), r.begin(), r.end());
    }
    return EmbeddingModel(std::move(v), rows.front().second.size(), std::move(m));
}

}  // namespace cbias::testing

#endif  // CBIAS_TESTS_HELPERS_H_
