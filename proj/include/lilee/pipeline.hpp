#pragma once

#include "lilee/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lilee {

/// A configured run: stage outputs live under `output_dir`, and every file
/// carries the configuration hash.
class Pipeline {
public:
    explicit Pipeline(Config config);

    /// Stage names in execution order.
    static const std::vector<std::string> &stages();

    /// Runs one stage; throws if a prerequisite output is missing.
    void run(const std::string &stage);
    void run_all();

    const Config &config() const noexcept { return config_; }
    const std::filesystem::path &output_dir() const noexcept { return output_dir_; }
    const std::string &config_hash() const noexcept { return hash_; }

private:
    void ingest();
    void calibrate_baseline();
    void fit_seasonal();
    void calibrate_covid();
    void coda();
    void annualize();
    void forecast();
    void report();

    std::filesystem::path stage_dir(const std::string &name) const;
    std::filesystem::path require(const std::filesystem::path &path, const std::string &stage) const;

    Config config_;
    std::filesystem::path output_dir_;
    std::string hash_;
    std::vector<std::string> countries_;
};

} // namespace lilee
