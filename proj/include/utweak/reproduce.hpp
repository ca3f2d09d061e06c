#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "utweak/noise.hpp"

namespace utweak {

struct ReproduceOptions {
    std::optional<double> delta;  // main simulation step
    std::optional<long> paths;    // Monte Carlo paths
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;
    std::filesystem::path out = "out";
};

struct ReproduceResult {
    nlohmann::json summary;
    std::vector<std::string> files;  // relative to the output directory
    bool passed = true;
};

/// Runs the scripted experiment for a builtin example, writes one CSV per
/// curve plus summary.json into options.out, and reports its checks.
ReproduceResult reproduce(const std::string& name, const ReproduceOptions& options);

}  // namespace utweak
