// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace grnlab::harness {

struct MetricsRecord {
    std::size_t step = 0;
    double loss = 0.0;
    std::optional<std::int64_t> wall_ms;
    /// Extra named values in insertion order (eval_loss, perplexity, lr, grad_norm, ...).
    std::vector<std::pair<std::string, double>> extra;
};

nlohmann::ordered_json to_json(const MetricsRecord& r);

/// Appends one JSON object per line and flushes after each, so a killed run
/// leaves a parseable prefix. Steps must strictly increase and every value
/// must be finite.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path);
    void write(const MetricsRecord& r);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::optional<std::size_t> last_step_;
};

/// Every complete line of a metrics file; a trailing partial line is ignored.
std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path);

}  // namespace grnlab::harness
