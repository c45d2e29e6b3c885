// SPDX-License-Identifier: Apache-2.0
#include "grnlab/harness/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace grnlab::harness {

nlohmann::ordered_json to_json(const MetricsRecord& r) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["loss"] = r.loss;
    if (r.wall_ms) j["wall_ms"] = *r.wall_ms;
    for (const auto& [k, v] : r.extra) j[k] = v;
    return j;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
}

void MetricsWriter::write(const MetricsRecord& r) {
    if (last_step_ && r.step <= *last_step_) {
        throw std::logic_error("metrics: step " + std::to_string(r.step) + " does not follow " +
                               std::to_string(*last_step_));
    }
    if (!std::isfinite(r.loss)) throw std::domain_error("metrics: non-finite loss at step " + std::to_string(r.step));
    for (const auto& [k, v] : r.extra) {
        if (!std::isfinite(v)) throw std::domain_error("metrics: non-finite '" + k + "' at step " + std::to_string(r.step));
    }
    out_ << to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("write failed for " + path_.string());
    last_step_ = r.step;
}

std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) break;  // no trailing newline: record was cut short
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

}  // namespace grnlab::harness
