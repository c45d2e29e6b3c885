// SPDX-License-Identifier: Apache-2.0
#include "grnlab/harness/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <regex>
#include <stdexcept>

namespace grnlab::harness {
namespace {

struct GrnName {
    std::string block;
    std::string role;
};

std::optional<GrnName> parse_grn_name(const std::string& name) {
    static const std::regex lm(R"(block(\d+)\.grn_([qkv])\.b)");
    static const std::regex lin(R"(grn(\d+)\.b)");
    std::smatch m;
    if (std::regex_match(name, m, lm)) return GrnName{m[1], m[2]};
    if (std::regex_match(name, m, lin)) return GrnName{m[1], "mix"};
    if (name == "final_grn.b" || name == "grn_out.b") return GrnName{"final", "out"};
    return std::nullopt;
}

}  // namespace

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty set");
    if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile q must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<WeightStat> weight_stats(std::span<const dca::CheckpointEntry> entries) {
    std::vector<WeightStat> out;
    for (const dca::CheckpointEntry& e : entries) {
        const auto id = parse_grn_name(e.name);
        if (!id) continue;
        const Tensor& b = e.value;
        if (b.rank() != 1 && b.rank() != 2) {
            throw std::invalid_argument("GRN weights '" + e.name + "' have rank " + std::to_string(b.rank()));
        }
        const std::size_t width = b.rank() == 1 ? b.size() : b.cols();
        const std::size_t rows = b.rank() == 1 ? 1 : b.rows();
        for (std::size_t j = 0; j < width; ++j) {
            std::vector<double> col(rows);
            for (std::size_t i = 0; i < rows; ++i) col[i] = b.rank() == 1 ? b[j] : b(i, j);
            WeightStat s{id->block, id->role, j, rows, 0.0, 0.0, 0.0};
            s.median = percentile(col, 50.0);
            s.p05 = percentile(col, 5.0);
            s.p95 = percentile(std::move(col), 95.0);
            out.push_back(std::move(s));
        }
    }
    if (out.empty()) throw std::invalid_argument("checkpoint contains no GRN weights");
    return out;
}

std::string weight_stats_csv(const std::vector<WeightStat>& stats) {
    std::string s = std::string(kWeightStatsHeader) + "\n";
    char buf[160];
    for (const WeightStat& w : stats) {
        std::snprintf(buf, sizeof buf, ",%zu,%zu,%.17g,%.17g,%.17g\n", w.column, w.count, w.median, w.p05, w.p95);
        s += w.block + "," + w.role + buf;
    }
    return s;
}

std::vector<WeightStat> dump_weights(const std::filesystem::path& checkpoint, const std::filesystem::path& csv) {
    const auto entries = dca::load_checkpoint(checkpoint);
    auto stats = weight_stats(entries);
    if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
    std::ofstream f(csv, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + csv.string());
    f << weight_stats_csv(stats);
    return stats;
}

theory::SweepGrid sweep_grid(const RunConfig& c) {
    return {c.sweep_d, c.sweep_r_star, c.sweep_kappa, c.sweep_lambda_max};
}

std::vector<theory::SweepRow> run_theory_sweep(const RunConfig& c) {
    validate(c);
    if (c.task != Task::TheorySweep) throw ConfigError("theory-sweep needs task theory_sweep, got " + to_string(c.task));
    auto rows = theory::gain_sweep(sweep_grid(c));
    if (!c.out_dir.empty()) {
        std::filesystem::create_directories(c.out_dir);
        std::ofstream f(std::filesystem::path(c.out_dir) / "sweep.csv", std::ios::trunc);
        f << theory::sweep_csv(rows);
        if (!f) throw std::runtime_error("cannot write sweep.csv under " + c.out_dir);
    }
    return rows;
}

}  // namespace grnlab::harness
