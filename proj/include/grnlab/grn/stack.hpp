// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grnlab/numerics/tensor.hpp"

namespace grnlab::grn {

enum class StackMode { Full, FirstLastK };

struct StackPolicy {
    StackMode mode = StackMode::Full;
    std::size_t k = 0;

    static StackPolicy full() { return {}; }
    static StackPolicy first_last(std::size_t k) { return {StackMode::FirstLastK, k}; }

    /// Stack width after `pushes` columns (the input counts as one push).
    std::size_t width_after(std::size_t pushes) const {
        if (mode == StackMode::Full) return pushes;
        return pushes < k + 2 ? pushes : k + 2;
    }
};

/// Layer outputs seen so far, oldest first: the model input, then block outputs.
///
/// In FirstLastK(k) mode the stack holds at most k + 2 columns: the input, a
/// running sum of every evicted block output, and the last k block outputs.
/// Until the window overflows the running-sum slot simply holds the first
/// block output, so the layout matches Full mode column for column.
///
/// Column must support an `add(Column, Column)` found by argument-dependent lookup.
template <class Column>
class LayerStack {
public:
    explicit LayerStack(StackPolicy policy = {}) : policy_(policy) {}

    void push(Column c) {
        if (!cols_.empty() && c.shape() != cols_.front().shape()) {
            throw ShapeError("layer stack: pushed column " + shape_string(c.shape()) + " does not match " +
                             shape_string(cols_.front().shape()));
        }
        ++pushes_;
        if (policy_.mode == StackMode::Full || cols_.size() < policy_.k + 2) {
            cols_.push_back(std::move(c));
            return;
        }
        if (policy_.k == 0) {
            cols_[1] = add(cols_[1], c);
            return;
        }
        // Oldest window entry (slot 2) folds into the running sum (slot 1).
        cols_[1] = add(cols_[1], cols_[2]);
        cols_.erase(cols_.begin() + 2);
        cols_.push_back(std::move(c));
    }

    std::span<const Column> columns() const noexcept { return cols_; }
    const Column& operator[](std::size_t j) const { return cols_.at(j); }
    const Column& back() const {
        if (cols_.empty()) throw std::logic_error("layer stack: empty");
        return cols_.back();
    }
    std::size_t width() const noexcept { return cols_.size(); }
    bool empty() const noexcept { return cols_.empty(); }
    /// Columns pushed so far, including any folded into the running sum.
    std::size_t pushes() const noexcept { return pushes_; }
    const StackPolicy& policy() const noexcept { return policy_; }
    /// True once at least one column has been folded.
    bool folded() const noexcept { return pushes_ > cols_.size(); }

private:
    StackPolicy policy_;
    std::vector<Column> cols_;
    std::size_t pushes_ = 0;
};

}  // namespace grnlab::grn
