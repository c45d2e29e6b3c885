// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grnlab/numerics/tensor.hpp"

namespace grnlab::ad {

/// A named trainable tensor. Models own their parameters; tapes only refer to them.
class Parameter {
public:
    Parameter(std::string name, Tensor value, bool decay = true)
        : name_(std::move(name)), value_(std::move(value)), decay_(decay) {}

    const std::string& name() const noexcept { return name_; }
    const Tensor& value() const noexcept { return value_; }
    Tensor& value() noexcept { return value_; }
    /// Whether decoupled weight decay applies.
    bool decay() const noexcept { return decay_; }

private:
    std::string name_;
    Tensor value_;
    bool decay_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const;
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Accumulates gradient contributions into a node's parents during backward.
class GradSink {
public:
    /// Gradient buffer for parent `k` (in the order passed to Tape::record),
    /// zero-initialised on first access.
    Tensor& parent(std::size_t k);

private:
    friend class Tape;
    GradSink(Tape& tape, const std::vector<std::size_t>& parents) : tape_(tape), parents_(parents) {}
    Tape& tape_;
    const std::vector<std::size_t>& parents_;
};

/// Receives the node's upstream gradient and pushes contributions to parents.
using BackwardFn = std::function<void(const Tensor& grad, GradSink& sink)>;

/// Parameter gradients in the order the parameters first appeared on the tape.
class GradientMap {
public:
    const Tensor* find(const Parameter& p) const;
    const std::vector<std::pair<const Parameter*, Tensor>>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    void add(const Parameter* p, Tensor g);
    /// Elementwise accumulation, creating the entry if needed.
    void accumulate(const Parameter* p, const Tensor& g);
    void scale_all(double s);

private:
    std::vector<std::pair<const Parameter*, Tensor>> entries_;
    std::unordered_map<const Parameter*, std::size_t> index_;
};

/// Append-only computation record. Node ids are a topological order by
/// construction, so backward is a reverse sweep. A tape is single-threaded.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Constant leaf; no gradient is tracked beyond the node itself.
    Var constant(Tensor value);
    /// Leaf whose gradient can be read back with grad().
    Var input(Tensor value);
    /// Leaf bound to a parameter. Repeated calls return the same node.
    Var param(const Parameter& p);

    /// Records an op result with its parents and backward rule.
    Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward, const char* op);

    /// Reverse sweep from a scalar loss with seed 1.
    GradientMap backward(Var loss);
    /// Reverse sweep seeded with `seed` (same shape as `out`). Gradients
    /// accumulate into existing slots; call zero_grads() between sweeps.
    GradientMap backward(Var out, const Tensor& seed);
    void zero_grads();

    /// Gradient of a node after backward; throws if none reached it.
    const Tensor& grad(Var v) const;
    bool has_grad(Var v) const;

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    const char* op(std::size_t id) const { return nodes_.at(id).op; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    friend class GradSink;

    struct Node {
        Tensor value;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        std::optional<Tensor> grad;
        const Parameter* param = nullptr;
        const char* op = "";
    };

    Tensor& grad_slot(std::size_t id);

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    std::vector<const Parameter*> param_order_;
};

}  // namespace grnlab::ad
