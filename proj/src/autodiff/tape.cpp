// SPDX-License-Identifier: Apache-2.0
#include "grnlab/autodiff/tape.hpp"

#include <stdexcept>

namespace grnlab::ad {

const Tensor& Var::value() const {
    if (!tape_) throw std::logic_error("var: use of an unbound variable");
    return tape_->value(id_);
}

Tape& Var::tape() const {
    if (!tape_) throw std::logic_error("var: use of an unbound variable");
    return *tape_;
}

Tensor& GradSink::parent(std::size_t k) { return tape_.grad_slot(parents_.at(k)); }

const Tensor* GradientMap::find(const Parameter& p) const {
    const auto it = index_.find(&p);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
}

void GradientMap::add(const Parameter* p, Tensor g) {
    if (index_.count(p)) throw std::logic_error("gradient map: duplicate entry for " + p->name());
    index_.emplace(p, entries_.size());
    entries_.emplace_back(p, std::move(g));
}

void GradientMap::accumulate(const Parameter* p, const Tensor& g) {
    const auto it = index_.find(p);
    if (it == index_.end()) {
        add(p, g);
        return;
    }
    add_inplace(entries_[it->second].second, g);
}

void GradientMap::scale_all(double s) {
    for (auto& [p, g] : entries_) {
        for (double& v : g.values()) v *= s;
    }
}

Var Tape::constant(Tensor value) { return record(std::move(value), {}, nullptr, "constant"); }

Var Tape::input(Tensor value) { return record(std::move(value), {}, nullptr, "input"); }

Var Tape::param(const Parameter& p) {
    if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    Var v = record(p.value(), {}, nullptr, "param");
    nodes_[v.id()].param = &p;
    param_nodes_.emplace(&p, v.id());
    param_order_.push_back(&p);
    return v;
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward, const char* op) {
    for (std::size_t p : parents) {
        if (p >= nodes_.size()) throw std::logic_error("tape: parent id out of range");
    }
    nodes_.push_back(Node{std::move(value), std::move(parents), std::move(backward), std::nullopt, nullptr, op});
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.grad) n.grad = Tensor(n.value.shape());
    return *n.grad;
}

GradientMap Tape::backward(Var loss) {
    if (loss.value().size() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + shape_string(loss.shape()));
    }
    return backward(loss, Tensor(loss.shape(), 1.0));
}

GradientMap Tape::backward(Var out, const Tensor& seed) {
    if (&out.tape() != this) throw std::logic_error("backward: variable belongs to another tape");
    require_same_shape(out.value(), seed, "backward seed");
    add_inplace(grad_slot(out.id()), seed);
    for (std::size_t id = out.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.grad || !n.backward) continue;
        GradSink sink(*this, n.parents);
        // Parents always have smaller ids, so this node's grad is not written here.
        n.backward(*n.grad, sink);
    }
    GradientMap grads;
    for (const Parameter* p : param_order_) {
        const Node& n = nodes_[param_nodes_.at(p)];
        grads.add(p, n.grad ? *n.grad : Tensor(n.value.shape()));
    }
    return grads;
}

void Tape::zero_grads() {
    for (Node& n : nodes_) n.grad.reset();
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id());
    if (!n.grad) throw std::logic_error(std::string("tape: no gradient reached node '") + n.op + "'");
    return *n.grad;
}

bool Tape::has_grad(Var v) const { return nodes_.at(v.id()).grad.has_value(); }

}  // namespace grnlab::ad
