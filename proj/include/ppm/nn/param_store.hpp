#pragma once

#include <map>
#include <string>

#include "ppm/nn/tensor.hpp"

namespace ppm::nn {

// Named trainable parameters (or non-trainable buffers, when constructed
// with requires_grad = false). Names are hierarchical, e.g.
// backbone/enc0/mha/wq; iteration order is the sorted name order, which
// serialization and the optimizer rely on for determinism.
class ParamStore {
public:
    Tensor create(const std::string& name, int rows, int cols, bool requires_grad = true) {
        if (entries_.count(name))
            throw InternalError("ParamStore: duplicate parameter name " + name);
        Tensor t = Tensor::zeros(rows, cols, requires_grad);
        entries_.emplace(name, t);
        return t;
    }

    void put(const std::string& name, Tensor t) {
        if (entries_.count(name))
            throw InternalError("ParamStore: duplicate parameter name " + name);
        entries_.emplace(name, std::move(t));
    }

    Tensor& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw InternalError("ParamStore: unknown parameter " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw InternalError("ParamStore: unknown parameter " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::size_t size() const { return entries_.size(); }

    long long count_params() const {
        long long n = 0;
        for (const auto& [name, t] : entries_) n += t.size();
        return n;
    }

    void zero_grad() {
        for (auto& [name, t] : entries_) t.zero_grad();
    }

    std::map<std::string, Tensor>& entries() { return entries_; }
    const std::map<std::string, Tensor>& entries() const { return entries_; }

private:
    std::map<std::string, Tensor> entries_;
};

}  // namespace ppm::nn
