#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedtst/tensor.hpp"

namespace fedtst {

/// Ordered collection of named tensors. Iteration, flattening, and
/// serialization all use canonical order — names sorted lexicographically —
/// so two parties that agree on the names flatten to identical vectors.
class ParamSet {
public:
    void add(std::string name, Tensor t);

    bool contains(const std::string& name) const { return items_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::size_t tensor_count() const { return items_.size(); }
    std::size_t element_count() const;

    /// Names in canonical (sorted) order.
    std::vector<std::string> names() const;

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    /// Values of all tensors concatenated in canonical order.
    std::vector<double> flatten_values() const;

    /// Gradients concatenated in canonical order (zeros for tensors without
    /// an allocated gradient buffer).
    std::vector<double> flatten_grads() const;

    /// Overwrites values from a flat vector in canonical order.
    void load_values(std::span<const double> flat);

    /// Overwrites gradient buffers from a flat vector in canonical order.
    void load_grads(std::span<const double> flat);

    void zero_grads();

    /// Deep copy of all tensors (values only).
    ParamSet clone() const;

private:
    // std::map keeps keys sorted, which *is* the canonical order.
    std::map<std::string, Tensor> items_;
};

}  // namespace fedtst
