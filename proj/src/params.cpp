#include "fedtst/params.hpp"

#include "fedtst/errors.hpp"

namespace fedtst {

void ParamSet::add(std::string name, Tensor t) {
    if (name.empty()) throw ConfigError("parameter name must not be empty");
    auto [it, inserted] = items_.emplace(std::move(name), std::move(t));
    if (!inserted) throw ConfigError("duplicate parameter name: " + it->first);
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = items_.find(name);
    if (it == items_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

std::size_t ParamSet::element_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t.size();
    return n;
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [name, t] : items_) out.push_back(name);
    return out;
}

std::vector<double> ParamSet::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(element_count());
    for (const auto& [name, t] : items_) {
        auto v = t.values();
        flat.insert(flat.end(), v.begin(), v.end());
    }
    return flat;
}

std::vector<double> ParamSet::flatten_grads() const {
    std::vector<double> flat;
    flat.reserve(element_count());
    for (const auto& [name, t] : items_) {
        if (t.has_grad()) {
            auto g = t.grad();
            flat.insert(flat.end(), g.begin(), g.end());
        } else {
            flat.insert(flat.end(), t.size(), 0.0);
        }
    }
    return flat;
}

void ParamSet::load_values(std::span<const double> flat) {
    if (flat.size() != element_count())
        throw DimensionError("flat vector has " + std::to_string(flat.size()) +
                             " elements, parameters have " + std::to_string(element_count()));
    std::size_t off = 0;
    for (auto& [name, t] : items_) {
        auto v = t.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = flat[off + i];
        off += v.size();
    }
}

void ParamSet::load_grads(std::span<const double> flat) {
    if (flat.size() != element_count())
        throw DimensionError("flat vector has " + std::to_string(flat.size()) +
                             " elements, parameters have " + std::to_string(element_count()));
    std::size_t off = 0;
    for (auto& [name, t] : items_) {
        auto g = t.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = flat[off + i];
        off += g.size();
    }
}

void ParamSet::zero_grads() {
    for (auto& [name, t] : items_) t.zero_grad();
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (const auto& [name, t] : items_) out.add(name, t.clone());
    return out;
}

}  // namespace fedtst
