#include "aeat/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace aeat {

Tensor::Tensor(std::size_t r, std::size_t c, std::initializer_list<double> values)
    : rows(r), cols(c), data(values) {
    if (data.size() != r * c) {
        throw ShapeError("Tensor: initializer length does not match shape");
    }
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

bool all_finite(const Tensor& t) {
    return std::all_of(t.data.begin(), t.data.end(), [](double v) { return std::isfinite(v); });
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
    if (contains(name)) {
        throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
    }
    index_[name] = entries_.size();
    Tensor grad(value.rows, value.cols);
    entries_.push_back({name, std::move(value), std::move(grad)});
    return entries_.back().value;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return entries_[it->second].value;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return entries_[it->second].value;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return entries_[it->second].grad;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return entries_[it->second].grad;
}

std::size_t ParamStore::total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

std::vector<double> ParamStore::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_elements());
    for (const auto& e : entries_) flat.insert(flat.end(), e.value.data.begin(), e.value.data.end());
    return flat;
}

std::vector<double> ParamStore::flatten_grad() const {
    std::vector<double> flat;
    flat.reserve(total_elements());
    for (const auto& e : entries_) flat.insert(flat.end(), e.grad.data.begin(), e.grad.data.end());
    return flat;
}

void ParamStore::unflatten(std::span<const double> flat) {
    if (flat.size() != total_elements()) {
        throw ShapeError("ParamStore::unflatten: length mismatch");
    }
    std::size_t off = 0;
    for (auto& e : entries_) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), e.value.size(), e.value.data.begin());
        off += e.value.size();
    }
}

}  // namespace aeat
