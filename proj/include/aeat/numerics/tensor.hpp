#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aeat {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dense row-major 2-D array of doubles.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Tensor(std::size_t r, std::size_t c, std::initializer_list<double> values);

    std::size_t size() const { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    static Tensor identity(std::size_t n);
};

bool all_finite(const Tensor& t);

// Ordered name -> (value, grad) store. Iteration order is insertion order.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    Tensor& add(const std::string& name, Tensor value);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return entries_.size(); }
    std::size_t total_elements() const;
    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zero_grad();
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
    std::vector<double> flatten_grad() const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace aeat
