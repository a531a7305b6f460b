#pragma once

// Reverse-mode automatic differentiation over dense 2-D tensors.
//
// A Tape records every operation of one forward pass in creation order; the
// backward sweep walks it in reverse. Parameters enter through Tape::param and
// their gradients are accumulated into the owning ParamStore.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aeat/numerics/tensor.hpp"

namespace aeat::ad {

class Tape;

class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    // Gradient after Tape::backward; empty tensor if nothing flowed here.
    const Tensor& grad() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var leaf(Tensor value);
    // References the stored tensor (no copy); the store must outlive the tape.
    Var param(ParamStore& store, const std::string& name);

    void backward(Var loss);
    std::size_t size() const { return nodes_.size(); }

    // Operation plumbing.
    Var push(Tensor value, bool requires_grad, BackwardFn fn);
    const Tensor& value(std::size_t id) const;
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    // Zero-initialised on first access.
    Tensor& grad_acc(std::size_t id);

private:
    struct Node {
        Tensor own;
        const Tensor* ref = nullptr;
        Tensor grad;
        Tensor* sink = nullptr;
        bool requires_grad = false;
        BackwardFn backward_fn;
    };
    std::vector<Node> nodes_;
};

// Linear algebra and structure.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (r x c) + bias (1 x c) broadcast over rows.
Var add_row(Var a, Var bias);
// a (k*p x c) + table (p x c) added to each consecutive block of p rows.
Var add_tiled(Var a, Var table);
Var scale(Var a, double s);
Var transpose(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);

// Elementwise.
Var relu(Var a);
Var sigmoid(Var a);

// Row-wise normalisations.
Var row_softmax(Var x, double scale);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

// Multi-head scaled dot-product attention, batched over independent blocks.
// q holds B*q_block rows, k and v hold B*k_block rows; all have width d with
// d divisible by heads. Block b of q attends only to block b of k/v. When
// weights_out is given it receives the attention matrices, one row per
// (block, head, query) in that order, each of width k_block.
Var attention(Var q, Var k, Var v, std::size_t q_block, std::size_t k_block,
              std::size_t heads, Tensor* weights_out = nullptr);

// y[r] = x[r] * row_scale[r / block_rows] + addend[r]; addend may be empty.
Var scale_blocks_add(Var x, std::span<const double> block_scale, std::size_t block_rows,
                     const Tensor& addend);

// Losses (1 x 1 results).
Var bce_loss(Var pred, const Tensor& target, double clamp = 1e-7);
Var mse_loss(Var pred, const Tensor& target);
// out[i] = a[i, index[i]]
Var gather_cols(Var a, std::span<const std::size_t> index);
// mean_i w_i (target_i - pred_i)^2 for a column vector pred.
Var weighted_sq_error(Var pred, std::span<const double> target, std::span<const double> weight);
Var mean(Var a);

}  // namespace aeat::ad
