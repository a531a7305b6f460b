#include "aeat/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aeat::ad {

namespace {

// Fixed-order kernels: every output element sums over k in ascending order,
// so results do not depend on operand alignment or vector width.

Tensor transposed(const Tensor& a) {
    Tensor t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) t.data[j * a.rows + i] = a.data[i * a.cols + j];
    }
    return t;
}

// C += A B. Register tiles of 4 x 32; each element accumulates k in order.
void gemm_nn(const Tensor& A, const Tensor& B, Tensor& C) {
    constexpr std::size_t MR = 4, NR = 32;
    const std::size_t m = A.rows, n = B.cols, kk = A.cols;
    const double* a = A.data.data();
    const double* b = B.data.data();
    double* c = C.data.data();
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
        std::size_t j = 0;
        for (; j + NR <= n; j += NR) {
            double acc[MR][NR];
            for (std::size_t r = 0; r < MR; ++r) {
                for (std::size_t q = 0; q < NR; ++q) acc[r][q] = c[(i + r) * n + j + q];
            }
            for (std::size_t k = 0; k < kk; ++k) {
                const double* bk = b + k * n + j;
                for (std::size_t r = 0; r < MR; ++r) {
                    const double av = a[(i + r) * kk + k];
                    for (std::size_t q = 0; q < NR; ++q) acc[r][q] += av * bk[q];
                }
            }
            for (std::size_t r = 0; r < MR; ++r) {
                for (std::size_t q = 0; q < NR; ++q) c[(i + r) * n + j + q] = acc[r][q];
            }
        }
        if (j < n) {
            for (std::size_t r = 0; r < MR; ++r) {
                double* cr = c + (i + r) * n;
                for (std::size_t k = 0; k < kk; ++k) {
                    const double av = a[(i + r) * kk + k];
                    for (std::size_t q = j; q < n; ++q) cr[q] += av * b[k * n + q];
                }
            }
        }
    }
    for (; i < m; ++i) {
        double* cr = c + i * n;
        for (std::size_t k = 0; k < kk; ++k) {
            const double av = a[i * kk + k];
            for (std::size_t q = 0; q < n; ++q) cr[q] += av * b[k * n + q];
        }
    }
}

// C += A^T B
void gemm_tn(const Tensor& A, const Tensor& B, Tensor& C) { gemm_nn(transposed(A), B, C); }

void require(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

Tape& same_tape(Var a, Var b) {
    if (a.tape() != b.tape()) throw std::logic_error("autodiff: operands live on different tapes");
    return *a.tape();
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.own;
}

Tensor& Tape::grad_acc(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 && value(id).size() != 0) {
        const Tensor& v = value(id);
        n.grad = Tensor(v.rows, v.cols);
    }
    return n.grad;
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.own = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward_fn = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::param(ParamStore& store, const std::string& name) {
    Node n;
    n.ref = &store.at(name);
    n.sink = &store.grad(name);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
    if (loss.tape() != this) throw std::logic_error("Tape::backward: loss belongs to another tape");
    const Tensor& lv = value(loss.id());
    if (lv.rows != 1 || lv.cols != 1) {
        throw std::logic_error("Tape::backward: loss must be a 1x1 scalar");
    }
    grad_acc(loss.id()).data[0] += 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward_fn) n.backward_fn(*this, i);
        if (n.sink) {
            auto& s = n.sink->data;
            for (std::size_t j = 0; j < s.size(); ++j) s[j] += n.grad.data[j];
        }
    }
}

Var matmul(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.cols == B.rows, "matmul: inner dimensions differ");
    Tensor C(A.rows, B.cols);
    gemm_nn(A, B, C);
    const std::size_t ia = a.id(), ib = b.id();
    return t.push(std::move(C), t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad(self);
                      if (tp.requires_grad(ia)) {
                          Tensor& ga = tp.grad_acc(ia);
                          gemm_nn(g, transposed(tp.value(ib)), ga);
                      }
                      if (tp.requires_grad(ib)) {
                          Tensor& gb = tp.grad_acc(ib);
                          gemm_tn(tp.value(ia), g, gb);
                      }
                  });
}

Var add(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require(a.value().same_shape(b.value()), "add: shape mismatch");
    Tensor c = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.push(std::move(c), t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib](Tape& tp, std::size_t self) {
                      for (std::size_t in : {ia, ib}) {
                          if (!tp.requires_grad(in)) continue;
                          auto& g = tp.grad_acc(in).data;
                          const auto& go = tp.grad(self).data;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
                      }
                  });
}

Var add_row(Var a, Var bias) {
    Tape& t = same_tape(a, bias);
    const Tensor& bv = bias.value();
    require(bv.rows == 1 && bv.cols == a.cols(), "add_row: bias must be 1 x cols");
    Tensor c = a.value();
    for (std::size_t r = 0; r < c.rows; ++r) {
        auto row = c.row(r);
        for (std::size_t j = 0; j < c.cols; ++j) row[j] += bv.data[j];
    }
    const std::size_t ia = a.id(), ib = bias.id();
    return t.push(std::move(c), t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib](Tape& tp, std::size_t self) {
                      const Tensor& go = tp.grad(self);
                      if (tp.requires_grad(ia)) {
                          auto& g = tp.grad_acc(ia).data;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += go.data[i];
                      }
                      if (tp.requires_grad(ib)) {
                          auto& g = tp.grad_acc(ib).data;
                          for (std::size_t r = 0; r < go.rows; ++r) {
                              auto row = go.row(r);
                              for (std::size_t j = 0; j < go.cols; ++j) g[j] += row[j];
                          }
                      }
                  });
}

Var add_tiled(Var a, Var table) {
    Tape& t = same_tape(a, table);
    const Tensor& tv = table.value();
    require(tv.cols == a.cols() && tv.rows > 0 && a.rows() % tv.rows == 0,
            "add_tiled: table must tile the rows of the input");
    Tensor c = a.value();
    const std::size_t period = tv.size();
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += tv.data[i % period];
    const std::size_t ia = a.id(), it = table.id();
    return t.push(std::move(c), t.requires_grad(ia) || t.requires_grad(it),
                  [ia, it, period](Tape& tp, std::size_t self) {
                      const auto& go = tp.grad(self).data;
                      if (tp.requires_grad(ia)) {
                          auto& g = tp.grad_acc(ia).data;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
                      }
                      if (tp.requires_grad(it)) {
                          auto& g = tp.grad_acc(it).data;
                          for (std::size_t i = 0; i < go.size(); ++i) g[i % period] += go[i];
                      }
                  });
}

Var scale(Var a, double s) {
    Tape& t = *a.tape();
    Tensor c = a.value();
    for (auto& v : c.data) v *= s;
    const std::size_t ia = a.id();
    return t.push(std::move(c), t.requires_grad(ia), [ia, s](Tape& tp, std::size_t self) {
        auto& g = tp.grad_acc(ia).data;
        const auto& go = tp.grad(self).data;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * go[i];
    });
}

Var transpose(Var a) {
    Tape& t = *a.tape();
    const Tensor& av = a.value();
    Tensor c = transposed(av);
    const std::size_t ia = a.id();
    return t.push(std::move(c), t.requires_grad(ia), [ia](Tape& tp, std::size_t self) {
        const Tensor gt = transposed(tp.grad(self));
        Tensor& ga = tp.grad_acc(ia);
        for (std::size_t i = 0; i < gt.size(); ++i) ga.data[i] += gt.data[i];
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    Tape& t = *a.tape();
    const Tensor& av = a.value();
    require(begin + count <= av.cols, "slice_cols: range out of bounds");
    Tensor c(av.rows, count);
    for (std::size_t r = 0; r < av.rows; ++r) {
        std::copy_n(av.row(r).begin() + static_cast<std::ptrdiff_t>(begin), count, c.row(r).begin());
    }
    const std::size_t ia = a.id();
    return t.push(std::move(c), t.requires_grad(ia), [ia, begin, count](Tape& tp, std::size_t self) {
        Tensor& g = tp.grad_acc(ia);
        const Tensor& go = tp.grad(self);
        for (std::size_t r = 0; r < go.rows; ++r) {
            for (std::size_t j = 0; j < count; ++j) g(r, begin + j) += go(r, j);
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    Tape& t = *parts.front().tape();
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    bool needs = false;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        require(p.rows() == rows, "concat_cols: row counts differ");
        if (p.tape() != &t) throw std::logic_error("concat_cols: operands live on different tapes");
        cols += p.cols();
        needs = needs || t.requires_grad(p.id());
        ids.push_back(p.id());
    }
    Tensor c(rows, cols);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy(pv.row(r).begin(), pv.row(r).end(), c.row(r).begin() + static_cast<std::ptrdiff_t>(off));
        }
        off += pv.cols;
    }
    return t.push(std::move(c), needs, [ids](Tape& tp, std::size_t self) {
        const Tensor& go = tp.grad(self);
        std::size_t off = 0;
        for (std::size_t id : ids) {
            const std::size_t w = tp.value(id).cols;
            if (tp.requires_grad(id)) {
                Tensor& g = tp.grad_acc(id);
                for (std::size_t r = 0; r < go.rows; ++r) {
                    for (std::size_t j = 0; j < w; ++j) g(r, j) += go(r, off + j);
                }
            }
            off += w;
        }
    });
}

Var relu(Var a) {
    Tape& t = *a.tape();
    Tensor c = a.value();
    for (auto& v : c.data) v = v > 0.0 ? v : 0.0;
    const std::size_t ia = a.id();
    return t.push(std::move(c), t.requires_grad(ia), [ia](Tape& tp, std::size_t self) {
        auto& g = tp.grad_acc(ia).data;
        const auto& x = tp.value(ia).data;
        const auto& go = tp.grad(self).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] > 0.0) g[i] += go[i];
        }
    });
}

Var sigmoid(Var a) {
    Tape& t = *a.tape();
    Tensor c = a.value();
    for (auto& v : c.data) v = 1.0 / (1.0 + std::exp(-v));
    const std::size_t ia = a.id();
    return t.push(std::move(c), t.requires_grad(ia), [ia](Tape& tp, std::size_t self) {
        auto& g = tp.grad_acc(ia).data;
        const auto& y = tp.value(self).data;
        const auto& go = tp.grad(self).data;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * y[i] * (1.0 - y[i]);
    });
}

Var row_softmax(Var x, double s) {
    Tape& t = *x.tape();
    Tensor y = x.value();
    for (std::size_t r = 0; r < y.rows; ++r) {
        auto row = y.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (auto& v : row) {
            v = std::exp(s * (v - mx));
            sum += v;
        }
        for (auto& v : row) v /= sum;
    }
    const std::size_t ix = x.id();
    return t.push(std::move(y), t.requires_grad(ix), [ix, s](Tape& tp, std::size_t self) {
        Tensor& g = tp.grad_acc(ix);
        const Tensor& yv = tp.value(self);
        const Tensor& go = tp.grad(self);
        for (std::size_t r = 0; r < yv.rows; ++r) {
            auto yr = yv.row(r);
            auto gr = go.row(r);
            double dot = 0.0;
            for (std::size_t j = 0; j < yv.cols; ++j) dot += gr[j] * yr[j];
            auto out = g.row(r);
            for (std::size_t j = 0; j < yv.cols; ++j) out[j] += s * yr[j] * (gr[j] - dot);
        }
    });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    Tape& t = same_tape(x, gain);
    same_tape(x, bias);
    const Tensor& xv = x.value();
    const std::size_t n = xv.cols;
    require(gain.value().size() == n && bias.value().size() == n,
            "layer_norm: gain/bias length must equal column count");
    Tensor xhat(xv.rows, n);
    std::vector<double> inv(xv.rows);
    Tensor y(xv.rows, n);
    const auto& gv = gain.value().data;
    const auto& bv = bias.value().data;
    for (std::size_t r = 0; r < xv.rows; ++r) {
        auto xr = xv.row(r);
        double mu = 0.0;
        for (double v : xr) mu += v;
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (double v : xr) var += (v - mu) * (v - mu);
        var /= static_cast<double>(n);
        inv[r] = 1.0 / std::sqrt(var + eps);
        auto hr = xhat.row(r);
        auto yr = y.row(r);
        for (std::size_t j = 0; j < n; ++j) {
            hr[j] = (xr[j] - mu) * inv[r];
            yr[j] = hr[j] * gv[j] + bv[j];
        }
    }
    const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
    const bool needs = t.requires_grad(ix) || t.requires_grad(ig) || t.requires_grad(ib);
    return t.push(std::move(y), needs,
                  [ix, ig, ib, xhat = std::move(xhat), inv = std::move(inv)](Tape& tp, std::size_t self) {
                      const Tensor& go = tp.grad(self);
                      const std::size_t n = go.cols;
                      if (tp.requires_grad(ig)) {
                          auto& g = tp.grad_acc(ig).data;
                          for (std::size_t r = 0; r < go.rows; ++r) {
                              for (std::size_t j = 0; j < n; ++j) g[j] += go(r, j) * xhat(r, j);
                          }
                      }
                      if (tp.requires_grad(ib)) {
                          auto& g = tp.grad_acc(ib).data;
                          for (std::size_t r = 0; r < go.rows; ++r) {
                              for (std::size_t j = 0; j < n; ++j) g[j] += go(r, j);
                          }
                      }
                      if (tp.requires_grad(ix)) {
                          const auto& gv = tp.value(ig).data;
                          Tensor& gx = tp.grad_acc(ix);
                          std::vector<double> dh(n);
                          for (std::size_t r = 0; r < go.rows; ++r) {
                              double m1 = 0.0, m2 = 0.0;
                              for (std::size_t j = 0; j < n; ++j) {
                                  dh[j] = go(r, j) * gv[j];
                                  m1 += dh[j];
                                  m2 += dh[j] * xhat(r, j);
                              }
                              m1 /= static_cast<double>(n);
                              m2 /= static_cast<double>(n);
                              for (std::size_t j = 0; j < n; ++j) {
                                  gx(r, j) += inv[r] * (dh[j] - m1 - xhat(r, j) * m2);
                              }
                          }
                      }
                  });
}

Var attention(Var q, Var k, Var v, std::size_t q_block, std::size_t k_block, std::size_t heads,
              Tensor* weights_out) {
    Tape& t = same_tape(q, k);
    same_tape(q, v);
    const Tensor& Q = q.value();
    const Tensor& K = k.value();
    const Tensor& V = v.value();
    const std::size_t d = Q.cols;
    require(heads > 0 && d % heads == 0, "attention: width not divisible by head count");
    require(K.cols == d && V.cols == d, "attention: q/k/v widths differ");
    require(q_block > 0 && k_block > 0 && Q.rows % q_block == 0, "attention: bad query blocking");
    const std::size_t blocks = Q.rows / q_block;
    require(K.rows == blocks * k_block && V.rows == K.rows, "attention: key/value block count mismatch");
    const std::size_t dk = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dk));

    // weights laid out [block][head][query][key]
    Tensor A(blocks * heads * q_block, k_block);
    Tensor O(Q.rows, d);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * dk;
            for (std::size_t i = 0; i < q_block; ++i) {
                const double* qi = &Q.data[(b * q_block + i) * d + c0];
                double* ar = &A.data[((b * heads + h) * q_block + i) * k_block];
                double mx = -INFINITY;
                for (std::size_t j = 0; j < k_block; ++j) {
                    const double* kj = &K.data[(b * k_block + j) * d + c0];
                    double s = 0.0;
                    for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
                    ar[j] = s * sc;
                    mx = std::max(mx, ar[j]);
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < k_block; ++j) {
                    ar[j] = std::exp(ar[j] - mx);
                    sum += ar[j];
                }
                for (std::size_t j = 0; j < k_block; ++j) ar[j] /= sum;
                double* oi = &O.data[(b * q_block + i) * d + c0];
                for (std::size_t j = 0; j < k_block; ++j) {
                    const double* vj = &V.data[(b * k_block + j) * d + c0];
                    for (std::size_t c = 0; c < dk; ++c) oi[c] += ar[j] * vj[c];
                }
            }
        }
    }
    if (weights_out) *weights_out = A;

    const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
    const bool needs = t.requires_grad(iq) || t.requires_grad(ik) || t.requires_grad(iv);
    return t.push(
        std::move(O), needs,
        [iq, ik, iv, q_block, k_block, heads, blocks, dk, sc, A = std::move(A)](Tape& tp, std::size_t self) {
            const Tensor& G = tp.grad(self);
            const Tensor& Q = tp.value(iq);
            const Tensor& K = tp.value(ik);
            const Tensor& V = tp.value(iv);
            const std::size_t d = Q.cols;
            Tensor& gQ = tp.grad_acc(iq);
            Tensor& gK = tp.grad_acc(ik);
            Tensor& gV = tp.grad_acc(iv);
            std::vector<double> dA(k_block);
            for (std::size_t b = 0; b < blocks; ++b) {
                for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t c0 = h * dk;
                    for (std::size_t i = 0; i < q_block; ++i) {
                        const double* gi = &G.data[(b * q_block + i) * d + c0];
                        const double* ar = &A.data[((b * heads + h) * q_block + i) * k_block];
                        double dot = 0.0;
                        for (std::size_t j = 0; j < k_block; ++j) {
                            const double* vj = &V.data[(b * k_block + j) * d + c0];
                            double* gvj = &gV.data[(b * k_block + j) * d + c0];
                            double s = 0.0;
                            for (std::size_t c = 0; c < dk; ++c) {
                                s += gi[c] * vj[c];
                                gvj[c] += ar[j] * gi[c];
                            }
                            dA[j] = s;
                            dot += s * ar[j];
                        }
                        const double* qi = &Q.data[(b * q_block + i) * d + c0];
                        double* gqi = &gQ.data[(b * q_block + i) * d + c0];
                        for (std::size_t j = 0; j < k_block; ++j) {
                            const double ds = ar[j] * (dA[j] - dot) * sc;
                            if (ds == 0.0) continue;
                            const double* kj = &K.data[(b * k_block + j) * d + c0];
                            double* gkj = &gK.data[(b * k_block + j) * d + c0];
                            for (std::size_t c = 0; c < dk; ++c) {
                                gqi[c] += ds * kj[c];
                                gkj[c] += ds * qi[c];
                            }
                        }
                    }
                }
            }
        });
}

Var scale_blocks_add(Var x, std::span<const double> block_scale, std::size_t block_rows,
                     const Tensor& addend) {
    Tape& t = *x.tape();
    const Tensor& xv = x.value();
    require(block_rows > 0 && xv.rows == block_scale.size() * block_rows,
            "scale_blocks_add: one scale per block of rows required");
    require(addend.size() == 0 || addend.same_shape(xv), "scale_blocks_add: addend shape mismatch");
    Tensor y = xv;
    std::vector<double> s(block_scale.begin(), block_scale.end());
    for (std::size_t r = 0; r < y.rows; ++r) {
        auto row = y.row(r);
        for (std::size_t j = 0; j < y.cols; ++j) {
            row[j] *= s[r / block_rows];
            if (addend.size()) row[j] += addend(r, j);
        }
    }
    const std::size_t ix = x.id();
    return t.push(std::move(y), t.requires_grad(ix),
                  [ix, block_rows, s = std::move(s)](Tape& tp, std::size_t self) {
                      Tensor& g = tp.grad_acc(ix);
                      const Tensor& go = tp.grad(self);
                      for (std::size_t r = 0; r < go.rows; ++r) {
                          const double sr = s[r / block_rows];
                          for (std::size_t j = 0; j < go.cols; ++j) g(r, j) += sr * go(r, j);
                      }
                  });
}

Var bce_loss(Var pred, const Tensor& target, double clamp) {
    Tape& t = *pred.tape();
    const Tensor& p = pred.value();
    require(p.same_shape(target), "bce_loss: shape mismatch");
    const double n = static_cast<double>(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pc = std::clamp(p.data[i], clamp, 1.0 - clamp);
        const double tg = target.data[i];
        sum -= tg * std::log(pc) + (1.0 - tg) * std::log(1.0 - pc);
    }
    const std::size_t ip = pred.id();
    return t.push(Tensor(1, 1, {sum / n}), t.requires_grad(ip),
                  [ip, target, clamp, n](Tape& tp, std::size_t self) {
                      const double go = tp.grad(self).data[0];
                      const auto& p = tp.value(ip).data;
                      auto& g = tp.grad_acc(ip).data;
                      for (std::size_t i = 0; i < p.size(); ++i) {
                          if (p[i] < clamp || p[i] > 1.0 - clamp) continue;
                          const double tg = target.data[i];
                          g[i] += go * (-tg / p[i] + (1.0 - tg) / (1.0 - p[i])) / n;
                      }
                  });
}

Var mse_loss(Var pred, const Tensor& target) {
    Tape& t = *pred.tape();
    const Tensor& p = pred.value();
    require(p.same_shape(target), "mse_loss: shape mismatch");
    const double n = static_cast<double>(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = p.data[i] - target.data[i];
        sum += e * e;
    }
    const std::size_t ip = pred.id();
    return t.push(Tensor(1, 1, {sum / n}), t.requires_grad(ip), [ip, target, n](Tape& tp, std::size_t self) {
        const double go = tp.grad(self).data[0];
        const auto& p = tp.value(ip).data;
        auto& g = tp.grad_acc(ip).data;
        for (std::size_t i = 0; i < p.size(); ++i) g[i] += go * 2.0 * (p[i] - target.data[i]) / n;
    });
}

Var gather_cols(Var a, std::span<const std::size_t> index) {
    Tape& t = *a.tape();
    const Tensor& av = a.value();
    require(index.size() == av.rows, "gather_cols: one index per row required");
    Tensor out(av.rows, 1);
    std::vector<std::size_t> idx(index.begin(), index.end());
    for (std::size_t r = 0; r < av.rows; ++r) {
        require(idx[r] < av.cols, "gather_cols: index out of range");
        out.data[r] = av(r, idx[r]);
    }
    const std::size_t ia = a.id();
    return t.push(std::move(out), t.requires_grad(ia), [ia, idx = std::move(idx)](Tape& tp, std::size_t self) {
        Tensor& g = tp.grad_acc(ia);
        const auto& go = tp.grad(self).data;
        for (std::size_t r = 0; r < idx.size(); ++r) g(r, idx[r]) += go[r];
    });
}

Var weighted_sq_error(Var pred, std::span<const double> target, std::span<const double> weight) {
    Tape& t = *pred.tape();
    const Tensor& p = pred.value();
    require(p.cols == 1 && p.rows == target.size() && p.rows == weight.size() && p.rows > 0,
            "weighted_sq_error: expects a column vector with matching target/weights");
    std::vector<double> tg(target.begin(), target.end());
    std::vector<double> w(weight.begin(), weight.end());
    const double n = static_cast<double>(p.rows);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        const double e = tg[i] - p.data[i];
        sum += w[i] * e * e;
    }
    const std::size_t ip = pred.id();
    return t.push(Tensor(1, 1, {sum / n}), t.requires_grad(ip),
                  [ip, tg = std::move(tg), w = std::move(w), n](Tape& tp, std::size_t self) {
                      const double go = tp.grad(self).data[0];
                      const auto& p = tp.value(ip).data;
                      auto& g = tp.grad_acc(ip).data;
                      for (std::size_t i = 0; i < p.size(); ++i) g[i] += go * 2.0 * w[i] * (p[i] - tg[i]) / n;
                  });
}

Var mean(Var a) {
    Tape& t = *a.tape();
    const auto& av = a.value().data;
    require(!av.empty(), "mean: empty tensor");
    double sum = 0.0;
    for (double v : av) sum += v;
    const double n = static_cast<double>(av.size());
    const std::size_t ia = a.id();
    return t.push(Tensor(1, 1, {sum / n}), t.requires_grad(ia), [ia, n](Tape& tp, std::size_t self) {
        const double go = tp.grad(self).data[0];
        for (auto& g : tp.grad_acc(ia).data) g += go / n;
    });
}

}  // namespace aeat::ad
