#include "ppm/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ppm/nn/kernels.hpp"

namespace ppm::nn {

namespace {

std::string shape_str(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }
std::string shape_str(const Tensor& t) { return shape_str(t.rows(), t.cols()); }

std::shared_ptr<Node> make_node(int rows, int cols, std::vector<std::shared_ptr<Node>> parents) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value.resize(std::size_t(rows) * cols);
    for (const auto& p : parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    n->parents = std::move(parents);
    return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch(op, shape_str(b), shape_str(a));
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value.assign(std::size_t(rows) * cols, 0.0);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from(int rows, int cols, std::vector<double> v, bool requires_grad) {
    if (v.size() != std::size_t(rows) * cols)
        throw ShapeMismatch("Tensor::from", std::to_string(v.size()) + " values", shape_str(rows, cols));
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from(1, 1, {v}, requires_grad);
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw ShapeMismatch("item", shape_str(*this), "1x1");
    return n_->value[0];
}

void backward(const Tensor& loss) {
    if (loss.rows() != 1 || loss.cols() != 1)
        throw ShapeMismatch("backward", shape_str(loss), "1x1");
    Node* root = loss.node().get();
    if (!root->requires_grad) return;

    // post-order DFS over grad-requiring ancestry; reversed it gives an
    // order where every consumer runs before its producers
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

// ---- ops ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatch("matmul", shape_str(a) + " * " + shape_str(b), "inner dims equal");
    int m = a.rows(), k = a.cols(), n = b.cols();
    auto out = make_node(m, n, {a.node(), b.node()});
    kernels::matmul(a.values().data(), b.values().data(), out->value.data(), m, k, n);
    if (out->requires_grad) {
        Node* pa = a.node().get();
        Node* pb = b.node().get();
        out->backward_fn = [pa, pb, m, k, n](Node& o) {
            if (pa->requires_grad)
                kernels::matmul_abt_acc(o.grad.data(), pb->value.data(), pa->ensure_grad().data(), m, n, k);
            if (pb->requires_grad)
                kernels::matmul_atb_acc(pa->value.data(), o.grad.data(), pb->ensure_grad().data(), m, k, n);
        };
    }
    return Tensor::wrap(out);
}

Tensor transpose(const Tensor& x) {
    int m = x.rows(), n = x.cols();
    auto out = make_node(n, m, {x.node()});
    const auto& v = x.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out->value[std::size_t(j) * m + i] = v[std::size_t(i) * n + j];
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, m, n](Node& o) {
            auto& g = px->ensure_grad();
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < m; ++i) g[std::size_t(i) * n + j] += o.grad[std::size_t(j) * m + i];
        };
    }
    return Tensor::wrap(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    auto out = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = av[i] + bv[i];
    if (out->requires_grad) {
        Node* pa = a.node().get();
        Node* pb = b.node().get();
        out->backward_fn = [pa, pb](Node& o) {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            }
            if (pb->requires_grad) {
                auto& g = pb->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    auto out = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = av[i] - bv[i];
    if (out->requires_grad) {
        Node* pa = a.node().get();
        Node* pb = b.node().get();
        out->backward_fn = [pa, pb](Node& o) {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            }
            if (pb->requires_grad) {
                auto& g = pb->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    auto out = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = av[i] * bv[i];
    if (out->requires_grad) {
        Node* pa = a.node().get();
        Node* pb = b.node().get();
        out->backward_fn = [pa, pb](Node& o) {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pb->value[i];
            }
            if (pb->requires_grad) {
                auto& g = pb->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pa->value[i];
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor scale(const Tensor& x, double c) {
    auto out = make_node(x.rows(), x.cols(), {x.node()});
    const auto& v = x.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = v[i] * c;
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, c](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * c;
        };
    }
    return Tensor::wrap(out);
}

Tensor add_const(const Tensor& x, double c) {
    auto out = make_node(x.rows(), x.cols(), {x.node()});
    const auto& v = x.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = v[i] + c;
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        };
    }
    return Tensor::wrap(out);
}

namespace {

enum class RowwiseKind { add, sub, mul };

Tensor rowwise(const char* name, RowwiseKind kind, const Tensor& x, const Tensor& v) {
    if (v.rows() != 1 || v.cols() != x.cols())
        throw ShapeMismatch(name, shape_str(v), shape_str(1, x.cols()));
    int m = x.rows(), n = x.cols();
    auto out = make_node(m, n, {x.node(), v.node()});
    const auto& xv = x.values();
    const auto& vv = v.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double a = xv[std::size_t(i) * n + j], b = vv[j];
            out->value[std::size_t(i) * n + j] =
                kind == RowwiseKind::add ? a + b : (kind == RowwiseKind::sub ? a - b : a * b);
        }
    if (out->requires_grad) {
        Node* px = x.node().get();
        Node* pv = v.node().get();
        out->backward_fn = [px, pv, kind, m, n](Node& o) {
            if (px->requires_grad) {
                auto& g = px->ensure_grad();
                if (kind == RowwiseKind::mul) {
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j)
                            g[std::size_t(i) * n + j] += o.grad[std::size_t(i) * n + j] * pv->value[j];
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                }
            }
            if (pv->requires_grad) {
                auto& g = pv->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        double go = o.grad[std::size_t(i) * n + j];
                        if (kind == RowwiseKind::add)
                            g[j] += go;
                        else if (kind == RowwiseKind::sub)
                            g[j] -= go;
                        else
                            g[j] += go * px->value[std::size_t(i) * n + j];
                    }
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor colwise(const char* name, RowwiseKind kind, const Tensor& x, const Tensor& v) {
    if (v.cols() != 1 || v.rows() != x.rows())
        throw ShapeMismatch(name, shape_str(v), shape_str(x.rows(), 1));
    int m = x.rows(), n = x.cols();
    auto out = make_node(m, n, {x.node(), v.node()});
    const auto& xv = x.values();
    const auto& vv = v.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double a = xv[std::size_t(i) * n + j], b = vv[i];
            out->value[std::size_t(i) * n + j] = kind == RowwiseKind::sub ? a - b : a * b;
        }
    if (out->requires_grad) {
        Node* px = x.node().get();
        Node* pv = v.node().get();
        out->backward_fn = [px, pv, kind, m, n](Node& o) {
            if (px->requires_grad) {
                auto& g = px->ensure_grad();
                if (kind == RowwiseKind::mul) {
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j)
                            g[std::size_t(i) * n + j] += o.grad[std::size_t(i) * n + j] * pv->value[i];
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                }
            }
            if (pv->requires_grad) {
                auto& g = pv->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        double go = o.grad[std::size_t(i) * n + j];
                        if (kind == RowwiseKind::sub)
                            g[i] -= go;
                        else
                            g[i] += go * px->value[std::size_t(i) * n + j];
                    }
            }
        };
    }
    return Tensor::wrap(out);
}

}  // namespace

Tensor add_rowwise(const Tensor& x, const Tensor& v) { return rowwise("add_rowwise", RowwiseKind::add, x, v); }
Tensor sub_rowwise(const Tensor& x, const Tensor& v) { return rowwise("sub_rowwise", RowwiseKind::sub, x, v); }
Tensor mul_rowwise(const Tensor& x, const Tensor& v) { return rowwise("mul_rowwise", RowwiseKind::mul, x, v); }
Tensor sub_colwise(const Tensor& x, const Tensor& v) { return colwise("sub_colwise", RowwiseKind::sub, x, v); }
Tensor mul_colwise(const Tensor& x, const Tensor& v) { return colwise("mul_colwise", RowwiseKind::mul, x, v); }

Tensor concat_rows(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeMismatch("concat_rows", "0 inputs", ">=1");
    int n = xs[0].cols(), m = 0;
    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) {
        if (x.cols() != n) throw ShapeMismatch("concat_rows", shape_str(x), shape_str(-1, n));
        m += x.rows();
        parents.push_back(x.node());
    }
    auto out = make_node(m, n, std::move(parents));
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x.values().begin(), x.values().end(), out->value.begin() + off);
        off += x.values().size();
    }
    if (out->requires_grad) {
        out->backward_fn = [](Node& o) {
            std::size_t off = 0;
            for (auto& p : o.parents) {
                if (p->requires_grad) {
                    auto& g = p->ensure_grad();
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[off + i];
                }
                off += p->value.size();
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeMismatch("concat_cols", "0 inputs", ">=1");
    int m = xs[0].rows(), n = 0;
    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) {
        if (x.rows() != m) throw ShapeMismatch("concat_cols", shape_str(x), shape_str(m, -1));
        n += x.cols();
        parents.push_back(x.node());
    }
    auto out = make_node(m, n, std::move(parents));
    int coff = 0;
    for (const auto& x : xs) {
        int xc = x.cols();
        for (int i = 0; i < m; ++i)
            std::copy(x.values().begin() + std::size_t(i) * xc, x.values().begin() + std::size_t(i + 1) * xc,
                      out->value.begin() + std::size_t(i) * n + coff);
        coff += xc;
    }
    if (out->requires_grad) {
        out->backward_fn = [m, n](Node& o) {
            int coff = 0;
            for (auto& p : o.parents) {
                int pc = p->cols;
                if (p->requires_grad) {
                    auto& g = p->ensure_grad();
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < pc; ++j)
                            g[std::size_t(i) * pc + j] += o.grad[std::size_t(i) * n + coff + j];
                }
                coff += pc;
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
    if (r0 < 0 || r1 > x.rows() || r0 >= r1)
        throw ShapeMismatch("slice_rows", "[" + std::to_string(r0) + "," + std::to_string(r1) + ")",
                            "within " + shape_str(x));
    int n = x.cols(), m = r1 - r0;
    auto out = make_node(m, n, {x.node()});
    std::copy(x.values().begin() + std::size_t(r0) * n, x.values().begin() + std::size_t(r1) * n,
              out->value.begin());
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, r0, m, n](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < std::size_t(m) * n; ++i) g[std::size_t(r0) * n + i] += o.grad[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
    if (c0 < 0 || c1 > x.cols() || c0 >= c1)
        throw ShapeMismatch("slice_cols", "[" + std::to_string(c0) + "," + std::to_string(c1) + ")",
                            "within " + shape_str(x));
    int m = x.rows(), n = x.cols(), w = c1 - c0;
    auto out = make_node(m, w, {x.node()});
    for (int i = 0; i < m; ++i)
        std::copy(x.values().begin() + std::size_t(i) * n + c0, x.values().begin() + std::size_t(i) * n + c1,
                  out->value.begin() + std::size_t(i) * w);
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, c0, m, n, w](Node& o) {
            auto& g = px->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < w; ++j) g[std::size_t(i) * n + c0 + j] += o.grad[std::size_t(i) * w + j];
        };
    }
    return Tensor::wrap(out);
}

Tensor sum_all(const Tensor& x) {
    auto out = make_node(1, 1, {x.node()});
    double s = 0.0;
    for (double v : x.values()) s += v;
    out->value[0] = s;
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0];
        };
    }
    return Tensor::wrap(out);
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / x.size()); }

Tensor row_mean(const Tensor& x) {
    int m = x.rows(), n = x.cols();
    auto out = make_node(m, 1, {x.node()});
    const auto& v = x.values();
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += v[std::size_t(i) * n + j];
        out->value[i] = s / n;
    }
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, m, n](Node& o) {
            auto& g = px->ensure_grad();
            for (int i = 0; i < m; ++i) {
                double gi = o.grad[i] / n;
                for (int j = 0; j < n; ++j) g[std::size_t(i) * n + j] += gi;
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor col_mean(const Tensor& x) {
    int m = x.rows(), n = x.cols();
    auto out = make_node(1, n, {x.node()});
    const auto& v = x.values();
    for (int j = 0; j < n; ++j) out->value[j] = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out->value[j] += v[std::size_t(i) * n + j];
    for (int j = 0; j < n; ++j) out->value[j] /= m;
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, m, n](Node& o) {
            auto& g = px->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) g[std::size_t(i) * n + j] += o.grad[j] / m;
        };
    }
    return Tensor::wrap(out);
}

namespace {

template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df_from_out) {
    auto out = make_node(x.rows(), x.cols(), {x.node()});
    const auto& v = x.values();
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = f(v[i]);
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, df_from_out](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += o.grad[i] * df_from_out(px->value[i], o.value[i]);
        };
    }
    return Tensor::wrap(out);
}

}  // namespace

Tensor relu(const Tensor& x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}
Tensor tanh_op(const Tensor& x) {
    return unary(x, [](double v) { return std::tanh(v); },
                 [](double, double y) { return 1.0 - y * y; });
}
Tensor sigmoid(const Tensor& x) {
    return unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                 [](double, double y) { return y * (1.0 - y); });
}
Tensor exp_op(const Tensor& x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}
Tensor sqrt_op(const Tensor& x) {
    return unary(x, [](double v) { return std::sqrt(v); },
                 [](double, double y) { return 0.5 / y; });
}
Tensor reciprocal(const Tensor& x) {
    return unary(x, [](double v) { return 1.0 / v; },
                 [](double, double y) { return -y * y; });
}
Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor softmax_rows_masked(const Tensor& x, int valid_from) {
    int m = x.rows(), n = x.cols();
    if (valid_from < 0 || valid_from >= n)
        throw ShapeMismatch("softmax_rows_masked", "valid_from " + std::to_string(valid_from),
                            "[0," + std::to_string(n) + ")");
    auto out = make_node(m, n, {x.node()});
    const auto& v = x.values();
    for (int i = 0; i < m; ++i) {
        const double* xi = v.data() + std::size_t(i) * n;
        double* yi = out->value.data() + std::size_t(i) * n;
        for (int j = 0; j < valid_from; ++j) yi[j] = 0.0;
        double mx = xi[valid_from];
        for (int j = valid_from + 1; j < n; ++j) mx = std::max(mx, xi[j]);
        double s = 0.0;
        for (int j = valid_from; j < n; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            s += yi[j];
        }
        for (int j = valid_from; j < n; ++j) yi[j] /= s;
    }
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, m, n, valid_from](Node& o) {
            auto& g = px->ensure_grad();
            for (int i = 0; i < m; ++i) {
                const double* yi = o.value.data() + std::size_t(i) * n;
                const double* gi = o.grad.data() + std::size_t(i) * n;
                double dot = 0.0;
                for (int j = valid_from; j < n; ++j) dot += gi[j] * yi[j];
                for (int j = valid_from; j < n; ++j)
                    g[std::size_t(i) * n + j] += yi[j] * (gi[j] - dot);
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor softmax_rows(const Tensor& x) { return softmax_rows_masked(x, 0); }

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (!training || p <= 0.0) return x;
    int m = x.rows(), n = x.cols();
    auto out = make_node(m, n, {x.node()});
    std::vector<double> mask(out->value.size());
    double keep_scale = 1.0 / (1.0 - p);
    const auto& v = x.values();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() >= p ? keep_scale : 0.0;
        out->value[i] = v[i] * mask[i];
    }
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, mask = std::move(mask)](Node& o) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * mask[i];
        };
    }
    return Tensor::wrap(out);
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& indices) {
    int v = table.rows(), d = table.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= v)
            throw IndexOutOfRange("embedding_lookup: index " + std::to_string(idx) + " outside vocab of " +
                                  std::to_string(v));
    auto out = make_node(static_cast<int>(indices.size()), d, {table.node()});
    const auto& tv = table.values();
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(tv.begin() + std::size_t(indices[i]) * d, tv.begin() + std::size_t(indices[i] + 1) * d,
                  out->value.begin() + i * d);
    if (out->requires_grad) {
        Node* pt = table.node().get();
        out->backward_fn = [pt, indices, d](Node& o) {
            auto& g = pt->ensure_grad();
            for (std::size_t i = 0; i < indices.size(); ++i)
                for (int j = 0; j < d; ++j)
                    g[std::size_t(indices[i]) * d + j] += o.grad[i * d + j];
        };
    }
    return Tensor::wrap(out);
}

Tensor mean_pool_over_sequence(const Tensor& x, int valid_from) {
    int m = x.rows(), n = x.cols();
    if (valid_from < 0 || valid_from >= m)
        throw ShapeMismatch("mean_pool_over_sequence", "valid_from " + std::to_string(valid_from),
                            "[0," + std::to_string(m) + ")");
    int cnt = m - valid_from;
    auto out = make_node(1, n, {x.node()});
    const auto& v = x.values();
    for (int j = 0; j < n; ++j) out->value[j] = 0.0;
    for (int i = valid_from; i < m; ++i)
        for (int j = 0; j < n; ++j) out->value[j] += v[std::size_t(i) * n + j];
    for (int j = 0; j < n; ++j) out->value[j] /= cnt;
    if (out->requires_grad) {
        Node* px = x.node().get();
        out->backward_fn = [px, m, n, valid_from, cnt](Node& o) {
            auto& g = px->ensure_grad();
            for (int i = valid_from; i < m; ++i)
                for (int j = 0; j < n; ++j) g[std::size_t(i) * n + j] += o.grad[j] / cnt;
        };
    }
    return Tensor::wrap(out);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rowwise(matmul(x, w), b);
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
    int b = logits.rows(), c = logits.cols();
    if (static_cast<int>(targets.size()) != b)
        throw ShapeMismatch("cross_entropy", std::to_string(targets.size()) + " targets", std::to_string(b));
    for (int t : targets)
        if (t < 0 || t >= c)
            throw IndexOutOfRange("cross_entropy: target " + std::to_string(t) + " outside " +
                                  std::to_string(c) + " classes");
    auto out = make_node(1, 1, {logits.node()});
    std::vector<double> softmax(std::size_t(b) * c);
    const auto& v = logits.values();
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        const double* xi = v.data() + std::size_t(i) * c;
        double* si = softmax.data() + std::size_t(i) * c;
        double mx = xi[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            si[j] = std::exp(xi[j] - mx);
            s += si[j];
        }
        for (int j = 0; j < c; ++j) si[j] /= s;
        total += std::log(s) + mx - xi[targets[i]];
    }
    out->value[0] = total / b;
    if (out->requires_grad) {
        Node* pl = logits.node().get();
        out->backward_fn = [pl, softmax = std::move(softmax), targets, b, c](Node& o) {
            auto& g = pl->ensure_grad();
            double go = o.grad[0] / b;
            for (int i = 0; i < b; ++i) {
                for (int j = 0; j < c; ++j)
                    g[std::size_t(i) * c + j] += go * softmax[std::size_t(i) * c + j];
                g[std::size_t(i) * c + targets[i]] -= go;
            }
        };
    }
    return Tensor::wrap(out);
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    check_same_shape("mse", pred, target);
    Tensor d = sub(pred, target);
    return mean_all(mul(d, d));
}

}  // namespace ppm::nn
