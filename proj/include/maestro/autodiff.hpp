#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "maestro/common.hpp"

// Reverse-mode autodiff over Eigen::MatrixXd values. The graph is rebuilt on
// every forward pass; nodes hold the value, the accumulated gradient and a
// closure that pushes gradients into the parents. Scalars are 1x1 matrices.

namespace maestro::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Mat val;
    Mat grad;  // sized lazily on first accumulation
    bool requires_grad = false;
    std::uint64_t order = 0;
    std::vector<Var> parents;
    std::function<void(Node&)> backfn;

    void accum(const Mat& g) {
        if (grad.size() == 0)
            grad = g;
        else
            grad += g;
    }
};

inline std::uint64_t next_order() {
    static std::atomic<std::uint64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

inline Var make_node(Mat val, std::vector<Var> parents = {},
                     std::function<void(Node&)> backfn = nullptr) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    n->order = next_order();
    for (const auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backfn = std::move(backfn);
    }
    return n;
}

inline Var constant(Mat v) { return make_node(std::move(v)); }

inline Var constant(double s) {
    Mat m(1, 1);
    m(0, 0) = s;
    return make_node(std::move(m));
}

inline Var param(Mat v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->order = next_order();
    n->requires_grad = true;
    return n;
}

inline double scalar(const Var& v) {
    if (v->val.rows() != 1 || v->val.cols() != 1)
        throw ShapeError("scalar() on non-1x1 value");
    return v->val(0, 0);
}

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols())
        throw ShapeError(std::string(op) + ": operand shapes differ");
}

// -------------------------------- arithmetic --------------------------------

inline Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    return make_node(a->val + b->val, {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad);
        n.parents[1]->accum(n.grad);
    });
}

inline Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    return make_node(a->val - b->val, {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad);
        n.parents[1]->accum(-n.grad);
    });
}

inline Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    return make_node(a->val.cwiseProduct(b->val), {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad.cwiseProduct(n.parents[1]->val));
        n.parents[1]->accum(n.grad.cwiseProduct(n.parents[0]->val));
    });
}

inline Var scale(const Var& a, double s) {
    return make_node(a->val * s, {a}, [s](Node& n) { n.parents[0]->accum(n.grad * s); });
}

inline Var add_scalar(const Var& a, double s) {
    return make_node((a->val.array() + s).matrix(), {a},
                     [](Node& n) { n.parents[0]->accum(n.grad); });
}

inline Var matmul(const Var& a, const Var& b) {
    if (a->val.cols() != b->val.rows()) throw ShapeError("matmul: inner dimensions differ");
    return make_node(a->val * b->val, {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad * n.parents[1]->val.transpose());
        n.parents[1]->accum(n.parents[0]->val.transpose() * n.grad);
    });
}

// a @ b^T
inline Var matmul_nt(const Var& a, const Var& b) {
    if (a->val.cols() != b->val.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
    return make_node(a->val * b->val.transpose(), {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad * n.parents[1]->val);
        n.parents[1]->accum(n.grad.transpose() * n.parents[0]->val);
    });
}

// -------------------------------- nonlinear ---------------------------------

inline Var relu(const Var& a) {
    return make_node(a->val.cwiseMax(0.0), {a}, [](Node& n) {
        Mat mask = (n.parents[0]->val.array() > 0.0).cast<double>().matrix();
        n.parents[0]->accum(n.grad.cwiseProduct(mask));
    });
}

inline Var sigmoid(const Var& a) {
    Mat y = (1.0 / (1.0 + (-a->val.array()).exp())).matrix();
    return make_node(y, {a}, [y](Node& n) {
        Mat d = (y.array() * (1.0 - y.array())).matrix();
        n.parents[0]->accum(n.grad.cwiseProduct(d));
    });
}

inline Var natural_log(const Var& a) {
    return make_node(a->val.array().log().matrix(), {a}, [](Node& n) {
        n.parents[0]->accum(n.grad.cwiseQuotient(n.parents[0]->val));
    });
}

inline Var abs(const Var& a) {
    return make_node(a->val.cwiseAbs(), {a}, [](Node& n) {
        Mat sign = n.parents[0]->val.array().sign().matrix();
        n.parents[0]->accum(n.grad.cwiseProduct(sign));
    });
}

// value clamp; gradient passes through strictly inside (lo, hi)
inline Var clamp(const Var& a, double lo, double hi) {
    Mat y = a->val.cwiseMax(lo).cwiseMin(hi);
    return make_node(y, {a}, [lo, hi](Node& n) {
        Mat mask = ((n.parents[0]->val.array() > lo) && (n.parents[0]->val.array() < hi))
                       .cast<double>()
                       .matrix();
        n.parents[0]->accum(n.grad.cwiseProduct(mask));
    });
}

// -------------------------------- reductions --------------------------------

inline Var sum(const Var& a) {
    Mat s(1, 1);
    s(0, 0) = a->val.sum();
    return make_node(s, {a}, [](Node& n) {
        n.parents[0]->accum(Mat::Constant(n.parents[0]->val.rows(), n.parents[0]->val.cols(),
                                          n.grad(0, 0)));
    });
}

inline Var mean(const Var& a) {
    double k = static_cast<double>(a->val.size());
    Mat s(1, 1);
    s(0, 0) = a->val.sum() / k;
    return make_node(s, {a}, [k](Node& n) {
        n.parents[0]->accum(Mat::Constant(n.parents[0]->val.rows(), n.parents[0]->val.cols(),
                                          n.grad(0, 0) / k));
    });
}

// column means over rows: [T, C] -> [1, C]
inline Var mean_over_rows(const Var& a) {
    double t = static_cast<double>(a->val.rows());
    return make_node(a->val.colwise().mean(), {a}, [t](Node& n) {
        Mat g = Mat::Ones(n.parents[0]->val.rows(), 1) * (n.grad / t);
        n.parents[0]->accum(g);
    });
}

// ------------------------------- broadcasting -------------------------------

// [T, C] + [1, C]
inline Var add_rowvec(const Var& a, const Var& b) {
    if (b->val.rows() != 1 || a->val.cols() != b->val.cols())
        throw ShapeError("add_rowvec: expected [T,C] + [1,C]");
    Mat y = a->val.rowwise() + b->val.row(0);
    return make_node(y, {a, b}, [](Node& n) {
        n.parents[0]->accum(n.grad);
        n.parents[1]->accum(n.grad.colwise().sum());
    });
}

inline Var repeat_row(const Var& a, Eigen::Index n_rows) {
    if (a->val.rows() != 1) throw ShapeError("repeat_row: expected [1,C]");
    Mat y = a->val.replicate(n_rows, 1);
    return make_node(y, {a}, [](Node& n) { n.parents[0]->accum(n.grad.colwise().sum()); });
}

// ------------------------------ slicing/stitching ---------------------------

inline Var slice_rows(const Var& a, Eigen::Index r0, Eigen::Index n_rows) {
    if (r0 < 0 || r0 + n_rows > a->val.rows()) throw ShapeError("slice_rows: out of range");
    Mat y = a->val.middleRows(r0, n_rows);
    return make_node(y, {a}, [r0, n_rows](Node& n) {
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        g.middleRows(r0, n_rows) = n.grad;
        n.parents[0]->accum(g);
    });
}

inline Var slice_cols(const Var& a, Eigen::Index c0, Eigen::Index n_cols) {
    if (c0 < 0 || c0 + n_cols > a->val.cols()) throw ShapeError("slice_cols: out of range");
    Mat y = a->val.middleCols(c0, n_cols);
    return make_node(y, {a}, [c0, n_cols](Node& n) {
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        g.middleCols(c0, n_cols) = n.grad;
        n.parents[0]->accum(g);
    });
}

inline Var concat_cols(const Var& a, const Var& b) {
    if (a->val.rows() != b->val.rows()) throw ShapeError("concat_cols: row counts differ");
    Mat y(a->val.rows(), a->val.cols() + b->val.cols());
    y << a->val, b->val;
    return make_node(y, {a, b}, [](Node& n) {
        Eigen::Index ca = n.parents[0]->val.cols();
        n.parents[0]->accum(n.grad.leftCols(ca));
        n.parents[1]->accum(n.grad.rightCols(n.grad.cols() - ca));
    });
}

// rows shifted by k with zero fill: out.row(i) = a.row(i - k)
inline Var shift_rows(const Var& a, Eigen::Index k) {
    Eigen::Index t = a->val.rows();
    Mat y = Mat::Zero(t, a->val.cols());
    for (Eigen::Index i = 0; i < t; ++i) {
        Eigen::Index src = i - k;
        if (src >= 0 && src < t) y.row(i) = a->val.row(src);
    }
    return make_node(y, {a}, [k](Node& n) {
        Eigen::Index t2 = n.parents[0]->val.rows();
        Mat g = Mat::Zero(t2, n.parents[0]->val.cols());
        for (Eigen::Index i = 0; i < t2; ++i) {
            Eigen::Index src = i - k;
            if (src >= 0 && src < t2) g.row(src) += n.grad.row(i);
        }
        n.parents[0]->accum(g);
    });
}

// frame-block shift for [N*J, C] layouts: frame i, joint j lives at row i*J+j.
// out(frame i) = a(frame i - k), zero at the boundary; joints never wrap.
inline Var shift_frames(const Var& a, Eigen::Index k, Eigen::Index joints) {
    if (a->val.rows() % joints != 0) throw ShapeError("shift_frames: rows not divisible by J");
    Eigen::Index frames = a->val.rows() / joints;
    Mat y = Mat::Zero(a->val.rows(), a->val.cols());
    for (Eigen::Index f = 0; f < frames; ++f) {
        Eigen::Index src = f - k;
        if (src >= 0 && src < frames)
            y.middleRows(f * joints, joints) = a->val.middleRows(src * joints, joints);
    }
    return make_node(y, {a}, [k, joints](Node& n) {
        Eigen::Index frames2 = n.parents[0]->val.rows() / joints;
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        for (Eigen::Index f = 0; f < frames2; ++f) {
            Eigen::Index src = f - k;
            if (src >= 0 && src < frames2)
                g.middleRows(src * joints, joints) += n.grad.middleRows(f * joints, joints);
        }
        n.parents[0]->accum(g);
    });
}

// non-overlapping max over groups of `factor` consecutive rows: [T,C] -> [T/factor,C]
inline Var maxpool_rows(const Var& a, Eigen::Index factor) {
    if (factor < 1 || a->val.rows() % factor != 0)
        throw ShapeError("maxpool_rows: rows not divisible by factor");
    Eigen::Index t_out = a->val.rows() / factor;
    Eigen::Index c = a->val.cols();
    Mat y(t_out, c);
    auto argmax = std::make_shared<std::vector<Eigen::Index>>(
        static_cast<std::size_t>(t_out * c));
    for (Eigen::Index i = 0; i < t_out; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            Eigen::Index best = i * factor;
            for (Eigen::Index r = i * factor + 1; r < (i + 1) * factor; ++r)
                if (a->val(r, j) > a->val(best, j)) best = r;
            y(i, j) = a->val(best, j);
            (*argmax)[static_cast<std::size_t>(i * c + j)] = best;
        }
    }
    return make_node(y, {a}, [argmax](Node& n) {
        Eigen::Index c2 = n.grad.cols();
        Mat g = Mat::Zero(n.parents[0]->val.rows(), c2);
        for (Eigen::Index i = 0; i < n.grad.rows(); ++i)
            for (Eigen::Index j = 0; j < c2; ++j)
                g((*argmax)[static_cast<std::size_t>(i * c2 + j)], j) += n.grad(i, j);
        n.parents[0]->accum(g);
    });
}

// per-frame graph mixing for [N*J, C]: out(frame i) = A * a(frame i), A is JxJ
inline Var graph_mix(const Var& a, const Mat& adj) {
    Eigen::Index j = adj.rows();
    if (adj.cols() != j || a->val.rows() % j != 0) throw ShapeError("graph_mix: bad adjacency");
    Eigen::Index frames = a->val.rows() / j;
    Mat y(a->val.rows(), a->val.cols());
    for (Eigen::Index f = 0; f < frames; ++f)
        y.middleRows(f * j, j) = adj * a->val.middleRows(f * j, j);
    return make_node(y, {a}, [adj, j](Node& n) {
        Eigen::Index frames2 = n.parents[0]->val.rows() / j;
        Mat g(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        for (Eigen::Index f = 0; f < frames2; ++f)
            g.middleRows(f * j, j) = adj.transpose() * n.grad.middleRows(f * j, j);
        n.parents[0]->accum(g);
    });
}

// ------------------------------ row-wise softmax ----------------------------

inline Var softmax_rows(const Var& a) {
    Mat y(a->val.rows(), a->val.cols());
    for (Eigen::Index i = 0; i < a->val.rows(); ++i) {
        Eigen::ArrayXd row = a->val.row(i).array();
        row -= row.maxCoeff();
        Eigen::ArrayXd e = row.exp();
        y.row(i) = (e / e.sum()).matrix();
    }
    return make_node(y, {a}, [y](Node& n) {
        Mat g(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = n.grad.row(i).cwiseProduct(y.row(i)).sum();
            g.row(i) = (y.row(i).array() * (n.grad.row(i).array() - dot)).matrix();
        }
        n.parents[0]->accum(g);
    });
}

// ------------------------------- layer norm ---------------------------------

// row-wise: (x - mu) / sqrt(var + eps) * gamma + beta, gamma/beta are [1, C]
inline Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5) {
    Eigen::Index t = a->val.rows(), c = a->val.cols();
    if (gamma->val.rows() != 1 || gamma->val.cols() != c || beta->val.rows() != 1 ||
        beta->val.cols() != c)
        throw ShapeError("layer_norm: gamma/beta must be [1,C]");
    Mat xhat(t, c);
    Eigen::VectorXd inv_std(t);
    for (Eigen::Index i = 0; i < t; ++i) {
        double mu = a->val.row(i).mean();
        double var = (a->val.row(i).array() - mu).square().mean();
        double is = 1.0 / std::sqrt(var + eps);
        inv_std(i) = is;
        xhat.row(i) = ((a->val.row(i).array() - mu) * is).matrix();
    }
    Mat y = ((xhat.array().rowwise() * gamma->val.row(0).array()).rowwise() +
             beta->val.row(0).array())
                .matrix();
    return make_node(y, {a, gamma, beta}, [xhat, inv_std](Node& n) {
        const Mat& gm = n.parents[1]->val;
        Eigen::Index t2 = n.grad.rows(), c2 = n.grad.cols();
        Mat dxhat = (n.grad.array().rowwise() * gm.row(0).array()).matrix();
        Mat dx(t2, c2);
        double cn = static_cast<double>(c2);
        for (Eigen::Index i = 0; i < t2; ++i) {
            double sum_d = dxhat.row(i).sum();
            double sum_dx = dxhat.row(i).cwiseProduct(xhat.row(i)).sum();
            dx.row(i) = inv_std(i) / cn *
                        (cn * dxhat.row(i).array() - sum_d - xhat.row(i).array() * sum_dx)
                            .matrix();
        }
        n.parents[0]->accum(dx);
        n.parents[1]->accum(n.grad.cwiseProduct(xhat).colwise().sum());
        n.parents[2]->accum(n.grad.colwise().sum());
    });
}

// -------------------------------- backward ----------------------------------

inline void backward(const Var& root) {
    if (root->val.rows() != 1 || root->val.cols() != 1)
        throw ShapeError("backward: root must be scalar");
    if (!root->requires_grad) return;

    // collect reachable grad-requiring nodes, iteratively
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.get()};
    seen.insert(root.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        topo.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
    std::sort(topo.begin(), topo.end(),
              [](const Node* a, const Node* b) { return a->order > b->order; });

    root->grad = Mat::Ones(1, 1);
    for (Node* n : topo)
        if (n->backfn && n->grad.size() != 0) n->backfn(*n);
}

}  // namespace maestro::ad
