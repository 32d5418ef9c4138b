#include "dhbv/autodiff/tape.hpp"

#include "dhbv/autodiff/special.hpp"
#include "dhbv/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace dhbv::ad {

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Constant: return "constant";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Div: return "div";
        case OpKind::Neg: return "neg";
        case OpKind::AddScalar: return "add_scalar";
        case OpKind::MulScalar: return "mul_scalar";
        case OpKind::RDivScalar: return "rdiv_scalar";
        case OpKind::PowConst: return "pow_const";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Log10: return "log10";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Abs: return "abs";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Tanh: return "tanh";
        case OpKind::Relu: return "relu";
        case OpKind::Lgamma: return "lgamma";
        case OpKind::Min: return "min";
        case OpKind::Max: return "max";
        case OpKind::Clamp: return "clamp";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::SliceCols: return "slice_cols";
        case OpKind::ConcatCols: return "concat_cols";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
    }
    return "unknown";
}

const Tensor& Variable::value() const {
    if (!tape_) throw std::logic_error("Variable: use of an unbound variable");
    return tape_->node(id_).value;
}

Tensor Gradients::wrt(const Variable& v) const {
    if (has(v.id())) return adjoints_[static_cast<std::size_t>(v.id())];
    return Tensor(v.rows(), v.cols(), 0.0);
}

bool Gradients::has(int node_id) const {
    return node_id >= 0 && static_cast<std::size_t>(node_id) < adjoints_.size() &&
           !adjoints_[static_cast<std::size_t>(node_id)].empty();
}

Tape::Tape() {
#ifdef NDEBUG
    check_finite_ = false;
#else
    check_finite_ = true;
#endif
}

Variable Tape::push(Node node) {
    const int id = static_cast<int>(nodes_.size());
    if (check_finite_ && !node.value.all_finite()) {
        std::ostringstream os;
        os << "non-finite value produced by " << op_name(node.kind) << " at node " << id;
        throw NumericsError(os.str());
    }
    nodes_.push_back(std::move(node));
    return Variable(this, id);
}

Variable Tape::handle(int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw std::out_of_range("Tape::handle: no such node");
    }
    return Variable(this, id);
}

Variable Tape::leaf(Tensor value) {
    Node n;
    n.kind = OpKind::Leaf;
    n.requires_grad = true;
    n.value = std::move(value);
    return push(std::move(n));
}

Variable Tape::constant(Tensor value) {
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Variable Tape::record(OpKind kind, std::initializer_list<Variable> inputs, Tensor value, double a, double b) {
    if (inputs.size() > 2) throw std::invalid_argument("Tape::record: at most two inputs");
    Node n;
    n.kind = kind;
    n.a = a;
    n.b = b;
    std::size_t i = 0;
    for (const auto& in : inputs) {
        if (in.tape() != this) {
            throw std::invalid_argument(std::string("Tape::record: input of ") + std::string(op_name(kind)) +
                                        " belongs to a different tape");
        }
        n.parents[i++] = in.id();
        n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in.id())].requires_grad;
    }
    n.value = std::move(value);
    return push(std::move(n));
}

namespace {

void accumulate(std::vector<Tensor>& adj, int id, Tensor g) {
    auto& slot = adj[static_cast<std::size_t>(id)];
    if (slot.empty()) slot = std::move(g);
    else slot += g;
}

// Broadcast-aware elementwise partials: fa/fb map (a, b) -> d out / d a, d out / d b.
template <class FA, class FB>
void binary_backward(const Tensor& g, const Tensor& a, const Tensor& b, bool need_a, bool need_b,
                     FA fa, FB fb, Tensor& ga, Tensor& gb) {
    const std::size_t rows = g.rows(), cols = g.cols();
    Tensor full_a, full_b;
    if (need_a) full_a = Tensor(rows, cols);
    if (need_b) full_b = Tensor(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t ra = a.rows() == 1 ? 0 : r;
        const std::size_t rb = b.rows() == 1 ? 0 : r;
        for (std::size_t c = 0; c < cols; ++c) {
            const double av = a(ra, a.cols() == 1 ? 0 : c);
            const double bv = b(rb, b.cols() == 1 ? 0 : c);
            const double gv = g(r, c);
            if (need_a) full_a(r, c) = gv * fa(av, bv);
            if (need_b) full_b(r, c) = gv * fb(av, bv);
        }
    }
    if (need_a) ga = detail::reduce_to(full_a, a.rows(), a.cols());
    if (need_b) gb = detail::reduce_to(full_b, b.rows(), b.cols());
}

template <class F>
Tensor unary_backward(const Tensor& g, const Tensor& x, const Tensor& out, F f) {
    Tensor r(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) r[i] = g[i] * f(x[i], out[i]);
    return r;
}

}  // namespace

Gradients Tape::backward(const Variable& output) const {
    if (output.tape() != this) throw std::invalid_argument("Tape::backward: output belongs to another tape");
    if (!output.value().is_scalar()) {
        throw std::invalid_argument("Tape::backward: output must be scalar, got " + output.value().shape_string());
    }
    std::vector<Tensor> adj(nodes_.size());
    adj[static_cast<std::size_t>(output.id())] = Tensor::scalar(1.0);

    for (int i = output.id(); i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.requires_grad || n.kind == OpKind::Leaf) continue;
        const Tensor& g = adj[static_cast<std::size_t>(i)];
        if (g.empty()) continue;

        const int pa = n.parents[0];
        const int pb = n.parents[1];
        const Node* na = pa >= 0 ? &nodes_[static_cast<std::size_t>(pa)] : nullptr;
        const Node* nb = pb >= 0 ? &nodes_[static_cast<std::size_t>(pb)] : nullptr;
        const bool need_a = na && na->requires_grad;
        const bool need_b = nb && nb->requires_grad;
        const Tensor& out = n.value;

        auto bin = [&](auto fa, auto fb) {
            Tensor ga, gb;
            binary_backward(g, na->value, nb->value, need_a, need_b, fa, fb, ga, gb);
            if (need_a) accumulate(adj, pa, std::move(ga));
            if (need_b) accumulate(adj, pb, std::move(gb));
        };
        auto un = [&](auto f) {
            if (need_a) accumulate(adj, pa, unary_backward(g, na->value, out, f));
        };

        switch (n.kind) {
            case OpKind::Leaf:
            case OpKind::Constant: break;
            case OpKind::Add:
                bin([](double, double) { return 1.0; }, [](double, double) { return 1.0; });
                break;
            case OpKind::Sub:
                bin([](double, double) { return 1.0; }, [](double, double) { return -1.0; });
                break;
            case OpKind::Mul:
                bin([](double, double y) { return y; }, [](double x, double) { return x; });
                break;
            case OpKind::Div:
                bin([](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
                break;
            case OpKind::Min:
                bin([](double x, double y) { return x <= y ? 1.0 : 0.0; },
                    [](double x, double y) { return x <= y ? 0.0 : 1.0; });
                break;
            case OpKind::Max:
                bin([](double x, double y) { return x >= y ? 1.0 : 0.0; },
                    [](double x, double y) { return x >= y ? 0.0 : 1.0; });
                break;
            case OpKind::Neg: un([](double, double) { return -1.0; }); break;
            case OpKind::AddScalar: un([](double, double) { return 1.0; }); break;
            case OpKind::MulScalar: {
                const double c = n.a;
                un([c](double, double) { return c; });
                break;
            }
            case OpKind::RDivScalar: {
                const double c = n.a;
                un([c](double x, double) { return -c / (x * x); });
                break;
            }
            case OpKind::PowConst: {
                const double e = n.a;
                un([e](double x, double) { return e == 0.0 ? 0.0 : e * std::pow(x, e - 1.0); });
                break;
            }
            case OpKind::Exp: un([](double, double y) { return y; }); break;
            case OpKind::Log: un([](double x, double) { return 1.0 / x; }); break;
            case OpKind::Log10:
                un([](double x, double) { return 1.0 / (x * std::numbers::ln10); });
                break;
            case OpKind::Sqrt: un([](double, double y) { return 0.5 / y; }); break;
            case OpKind::Abs:
                un([](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
                break;
            case OpKind::Sigmoid: un([](double, double y) { return y * (1.0 - y); }); break;
            case OpKind::Tanh: un([](double, double y) { return 1.0 - y * y; }); break;
            case OpKind::Relu: un([](double x, double) { return x > 0.0 ? 1.0 : 0.0; }); break;
            case OpKind::Lgamma: un([](double x, double) { return digamma(x); }); break;
            case OpKind::Clamp: {
                const double lo = n.a, hi = n.b;
                un([lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
                break;
            }
            case OpKind::MatMul: {
                if (need_a) {
                    Tensor ga(na->value.rows(), na->value.cols());
                    detail::matmul_accumulate(g, false, nb->value, true, ga);
                    accumulate(adj, pa, std::move(ga));
                }
                if (need_b) {
                    Tensor gb(nb->value.rows(), nb->value.cols());
                    detail::matmul_accumulate(na->value, true, g, false, gb);
                    accumulate(adj, pb, std::move(gb));
                }
                break;
            }
            case OpKind::Transpose:
                if (need_a) accumulate(adj, pa, transpose(g));
                break;
            case OpKind::SliceCols:
                if (need_a) {
                    const auto begin = static_cast<std::size_t>(n.a);
                    Tensor ga(na->value.rows(), na->value.cols(), 0.0);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) = g(r, c);
                    accumulate(adj, pa, std::move(ga));
                }
                break;
            case OpKind::ConcatCols: {
                const std::size_t ca = na->value.cols();
                if (need_a) accumulate(adj, pa, slice_cols(g, 0, ca));
                if (need_b) accumulate(adj, pb, slice_cols(g, ca, nb->value.cols()));
                break;
            }
            case OpKind::Sum:
                if (need_a) accumulate(adj, pa, Tensor(na->value.rows(), na->value.cols(), g.item()));
                break;
            case OpKind::Mean:
                if (need_a) {
                    const double s = g.item() / static_cast<double>(na->value.size());
                    accumulate(adj, pa, Tensor(na->value.rows(), na->value.cols(), s));
                }
                break;
        }
    }
    return Gradients(std::move(adj));
}

// ---------------------------------------------------------------------------

namespace {

Tape& same_tape(const Variable& a, const Variable& b, const char* op) {
    if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(op) + ": unbound variable");
    if (a.tape() != b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
    return *a.tape();
}

Variable lift(const Variable& like, const Tensor& t) { return like.tape()->constant(t); }

}  // namespace

Variable operator+(const Variable& a, const Variable& b) {
    return same_tape(a, b, "add").record(OpKind::Add, {a, b}, a.value() + b.value());
}
Variable operator-(const Variable& a, const Variable& b) {
    return same_tape(a, b, "sub").record(OpKind::Sub, {a, b}, a.value() - b.value());
}
Variable operator*(const Variable& a, const Variable& b) {
    return same_tape(a, b, "mul").record(OpKind::Mul, {a, b}, a.value() * b.value());
}
Variable operator/(const Variable& a, const Variable& b) {
    return same_tape(a, b, "div").record(OpKind::Div, {a, b}, a.value() / b.value());
}
Variable operator+(const Variable& a, const Tensor& b) { return a + lift(a, b); }
Variable operator+(const Tensor& a, const Variable& b) { return lift(b, a) + b; }
Variable operator-(const Variable& a, const Tensor& b) { return a - lift(a, b); }
Variable operator-(const Tensor& a, const Variable& b) { return lift(b, a) - b; }
Variable operator*(const Variable& a, const Tensor& b) { return a * lift(a, b); }
Variable operator*(const Tensor& a, const Variable& b) { return lift(b, a) * b; }
Variable operator/(const Variable& a, const Tensor& b) { return a / lift(a, b); }
Variable operator/(const Tensor& a, const Variable& b) { return lift(b, a) / b; }

Variable operator-(const Variable& a) { return a.tape()->record(OpKind::Neg, {a}, -a.value()); }
Variable operator+(const Variable& a, double b) {
    return a.tape()->record(OpKind::AddScalar, {a}, a.value() + b, b);
}
Variable operator+(double a, const Variable& b) { return b + a; }
Variable operator-(const Variable& a, double b) { return a + (-b); }
Variable operator-(double a, const Variable& b) { return (-b) + a; }
Variable operator*(const Variable& a, double b) {
    return a.tape()->record(OpKind::MulScalar, {a}, a.value() * b, b);
}
Variable operator*(double a, const Variable& b) { return b * a; }
Variable operator/(const Variable& a, double b) { return a * (1.0 / b); }
Variable operator/(double a, const Variable& b) {
    return b.tape()->record(OpKind::RDivScalar, {b}, a / b.value(), a);
}

Variable min(const Variable& a, const Variable& b) {
    return same_tape(a, b, "min").record(OpKind::Min, {a, b}, min(a.value(), b.value()));
}
Variable max(const Variable& a, const Variable& b) {
    return same_tape(a, b, "max").record(OpKind::Max, {a, b}, max(a.value(), b.value()));
}
Variable min(const Variable& a, const Tensor& b) { return min(a, lift(a, b)); }
Variable max(const Variable& a, const Tensor& b) { return max(a, lift(a, b)); }
Variable min(const Tensor& a, const Variable& b) { return min(lift(b, a), b); }
Variable max(const Tensor& a, const Variable& b) { return max(lift(b, a), b); }
Variable min(const Variable& a, double b) { return min(a, Tensor::scalar(b)); }
Variable max(const Variable& a, double b) { return max(a, Tensor::scalar(b)); }
Variable clamp(const Variable& x, double lo, double hi) {
    return x.tape()->record(OpKind::Clamp, {x}, clamp(x.value(), lo, hi), lo, hi);
}

Variable exp(const Variable& x) { return x.tape()->record(OpKind::Exp, {x}, exp(x.value())); }
Variable log(const Variable& x) {
    detail::check_domain("log", x.value(), x.tape()->next_id());
    return x.tape()->record(OpKind::Log, {x}, log(x.value()));
}
Variable log10(const Variable& x) {
    detail::check_domain("log10", x.value(), x.tape()->next_id());
    return x.tape()->record(OpKind::Log10, {x}, log10(x.value()));
}
Variable sqrt(const Variable& x) {
    detail::check_domain("sqrt", x.value(), x.tape()->next_id());
    return x.tape()->record(OpKind::Sqrt, {x}, sqrt(x.value()));
}
Variable abs(const Variable& x) { return x.tape()->record(OpKind::Abs, {x}, abs(x.value())); }
Variable sigmoid(const Variable& x) { return x.tape()->record(OpKind::Sigmoid, {x}, sigmoid(x.value())); }
Variable tanh(const Variable& x) { return x.tape()->record(OpKind::Tanh, {x}, tanh(x.value())); }
Variable relu(const Variable& x) { return x.tape()->record(OpKind::Relu, {x}, relu(x.value())); }
Variable lgamma(const Variable& x) {
    detail::check_domain("lgamma", x.value(), x.tape()->next_id());
    return x.tape()->record(OpKind::Lgamma, {x}, lgamma(x.value()));
}
Variable pow(const Variable& base, double exponent) {
    return base.tape()->record(OpKind::PowConst, {base}, pow(base.value(), exponent), exponent);
}
Variable pow(const Variable& base, const Variable& exponent) {
    return exp(exponent * log(clamp(base, kPowBaseFloor, HUGE_VAL)));
}
Variable pow(const Tensor& base, const Variable& exponent) {
    return exp(exponent * log(clamp(base, kPowBaseFloor, HUGE_VAL)));
}
Variable pow(const Variable& base, const Tensor& exponent) {
    return exp(log(clamp(base, kPowBaseFloor, HUGE_VAL)) * exponent);
}

Variable matmul(const Variable& a, const Variable& b) {
    return same_tape(a, b, "matmul").record(OpKind::MatMul, {a, b}, matmul(a.value(), b.value()));
}
Variable matmul(const Tensor& a, const Variable& b) { return matmul(lift(b, a), b); }
Variable matmul(const Variable& a, const Tensor& b) { return matmul(a, lift(a, b)); }
Variable transpose(const Variable& a) {
    return a.tape()->record(OpKind::Transpose, {a}, transpose(a.value()));
}
Variable slice_cols(const Variable& a, std::size_t begin, std::size_t count) {
    return a.tape()->record(OpKind::SliceCols, {a}, slice_cols(a.value(), begin, count),
                            static_cast<double>(begin));
}
Variable concat_cols(const Variable& a, const Variable& b) {
    return same_tape(a, b, "concat_cols").record(OpKind::ConcatCols, {a, b}, concat_cols(a.value(), b.value()));
}
Variable concat_cols(const Variable& a, const Tensor& b) { return concat_cols(a, lift(a, b)); }
Variable concat_cols(const Tensor& a, const Variable& b) { return concat_cols(lift(b, a), b); }
Variable sum(const Variable& a) { return a.tape()->record(OpKind::Sum, {a}, sum(a.value())); }
Variable mean(const Variable& a) { return a.tape()->record(OpKind::Mean, {a}, mean(a.value())); }

}  // namespace dhbv::ad
