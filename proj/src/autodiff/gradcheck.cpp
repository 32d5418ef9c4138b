#include "dhbv/autodiff/gradcheck.hpp"

#include <cmath>

namespace dhbv::ad {

namespace {

double evaluate(const GraphFn& fn, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Variable> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
    return fn(tape, leaves).value().item();
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / (std::abs(analytic) + 1e-8);
}

std::vector<Tensor> gradient(const GraphFn& fn, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Variable> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
    const Variable out = fn(tape, leaves);
    const Gradients grads = tape.backward(out);
    std::vector<Tensor> result;
    result.reserve(leaves.size());
    for (const auto& l : leaves) result.push_back(grads.wrt(l));
    return result;
}

std::vector<Tensor> finite_difference(const GraphFn& fn, const std::vector<Tensor>& inputs, double h) {
    std::vector<Tensor> work = inputs;
    std::vector<Tensor> result;
    result.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor g(inputs[k].rows(), inputs[k].cols());
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k][i];
            work[k][i] = x0 + h;
            const double fp = evaluate(fn, work);
            work[k][i] = x0 - h;
            const double fm = evaluate(fn, work);
            work[k][i] = x0;
            g[i] = (fp - fm) / (2.0 * h);
        }
        result.push_back(std::move(g));
    }
    return result;
}

GradCheckReport gradcheck(const GraphFn& fn, const std::vector<Tensor>& inputs, double h) {
    const auto analytic = gradient(fn, inputs);
    const auto numeric = finite_difference(fn, inputs, h);
    GradCheckReport report;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double err = gradient_relative_error(analytic[k][i], numeric[k][i]);
            ++report.entries_checked;
            if (err > report.max_rel_error || report.entries_checked == 1) {
                report.max_rel_error = err;
                report.worst_input = k;
                report.worst_entry = i;
                report.analytic = analytic[k][i];
                report.numeric = numeric[k][i];
            }
        }
    }
    return report;
}

}  // namespace dhbv::ad
