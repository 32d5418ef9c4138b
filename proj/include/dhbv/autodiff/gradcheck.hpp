#pragma once

#include "dhbv/autodiff/tape.hpp"

#include <functional>
#include <vector>

namespace dhbv::ad {

/// Builds a scalar graph from leaf inputs on the given tape.
using GraphFn = std::function<Variable(Tape&, const std::vector<Variable>&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t entries_checked = 0;

    bool passed(double tol) const { return max_rel_error < tol; }
};

/// |analytic - numeric| / (|analytic| + 1e-8)
double gradient_relative_error(double analytic, double numeric);

/// Reverse-mode gradient of `fn` at `inputs`.
std::vector<Tensor> gradient(const GraphFn& fn, const std::vector<Tensor>& inputs);

/// Central finite differences of `fn` w.r.t. every input entry.
std::vector<Tensor> finite_difference(const GraphFn& fn, const std::vector<Tensor>& inputs, double h = 1e-6);

/// Compares tape gradients against central finite differences entry by entry.
GradCheckReport gradcheck(const GraphFn& fn, const std::vector<Tensor>& inputs, double h = 1e-6);

}  // namespace dhbv::ad
