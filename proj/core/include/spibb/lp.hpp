#pragma once

#include <vector>

namespace spibb {

enum class Relation { less_equal, equal };

struct LpConstraint {
    std::vector<double> coeffs;
    Relation rel = Relation::less_equal;
    double rhs = 0.0;
};

/// maximize c.x subject to the listed constraints and x >= 0.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<LpConstraint> constraints;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> values;
    double objective_value = 0.0;
};

/// Two-phase dense simplex with Bland's anti-cycling rule (pivot tolerance
/// 1e-10). Built for the tiny per-state programs of the exact improvement
/// step (a few dozen variables); dense tableaus are deliberate.
/// Returns an optimal vertex, or the infeasible/unbounded classification.
/// Throws std::invalid_argument on dimension mismatch or non-finite input.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace spibb
