#include "spibb/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spibb {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-9;

// Dense two-phase simplex working state. Columns: structural variables,
// then slack/surplus, then artificials, then the rhs. Bland's rule (lowest
// eligible index everywhere) guarantees termination without cycling.
struct Tableau {
    int rows = 0;
    int cols = 0;  // excluding rhs
    std::vector<double> cells;  // rows x (cols + 1)
    std::vector<double> reduced;  // cols + 1; last entry = -(current objective)
    std::vector<int> basis;

    double& at(int r, int c) { return cells[static_cast<size_t>(r) * (cols + 1) + c]; }
    double at(int r, int c) const { return cells[static_cast<size_t>(r) * (cols + 1) + c]; }
    double& rhs(int r) { return cells[static_cast<size_t>(r) * (cols + 1) + cols]; }
    double rhs(int r) const { return cells[static_cast<size_t>(r) * (cols + 1) + cols]; }

    void pivot(int pr, int pc) {
        const double p = at(pr, pc);
        for (int c = 0; c <= cols; ++c) at(pr, c) /= p;
        for (int r = 0; r < rows; ++r) {
            if (r == pr) continue;
            double f = at(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        double f = reduced[static_cast<size_t>(pc)];
        if (f != 0.0) {
            for (int c = 0; c <= cols; ++c) {
                reduced[static_cast<size_t>(c)] -= f * at(pr, c);
            }
            reduced[static_cast<size_t>(pc)] = 0.0;
        }
        basis[static_cast<size_t>(pr)] = pc;
    }

    // Reduced costs for objective `c` (length cols, missing tail = 0) priced
    // out against the current basis.
    void price(const std::vector<double>& c) {
        reduced.assign(static_cast<size_t>(cols) + 1, 0.0);
        for (int j = 0; j < cols; ++j) {
            reduced[static_cast<size_t>(j)] = j < static_cast<int>(c.size()) ? c[static_cast<size_t>(j)] : 0.0;
        }
        for (int r = 0; r < rows; ++r) {
            int b = basis[static_cast<size_t>(r)];
            double cb = b < static_cast<int>(c.size()) ? c[static_cast<size_t>(b)] : 0.0;
            if (cb == 0.0) continue;
            for (int j = 0; j <= cols; ++j) reduced[static_cast<size_t>(j)] -= cb * at(r, j);
        }
    }

    // Bland iteration until optimal (returns true) or unbounded (false).
    // `usable` limits the entering columns (phase 2 must ignore artificials).
    bool run(int usable) {
        const long cap = 200000L + 2000L * (rows + cols);
        for (long iter = 0; iter < cap; ++iter) {
            int enter = -1;
            for (int j = 0; j < usable; ++j) {
                if (reduced[static_cast<size_t>(j)] > kPivotTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best_ratio = 0.0;
            for (int r = 0; r < rows; ++r) {
                double a = at(r, enter);
                if (a <= kPivotTol) continue;
                double ratio = rhs(r) / a;
                if (leave < 0 || ratio < best_ratio - kPivotTol ||
                    (std::abs(ratio - best_ratio) <= kPivotTol &&
                     basis[static_cast<size_t>(r)] < basis[static_cast<size_t>(leave)])) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("solve_lp: iteration limit exceeded");
    }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    const int n = static_cast<int>(lp.objective.size());
    if (n == 0) throw std::invalid_argument("solve_lp: empty objective");
    for (double c : lp.objective) {
        if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite objective coefficient");
    }
    const int m = static_cast<int>(lp.constraints.size());
    for (const LpConstraint& con : lp.constraints) {
        if (static_cast<int>(con.coeffs.size()) != n) {
            throw std::invalid_argument("solve_lp: constraint dimension mismatch");
        }
        if (!std::isfinite(con.rhs)) throw std::invalid_argument("solve_lp: non-finite rhs");
        for (double c : con.coeffs) {
            if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite constraint coefficient");
        }
    }

    // Orient every row to rhs >= 0; categories after flipping:
    // 0 = "<=" (slack), 1 = ">=" (surplus + artificial), 2 = "=" (artificial).
    std::vector<int> category(static_cast<size_t>(m));
    int n_slack = 0, n_artificial = 0;
    for (int i = 0; i < m; ++i) {
        const LpConstraint& con = lp.constraints[static_cast<size_t>(i)];
        bool flip = con.rhs < 0.0;
        int cat = con.rel == Relation::equal ? 2 : (flip ? 1 : 0);
        category[static_cast<size_t>(i)] = cat;
        if (cat == 0) ++n_slack;
        if (cat == 1) {
            ++n_slack;  // surplus column
            ++n_artificial;
        }
        if (cat == 2) ++n_artificial;
    }

    Tableau t;
    t.rows = m;
    t.cols = n + n_slack + n_artificial;
    t.cells.assign(static_cast<size_t>(m) * (t.cols + 1), 0.0);
    t.basis.assign(static_cast<size_t>(m), -1);
    const int art_start = n + n_slack;

    int slack_cursor = n;
    int art_cursor = art_start;
    for (int i = 0; i < m; ++i) {
        const LpConstraint& con = lp.constraints[static_cast<size_t>(i)];
        double sign = con.rhs < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) t.at(i, j) = sign * con.coeffs[static_cast<size_t>(j)];
        t.rhs(i) = sign * con.rhs;
        switch (category[static_cast<size_t>(i)]) {
            case 0:  // <=
                t.at(i, slack_cursor) = 1.0;
                t.basis[static_cast<size_t>(i)] = slack_cursor++;
                break;
            case 1:  // >=
                t.at(i, slack_cursor++) = -1.0;
                t.at(i, art_cursor) = 1.0;
                t.basis[static_cast<size_t>(i)] = art_cursor++;
                break;
            default:  // =
                t.at(i, art_cursor) = 1.0;
                t.basis[static_cast<size_t>(i)] = art_cursor++;
                break;
        }
    }

    // Phase 1: drive the artificial variables to zero.
    if (n_artificial > 0) {
        std::vector<double> phase1(static_cast<size_t>(t.cols), 0.0);
        for (int j = art_start; j < t.cols; ++j) phase1[static_cast<size_t>(j)] = -1.0;
        t.price(phase1);
        if (!t.run(t.cols)) {
            // The phase-1 objective is bounded above by 0; this is numerical.
            throw std::runtime_error("solve_lp: phase 1 reported unbounded");
        }
        double infeasibility = t.reduced[static_cast<size_t>(t.cols)];  // = sum of artificials
        if (infeasibility > kFeasTol) {
            return LpSolution{LpStatus::infeasible, {}, 0.0};
        }
        // Pivot lingering artificials out of the basis; rows that cannot
        // pivot are redundant and harmless (their artificial stays at 0).
        for (int r = 0; r < m; ++r) {
            if (t.basis[static_cast<size_t>(r)] < art_start) continue;
            for (int j = 0; j < art_start; ++j) {
                if (std::abs(t.at(r, j)) > kPivotTol) {
                    t.pivot(r, j);
                    break;
                }
            }
        }
    }

    // Phase 2: the real objective, artificial columns frozen out.
    t.price(lp.objective);
    for (int r = 0; r < m; ++r) {
        // A lingering basic artificial sits at (numerical) zero; clean it up.
        if (t.basis[static_cast<size_t>(r)] >= art_start) t.rhs(r) = 0.0;
    }
    if (!t.run(art_start)) {
        return LpSolution{LpStatus::unbounded, {}, 0.0};
    }

    LpSolution solution;
    solution.status = LpStatus::optimal;
    solution.values.assign(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < m; ++r) {
        int b = t.basis[static_cast<size_t>(r)];
        if (b < n) {
            double v = t.rhs(r);
            solution.values[static_cast<size_t>(b)] = v < 0.0 ? 0.0 : v;
        }
    }
    double objective = 0.0;
    for (int j = 0; j < n; ++j) objective += lp.objective[static_cast<size_t>(j)] * solution.values[static_cast<size_t>(j)];
    solution.objective_value = objective;
    return solution;
}

}  // namespace spibb
