// lp.hpp - self-contained dense linear programming.
//
// solve() is a two-phase primal simplex on the full tableau: phase 1
// introduces artificial variables only for rows whose slack cannot start
// basic, phase 2 optimizes the true objective from the feasible basis.
// Dantzig pricing runs until 10(n+k) pivots, then Bland's rule takes over to
// guarantee termination on degenerate problems.
//
// enumerate_vertices_oracle() is an exact brute-force reference for small
// problems: it checks every basic point formed by n active constraints or
// bounds. It exists to test solve(), not to be fast.

#ifndef SETCLF_LP_HPP
#define SETCLF_LP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "setclf/errors.hpp"
#include "setclf/linalg.hpp"

namespace setclf {

// Inequality-form program: minimize c'z subject to G z <= h, with each
// variable bounded below by 0 or free (lower bound -inf).
struct LpProblem {
    Vector objective;               // c, size n
    Matrix constraint_matrix;       // G, k x n
    Vector constraint_rhs;          // h, size k
    Vector variable_lower_bounds;   // size n; every entry is 0 or -inf

    std::size_t num_variables() const { return objective.size(); }
    std::size_t num_constraints() const { return constraint_rhs.size(); }

    bool is_free(std::size_t j) const {
        return variable_lower_bounds[j] == -std::numeric_limits<double>::infinity();
    }

    void validate() const {
        const std::size_t n = num_variables();
        const std::size_t k = num_constraints();
        if (constraint_matrix.rows() != k || constraint_matrix.cols() != n ||
            variable_lower_bounds.size() != n) {
            throw DimensionMismatchError("LpProblem: inconsistent dimensions");
        }
        for (double v : objective) {
            if (!std::isfinite(v)) throw DimensionMismatchError("LpProblem: non-finite objective");
        }
        for (double v : constraint_matrix.data()) {
            if (!std::isfinite(v)) throw DimensionMismatchError("LpProblem: non-finite constraint");
        }
        for (double v : constraint_rhs) {
            if (!std::isfinite(v)) throw DimensionMismatchError("LpProblem: non-finite rhs");
        }
        for (double v : variable_lower_bounds) {
            if (v != 0.0 && v != -std::numeric_limits<double>::infinity()) {
                throw DimensionMismatchError("LpProblem: lower bounds must be 0 or -inf");
            }
        }
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vector solution;               // size n iff Optimal
    double objective_value = 0.0;  // meaningful iff Optimal
    std::size_t iterations = 0;
};

struct LpOptions {
    std::size_t max_pivots = 0;  // 0 means the default 50 (n + k)
};

namespace lp_detail {

constexpr double kFeasTol = 1e-8;
constexpr double kPivotTol = 1e-10;
constexpr double kReducedCostTol = 1e-9;

// Full-tableau simplex state. Rows 0..k-1 are constraints, row k is the
// active objective row; the last column is the RHS.
class Tableau {
public:
    std::size_t k = 0;            // constraint rows
    std::size_t width = 0;        // columns incl. RHS
    std::vector<double> cells;    // (k + 2) x width, row-major
    std::vector<std::size_t> basis;

    double* row(std::size_t i) { return cells.data() + i * width; }
    const double* row(std::size_t i) const { return cells.data() + i * width; }

    double& at(std::size_t i, std::size_t j) { return cells[i * width + j]; }

    // Eliminate the pivot column from every row except `r`.
    void pivot(std::size_t r, std::size_t col, std::size_t active_rows) {
        double* pr = row(r);
        const double piv = pr[col];
        for (std::size_t j = 0; j < width; ++j) pr[j] /= piv;
        pr[col] = 1.0;
        for (std::size_t i = 0; i < active_rows; ++i) {
            if (i == r) continue;
            double* ri = row(i);
            const double f = ri[col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) ri[j] -= f * pr[j];
            ri[col] = 0.0;
        }
        basis[r] = col;
    }
};

}  // namespace lp_detail

// Two-phase revised-tableau simplex. Optimal solutions are vertex solutions;
// the Bland switch guarantees termination. Throws IterationLimitError when
// the pivot budget is exhausted (numerical trouble; never silently returns).
inline LpSolution solve(const LpProblem& problem, const LpOptions& options = {}) {
    using namespace lp_detail;
    problem.validate();

    const std::size_t n = problem.num_variables();
    const std::size_t k = problem.num_constraints();

    // Standard-form variable layout: bounded z_j maps to one column, free
    // z_j to a (positive, negative) pair.
    std::vector<std::size_t> pos_col(n), neg_col(n, SIZE_MAX);
    std::size_t ns = 0;
    for (std::size_t j = 0; j < n; ++j) {
        pos_col[j] = ns++;
        if (problem.is_free(j)) neg_col[j] = ns++;
    }

    // Rows with negative rhs are flipped and receive an artificial variable.
    std::vector<bool> flipped(k);
    std::size_t num_art = 0;
    for (std::size_t i = 0; i < k; ++i) {
        flipped[i] = problem.constraint_rhs[i] < 0.0;
        if (flipped[i]) ++num_art;
    }

    const std::size_t slack0 = ns;
    const std::size_t art0 = ns + k;
    const std::size_t ncols = ns + k + num_art;

    Tableau t;
    t.k = k;
    t.width = ncols + 1;
    t.cells.assign((k + 2) * t.width, 0.0);
    t.basis.assign(k, 0);

    std::size_t next_art = art0;
    for (std::size_t i = 0; i < k; ++i) {
        const double sign = flipped[i] ? -1.0 : 1.0;
        double* ri = t.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double g = sign * problem.constraint_matrix(i, j);
            ri[pos_col[j]] = g;
            if (neg_col[j] != SIZE_MAX) ri[neg_col[j]] = -g;
        }
        ri[slack0 + i] = sign;
        ri[ncols] = sign * problem.constraint_rhs[i];
        if (flipped[i]) {
            ri[next_art] = 1.0;
            t.basis[i] = next_art++;
        } else {
            t.basis[i] = slack0 + i;
        }
    }

    // Row k: phase-1 reduced costs (cost 1 on artificials, canonicalized by
    // subtracting the artificial-basic rows). Row k+1: phase-2 costs.
    {
        double* obj1 = t.row(k);
        for (std::size_t i = 0; i < k; ++i) {
            if (!flipped[i]) continue;
            const double* ri = t.row(i);
            for (std::size_t j = 0; j <= ncols; ++j) obj1[j] -= ri[j];
        }
        for (std::size_t c = art0; c < ncols; ++c) obj1[c] = 0.0;
        double* obj2 = t.row(k + 1);
        for (std::size_t j = 0; j < n; ++j) {
            obj2[pos_col[j]] = problem.objective[j];
            if (neg_col[j] != SIZE_MAX) obj2[neg_col[j]] = -problem.objective[j];
        }
    }

    const std::size_t bland_after = 10 * (n + k);
    const std::size_t max_pivots =
        options.max_pivots > 0 ? options.max_pivots : 50 * (n + k);
    std::size_t pivots = 0;

    // Runs the simplex loop on objective row `obj_row`, updating rows
    // 0..active_rows-1. Returns false when unbounded.
    auto run_phase = [&](std::size_t obj_row, std::size_t active_rows,
                         std::size_t entering_limit) -> bool {
        for (;;) {
            const double* d = t.row(obj_row);
            std::size_t col = SIZE_MAX;
            if (pivots < bland_after) {
                double best = -kReducedCostTol;
                for (std::size_t j = 0; j < entering_limit; ++j) {
                    if (d[j] < best) {
                        best = d[j];
                        col = j;
                    }
                }
            } else {
                for (std::size_t j = 0; j < entering_limit; ++j) {
                    if (d[j] < -kReducedCostTol) {
                        col = j;
                        break;
                    }
                }
            }
            if (col == SIZE_MAX) return true;  // optimal for this phase

            // Ratio test in two passes: find the minimum ratio, then break
            // ties toward artificial rows (flushes them in phase 1) and
            // lowest basic index (Bland-compatible).
            double min_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < t.k; ++i) {
                const double a = t.at(i, col);
                if (a <= kPivotTol) continue;
                min_ratio = std::min(min_ratio, std::max(t.at(i, ncols), 0.0) / a);
            }
            if (min_ratio == std::numeric_limits<double>::infinity()) {
                return false;  // unbounded direction
            }
            std::size_t r = SIZE_MAX;
            for (std::size_t i = 0; i < t.k; ++i) {
                const double a = t.at(i, col);
                if (a <= kPivotTol) continue;
                if (std::max(t.at(i, ncols), 0.0) / a > min_ratio + kFeasTol) continue;
                if (r == SIZE_MAX) {
                    r = i;
                    continue;
                }
                const bool cand_art = t.basis[i] >= art0;
                const bool cur_art = t.basis[r] >= art0;
                if (cand_art != cur_art ? cand_art : t.basis[i] < t.basis[r]) r = i;
            }

            if (++pivots > max_pivots) {
                throw IterationLimitError("lp::solve: pivot limit of " +
                                          std::to_string(max_pivots) + " exceeded");
            }
            t.pivot(r, col, active_rows);
        }
    };

    // Phase 1: minimize the sum of artificials over all rows incl. both
    // objective rows, entering restricted to structural + slack columns.
    if (num_art > 0) {
        if (!run_phase(k, k + 2, art0)) {
            // Cannot happen: the phase-1 objective is bounded below by 0.
            throw IterationLimitError("lp::solve: phase 1 reported unbounded");
        }
        const double infeasibility = -t.at(k, ncols);
        if (infeasibility > kFeasTol) {
            return LpSolution{LpStatus::Infeasible, {}, 0.0, pivots};
        }
        // Drive any leftover zero-level artificials out of the basis where a
        // structural pivot exists; rows where none exists are redundant and
        // stay parked at zero.
        for (std::size_t i = 0; i < k; ++i) {
            if (t.basis[i] < art0) continue;
            for (std::size_t j = 0; j < art0; ++j) {
                if (std::abs(t.at(i, j)) > kPivotTol) {
                    t.pivot(i, j, k + 2);
                    break;
                }
            }
        }
    }

    // Phase 2 on the true objective.
    if (!run_phase(k + 1, k + 2, art0)) {
        return LpSolution{LpStatus::Unbounded, {}, 0.0, pivots};
    }

    Vector x_std(ns, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (t.basis[i] < ns) x_std[t.basis[i]] = t.at(i, ncols);
    }
    LpSolution out;
    out.status = LpStatus::Optimal;
    out.iterations = pivots;
    out.solution.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.solution[j] = x_std[pos_col[j]];
        if (neg_col[j] != SIZE_MAX) out.solution[j] -= x_std[neg_col[j]];
    }
    out.objective_value = dot(problem.objective, out.solution);
    return out;
}

namespace lp_detail {

// Gaussian elimination with partial pivoting on an n x n active-constraint
// system; returns false when (numerically) singular.
inline bool solve_square(std::vector<std::vector<double>> a, Vector b, Vector& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i) {
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        }
        if (std::abs(a[piv][col]) < 1e-9) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = a[i][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[i][j] -= f * a[col][j];
            b[i] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= a[ii][j] * x[j];
        x[ii] = acc / a[ii][ii];
    }
    return true;
}

struct VertexScan {
    bool found = false;
    double objective = 0.0;
    Vector point;
    bool on_box = false;
    std::size_t subsets = 0;
};

// Enumerate every basic point of the problem intersected with the box
// |z_j| <= box; track the best feasible one.
inline VertexScan scan_vertices(const LpProblem& problem, double box) {
    const std::size_t n = problem.num_variables();
    const std::size_t k = problem.num_constraints();

    // Constraint pool rows (g, h) meaning g.z <= h: problem rows, lower
    // bounds for nonnegative variables, and the artificial box.
    std::vector<Vector> g;
    Vector h;
    for (std::size_t i = 0; i < k; ++i) {
        Vector row(n);
        for (std::size_t j = 0; j < n; ++j) row[j] = problem.constraint_matrix(i, j);
        g.push_back(std::move(row));
        h.push_back(problem.constraint_rhs[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Vector row(n, 0.0);
        row[j] = -1.0;
        g.push_back(row);
        h.push_back(problem.is_free(j) ? box : 0.0);
        row[j] = 1.0;
        g.push_back(std::move(row));
        h.push_back(box);
    }
    const std::size_t pool = g.size();

    VertexScan best;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;

    const double feas_tol = 1e-7 * std::max(1.0, box * 1e-6);
    for (;;) {
        ++best.subsets;
        std::vector<std::vector<double>> a(n, std::vector<double>(n));
        Vector b(n);
        for (std::size_t r = 0; r < n; ++r) {
            a[r] = g[idx[r]];
            b[r] = h[idx[r]];
        }
        Vector z;
        if (solve_square(std::move(a), std::move(b), z)) {
            bool feasible = true;
            for (std::size_t i = 0; i < pool && feasible; ++i) {
                feasible = dot(g[i], z) <= h[i] + feas_tol;
            }
            if (feasible) {
                const double obj = dot(problem.objective, z);
                if (!best.found || obj < best.objective - 1e-12) {
                    best.found = true;
                    best.objective = obj;
                    best.point = z;
                    best.on_box = false;
                    for (double v : z) {
                        if (std::abs(v) >= box * (1.0 - 1e-9)) best.on_box = true;
                    }
                }
            }
        }
        // Next n-combination of pool indices, lexicographic.
        std::size_t i = n;
        while (i-- > 0) {
            if (idx[i] != i + pool - n) {
                ++idx[i];
                for (std::size_t j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

}  // namespace lp_detail

// Exact reference optimum for small problems (n <= 8, k <= 12); throws
// TooLargeError beyond that guard. Unboundedness is detected by comparing
// optima under two artificial boxes of different radius.
inline LpSolution enumerate_vertices_oracle(const LpProblem& problem) {
    problem.validate();
    const std::size_t n = problem.num_variables();
    const std::size_t k = problem.num_constraints();
    if (n > 8 || k > 12) {
        throw TooLargeError("enumerate_vertices_oracle: n <= 8 and k <= 12 required");
    }

    const double box = 1e6;
    auto first = lp_detail::scan_vertices(problem, box);
    LpSolution out;
    out.iterations = first.subsets;
    if (!first.found) {
        out.status = LpStatus::Infeasible;
        return out;
    }
    if (first.on_box) {
        auto second = lp_detail::scan_vertices(problem, 16.0 * box);
        out.iterations += second.subsets;
        if (second.found &&
            second.objective < first.objective - 1e-6 * (1.0 + std::abs(first.objective))) {
            out.status = LpStatus::Unbounded;
            return out;
        }
    }
    out.status = LpStatus::Optimal;
    out.solution = first.point;
    out.objective_value = first.objective;
    return out;
}

}  // namespace setclf

#endif  // SETCLF_LP_HPP
