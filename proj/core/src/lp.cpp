#include "maxmin/lp.hpp"

#include "maxmin/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace maxmin {

namespace {

constexpr double kRcTol = 1e-9;   // reduced cost below -kRcTol may enter
constexpr double kPivTol = 1e-10; // minimum acceptable pivot magnitude
constexpr double kFeasTol = 1e-9; // phase-1 optimum under this means feasible

constexpr double kInf = std::numeric_limits<double>::infinity();

// How caller variable j maps onto nonnegative internal columns.
enum class VarKind { shifted, flipped, split };
struct VarMap {
    VarKind kind;
    int col;      // first internal column
    double base;  // lo for shifted, hi for flipped
};

struct Tableau {
    Eigen::MatrixXd T;        // (m+1) x (ncols+1); last row = reduced costs, last col = rhs
    std::vector<int> basis;   // basic column per row
    std::vector<bool> dead;   // redundant rows excluded after phase 1
    int m = 0;
    int ncols = 0;

    double& rhs(int i) { return T(i, ncols); }
    double objective() const { return -T(m, ncols); }

    void pivot(int r, int c) {
        T.row(r) /= T(r, c);
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            const double f = T(i, c);
            if (f != 0.0) T.row(i) -= f * T.row(r);
        }
        basis[static_cast<std::size_t>(r)] = c;
    }
};

enum class PhaseOutcome { optimal, unbounded, iteration_limit };

PhaseOutcome run_simplex(Tableau& tab, const std::vector<bool>& allowed, long& pivots, long cap) {
    for (;;) {
        // Bland: smallest-index column with negative reduced cost enters.
        int enter = -1;
        for (int j = 0; j < tab.ncols; ++j) {
            if (allowed[static_cast<std::size_t>(j)] && tab.T(tab.m, j) < -kRcTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return PhaseOutcome::optimal;

        int leave = -1;
        double best = kInf;
        int leave_var = std::numeric_limits<int>::max();
        for (int i = 0; i < tab.m; ++i) {
            if (tab.dead[static_cast<std::size_t>(i)]) continue;
            const double a = tab.T(i, enter);
            if (a <= kPivTol) continue;
            const double ratio = tab.rhs(i) / a;
            const int var = tab.basis[static_cast<std::size_t>(i)];
            if (ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && var < leave_var)) {
                best = ratio;
                leave = i;
                leave_var = var;
            }
        }
        if (leave < 0) return PhaseOutcome::unbounded;

        tab.pivot(leave, enter);
        if (++pivots > cap) return PhaseOutcome::iteration_limit;
    }
}

} // namespace

LpResult dense_lp_solve(const LpProblem& lp) {
    const int n = static_cast<int>(lp.c.size());
    if (n <= 0) throw ValidationError("LP has no variables");
    const int m_ub = static_cast<int>(lp.b_ub.size());
    const int m_eq = static_cast<int>(lp.b_eq.size());
    if ((m_ub > 0 && lp.A_ub.cols() != n) || (m_eq > 0 && lp.A_eq.cols() != n))
        throw ValidationError("LP constraint matrix width does not match c");
    if (m_ub > 0 && lp.A_ub.rows() != m_ub) throw ValidationError("A_ub/b_ub row mismatch");
    if (m_eq > 0 && lp.A_eq.rows() != m_eq) throw ValidationError("A_eq/b_eq row mismatch");

    Eigen::VectorXd lo = lp.lo.size() ? lp.lo : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd hi = lp.hi.size() ? lp.hi : Eigen::VectorXd::Constant(n, kInf);
    if (lo.size() != n || hi.size() != n) throw ValidationError("LP bounds length mismatch");
    for (int j = 0; j < n; ++j)
        if (lo(j) > hi(j)) throw ValidationError("LP bounds cross at variable " + std::to_string(j));

    const Eigen::VectorXd c_int = lp.maximize ? Eigen::VectorXd(-lp.c) : lp.c;

    // --- variable translation to u >= 0 ---------------------------------
    std::vector<VarMap> vmap(static_cast<std::size_t>(n));
    int ns = 0;        // internal structural columns
    int n_bound = 0;   // extra rows u_j <= hi - lo
    for (int j = 0; j < n; ++j) {
        auto& vm = vmap[static_cast<std::size_t>(j)];
        vm.col = ns;
        if (std::isfinite(lo(j))) {
            vm.kind = VarKind::shifted;
            vm.base = lo(j);
            ns += 1;
            if (std::isfinite(hi(j))) ++n_bound;
        } else if (std::isfinite(hi(j))) {
            vm.kind = VarKind::flipped;
            vm.base = hi(j);
            ns += 1;
        } else {
            vm.kind = VarKind::split;
            vm.base = 0.0;
            ns += 2;
        }
    }
    const bool pure_standard_form = (m_ub == 0 && n_bound == 0 && lo.isZero(0.0) &&
                                     !hi.array().isFinite().any());

    const int m_rows = m_ub + n_bound + m_eq;
    const int n_slack = m_ub + n_bound;

    // Raw rows in internal variables: [structural | slack-placeholder] u ? rhs
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m_rows, ns);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m_rows);
    // Row r of the caller system feeding internal row i (for Farkas mapping).
    // Rows: [0, m_ub) ub, [m_ub, m_ub+n_bound) synthetic bounds, rest eq.
    auto emit = [&](int row, const Eigen::RowVectorXd& coeffs, double rhs_val) {
        double r = rhs_val;
        for (int j = 0; j < n; ++j) {
            const auto& vm = vmap[static_cast<std::size_t>(j)];
            const double a = coeffs(j);
            if (a == 0.0) continue;
            switch (vm.kind) {
            case VarKind::shifted:
                A(row, vm.col) += a;
                r -= a * vm.base;
                break;
            case VarKind::flipped:
                A(row, vm.col) -= a;
                r -= a * vm.base;
                break;
            case VarKind::split:
                A(row, vm.col) += a;
                A(row, vm.col + 1) -= a;
                break;
            }
        }
        b(row) = r;
    };

    for (int i = 0; i < m_ub; ++i) emit(i, lp.A_ub.row(i), lp.b_ub(i));
    {
        int row = m_ub;
        for (int j = 0; j < n; ++j) {
            const auto& vm = vmap[static_cast<std::size_t>(j)];
            if (vm.kind == VarKind::shifted && std::isfinite(hi(j))) {
                A(row, vm.col) = 1.0;
                b(row) = hi(j) - lo(j);
                ++row;
            }
        }
    }
    for (int i = 0; i < m_eq; ++i) emit(m_ub + n_bound + i, lp.A_eq.row(i), lp.b_eq(i));

    // Internal objective over structural columns.
    Eigen::VectorXd c_struct = Eigen::VectorXd::Zero(ns);
    for (int j = 0; j < n; ++j) {
        const auto& vm = vmap[static_cast<std::size_t>(j)];
        switch (vm.kind) {
        case VarKind::shifted: c_struct(vm.col) += c_int(j); break;
        case VarKind::flipped: c_struct(vm.col) -= c_int(j); break;
        case VarKind::split:
            c_struct(vm.col) += c_int(j);
            c_struct(vm.col + 1) -= c_int(j);
            break;
        }
    }

    // --- row equilibration and slack orientation ------------------------
    Eigen::VectorXd row_scale(m_rows); // multiplier applied to caller row i
    for (int i = 0; i < m_rows; ++i) {
        double norm = A.row(i).cwiseAbs().maxCoeff();
        if (norm < 1e-300) norm = 1.0;
        double f = 1.0 / norm;
        if (b(i) * f < 0.0) f = -f;
        A.row(i) *= f;
        b(i) *= f;
        row_scale(i) = f;
    }

    // --- tableau assembly -------------------------------------------------
    // Columns: [structural ns | slacks n_slack | artificials (counted below)]
    std::vector<int> art_of_row(static_cast<std::size_t>(m_rows), -1);
    std::vector<int> slack_of_row(static_cast<std::size_t>(m_rows), -1);
    int n_art = 0;
    for (int i = 0; i < m_rows; ++i) {
        const bool is_ub_row = i < n_slack;
        if (is_ub_row && row_scale(i) > 0.0) continue; // +1 slack can be basic
        ++n_art;
    }

    Tableau tab;
    tab.m = m_rows;
    tab.ncols = ns + n_slack + n_art;
    tab.T = Eigen::MatrixXd::Zero(m_rows + 1, tab.ncols + 1);
    tab.basis.assign(static_cast<std::size_t>(m_rows), -1);
    tab.dead.assign(static_cast<std::size_t>(m_rows), false);

    tab.T.block(0, 0, m_rows, ns) = A;
    {
        int art = ns + n_slack;
        for (int i = 0; i < m_rows; ++i) {
            const bool is_ub_row = i < n_slack;
            if (is_ub_row) {
                const int sc = ns + i;
                slack_of_row[static_cast<std::size_t>(i)] = sc;
                tab.T(i, sc) = row_scale(i) > 0.0 ? 1.0 : -1.0;
            }
            if (is_ub_row && row_scale(i) > 0.0) {
                tab.basis[static_cast<std::size_t>(i)] = ns + i;
            } else {
                art_of_row[static_cast<std::size_t>(i)] = art;
                tab.T(i, art) = 1.0;
                tab.basis[static_cast<std::size_t>(i)] = art;
                ++art;
            }
            tab.rhs(i) = b(i);
        }
    }

    std::vector<bool> allowed(static_cast<std::size_t>(tab.ncols), true);
    long pivots = 0;
    const long cap = 20000 + 50L * (m_rows + tab.ncols);

    LpResult result;

    // --- phase 1 ----------------------------------------------------------
    bool need_phase1 = n_art > 0;
    if (need_phase1) {
        for (int j = ns + n_slack; j < tab.ncols; ++j) tab.T(m_rows, j) = 1.0;
        for (int i = 0; i < m_rows; ++i)
            if (tab.basis[static_cast<std::size_t>(i)] >= ns + n_slack)
                tab.T.row(m_rows) -= tab.T.row(i);

        PhaseOutcome out = run_simplex(tab, allowed, pivots, cap);
        result.pivots = pivots;
        if (out == PhaseOutcome::iteration_limit || out == PhaseOutcome::unbounded) {
            result.status = LpStatus::iteration_limit;
            return result;
        }

        if (tab.objective() > kFeasTol * (1.0 + b.cwiseAbs().maxCoeff())) {
            result.status = LpStatus::infeasible;
            if (pure_standard_form) {
                // Row multipliers certify emptiness: y_i = 1 - redcost(artificial_i),
                // mapped back through the row scaling.
                Eigen::VectorXd y(m_rows);
                for (int i = 0; i < m_rows; ++i) {
                    const int aj = art_of_row[static_cast<std::size_t>(i)];
                    y(i) = (1.0 - tab.T(m_rows, aj)) * row_scale(i);
                }
                const double norm = y.cwiseAbs().maxCoeff();
                if (norm > 1e-300) result.farkas = y / norm;
            }
            return result;
        }

        // Drive basic artificials out; rows that cannot pivot are redundant.
        for (int i = 0; i < m_rows; ++i) {
            if (tab.basis[static_cast<std::size_t>(i)] < ns + n_slack) continue;
            int col = -1;
            for (int j = 0; j < ns + n_slack; ++j) {
                if (std::abs(tab.T(i, j)) > kPivTol) {
                    col = j;
                    break;
                }
            }
            if (col >= 0)
                tab.pivot(i, col);
            else
                tab.dead[static_cast<std::size_t>(i)] = true;
        }
        for (int j = ns + n_slack; j < tab.ncols; ++j) allowed[static_cast<std::size_t>(j)] = false;
    }

    // --- phase 2 ----------------------------------------------------------
    tab.T.row(m_rows).setZero();
    tab.T.block(m_rows, 0, 1, ns) = c_struct.transpose();
    for (int i = 0; i < m_rows; ++i) {
        const int bj = tab.basis[static_cast<std::size_t>(i)];
        if (bj < ns && c_struct(bj) != 0.0) tab.T.row(m_rows) -= c_struct(bj) * tab.T.row(i);
    }

    PhaseOutcome out = run_simplex(tab, allowed, pivots, cap);
    result.pivots = pivots;
    if (out == PhaseOutcome::iteration_limit) {
        result.status = LpStatus::iteration_limit;
        return result;
    }
    if (out == PhaseOutcome::unbounded) {
        result.status = LpStatus::unbounded;
        return result;
    }

    // --- solution extraction ----------------------------------------------
    Eigen::VectorXd u = Eigen::VectorXd::Zero(ns);
    for (int i = 0; i < m_rows; ++i) {
        const int bj = tab.basis[static_cast<std::size_t>(i)];
        if (bj < ns) u(bj) = tab.rhs(i);
    }
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) {
        const auto& vm = vmap[static_cast<std::size_t>(j)];
        switch (vm.kind) {
        case VarKind::shifted: x(j) = vm.base + u(vm.col); break;
        case VarKind::flipped: x(j) = vm.base - u(vm.col); break;
        case VarKind::split: x(j) = u(vm.col) - u(vm.col + 1); break;
        }
    }

    result.status = LpStatus::optimal;
    result.x = x;
    result.objective = lp.c.dot(x);
    return result;
}

} // namespace maxmin
