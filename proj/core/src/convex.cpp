#include "maxmin/convex.hpp"

#include "maxmin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maxmin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStrictCutSlack = 1e-12;

long default_ellipsoid_iters(int dim, double radius) {
    // Enough steps to shrink the start ball's volume by ~e^46 at the exact
    // per-step rate exp(-1/(2(d+1))).
    const double per_unit = 2.0 * (dim + 1);
    return static_cast<long>(std::ceil(per_unit * (dim * std::log(std::max(radius, 2.0)) + 46.0)));
}

void check_strict_violation(const Halfspace& h, const Eigen::VectorXd& x, long iteration) {
    if (h.violation(x) < -kStrictCutSlack)
        throw SolverBreakdownError("separation oracle returned a cut the query point satisfies",
                                   iteration);
}

// Minimal-volume central-cut update, then dilated so the volume ratio of every
// step is exactly exp(-1/(2(d+1))). Dilation keeps the half-ellipsoid covered.
// The rank-1 downdate is applied to the square-root factor, never the Gram
// matrix: long searches drive the condition number past 1/eps, where the
// assembled matrix has roundoff eigenvalues but the factor stays full rank.
void central_cut_update(EllipsoidState& st, const Eigen::VectorXd& normal, int dim) {
    Eigen::VectorXd u = st.factor.transpose() * normal;
    const double un = u.norm();
    if (!(un > 0.0) || !std::isfinite(un))
        throw SolverBreakdownError("ellipsoid shape degenerate along cut normal", st.iteration);
    u /= un;
    Eigen::VectorXd gt = st.factor * u; // shape*normal / sqrt(normal'*shape*normal)

    const double d = static_cast<double>(dim);
    if (dim == 1) {
        st.center -= 0.5 * gt;
        st.factor *= std::exp(-0.25); // half-interval cover dilated to ratio e^{-1/4}
    } else {
        st.center -= gt / (d + 1.0);
        // (I - sigma u u') squared is the minimal-volume downdate I - beta u u'.
        const double beta = 2.0 / (d + 1.0);
        const double sigma = 1.0 - std::sqrt(1.0 - beta);
        const double log_rmin =
            std::log(d / (d + 1.0)) + 0.5 * (d - 1.0) * std::log(d * d / (d * d - 1.0));
        const double s = std::exp((2.0 / d) * (-1.0 / (2.0 * (d + 1.0)) - log_rmin));
        const double scale = std::sqrt(s * d * d / (d * d - 1.0));
        st.factor = scale * (st.factor - sigma * gt * u.transpose());
    }
    if (!st.factor.allFinite())
        throw SolverBreakdownError("ellipsoid update produced a non-finite factor", st.iteration);
    st.shape = st.factor * st.factor.transpose();
}

// Unit-normal halfspace list with barrier helpers for the analytic center.
struct ConstraintSet {
    std::vector<Eigen::VectorXd> a;
    std::vector<double> b;
    int dim = 0;

    void add(const Eigen::VectorXd& normal, double offset, long iteration) {
        const double n = normal.norm();
        if (!(n > 1e-300) || !std::isfinite(n))
            throw SolverBreakdownError("degenerate cut normal", iteration);
        a.push_back(normal / n);
        b.push_back(offset / n);
    }

    int count() const { return static_cast<int>(a.size()); }

    double min_slack(const Eigen::VectorXd& x) const {
        double m = kInf;
        for (int i = 0; i < count(); ++i)
            m = std::min(m, b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)].dot(x));
        return m;
    }
};

// max r  s.t.  a_i.x + r <= b_i  (a_i unit). r* <= 0 means empty interior.
LpResult chebyshev_lp(const ConstraintSet& cs) {
    const int d = cs.dim;
    const int m = cs.count();
    LpProblem lp;
    lp.A_ub.resize(m, d + 1);
    lp.b_ub.resize(m);
    for (int i = 0; i < m; ++i) {
        lp.A_ub.block(i, 0, 1, d) = cs.a[static_cast<std::size_t>(i)].transpose();
        lp.A_ub(i, d) = 1.0;
        lp.b_ub(i) = cs.b[static_cast<std::size_t>(i)];
    }
    lp.c = Eigen::VectorXd::Zero(d + 1);
    lp.c(d) = 1.0;
    lp.maximize = true;
    lp.lo = Eigen::VectorXd::Constant(d + 1, -kInf);
    lp.hi = Eigen::VectorXd::Constant(d + 1, kInf);
    lp.lo(d) = 0.0;
    return dense_lp_solve(lp);
}

LpResult direction_lp(const ConstraintSet& cs, const Eigen::VectorXd& obj, bool maximize) {
    const int d = cs.dim;
    const int m = cs.count();
    LpProblem lp;
    lp.A_ub.resize(m, d);
    lp.b_ub.resize(m);
    for (int i = 0; i < m; ++i) {
        lp.A_ub.row(i) = cs.a[static_cast<std::size_t>(i)].transpose();
        lp.b_ub(i) = cs.b[static_cast<std::size_t>(i)];
    }
    lp.c = obj;
    lp.maximize = maximize;
    lp.lo = Eigen::VectorXd::Constant(d, -kInf);
    lp.hi = Eigen::VectorXd::Constant(d, kInf);
    return dense_lp_solve(lp);
}

struct CenterOutcome {
    bool ok = false;
    bool degraded = false;
    Eigen::VectorXd x;
};

// Damped Newton on the log-barrier of the constraint set. Falls back to the
// center of the localization polytope's bounding box when Newton stalls.
CenterOutcome analytic_center(const ConstraintSet& cs, const Eigen::VectorXd& start,
                              double scale, const ConvexConfig& cfg) {
    CenterOutcome out;
    const int d = cs.dim;
    Eigen::VectorXd x = start;

    if (cs.min_slack(x) <= 1e-13 * scale) return out; // caller must supply interior start

    for (int step = 0; step < cfg.newton_max_steps; ++step) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < cs.count(); ++i) {
            const auto& ai = cs.a[static_cast<std::size_t>(i)];
            const double s = cs.b[static_cast<std::size_t>(i)] - ai.dot(x);
            g += ai / s;
            H += (ai * ai.transpose()) / (s * s);
        }
        if (g.norm() < cfg.newton_tol) {
            out.ok = true;
            out.x = x;
            return out;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) {
            H += 1e-12 * H.trace() / d * Eigen::MatrixXd::Identity(d, d);
            llt.compute(H);
            if (llt.info() != Eigen::Success) break;
        }
        Eigen::VectorXd dx = -llt.solve(g);
        const double lambda2 = -g.dot(dx);
        if (!std::isfinite(lambda2)) break;
        // Newton decrement, the scale-free distance to the center. The raw
        // gradient norm is unusable on thin localization sets, where tiny
        // slacks make the barrier terms huge and cancellation noisy.
        if (lambda2 <= 1e-12) {
            out.ok = true;
            out.x = x;
            return out;
        }
        const double lambda = std::sqrt(lambda2);
        double t = lambda <= 0.25 ? 1.0 : 1.0 / (1.0 + lambda);
        int halvings = 0;
        while (cs.min_slack(x + t * dx) <= 0.0 && halvings++ < 60) t *= 0.5;
        if (halvings >= 60) break;
        x += t * dx;
    }
    return out;
}

} // namespace

FeasibilityResult ellipsoid_feasibility(const SeparationOracle& oracle, int dim, double radius,
                                        long max_iters, const ConvexConfig& cfg,
                                        const Eigen::VectorXd& center0) {
    if (dim <= 0) throw ValidationError("ellipsoid dimension must be positive");
    if (!(radius > 0.0)) throw ValidationError("ellipsoid radius must be positive");
    if (center0.size() != 0 && center0.size() != dim)
        throw ValidationError("ellipsoid start center has wrong dimension");
    if (max_iters <= 0) max_iters = default_ellipsoid_iters(dim, radius);

    FeasibilityResult res;
    EllipsoidState& st = res.final_state;
    st.center = center0.size() ? center0 : Eigen::VectorXd::Zero(dim);
    st.shape = radius * radius * Eigen::MatrixXd::Identity(dim, dim);
    st.factor = radius * Eigen::MatrixXd::Identity(dim, dim);

    for (long iter = 0; iter < max_iters; ++iter) {
        st.iteration = iter;
        res.report.iterations = iter + 1;
        SeparationResponse resp = oracle(st.center);
        ++res.report.oracle_calls;
        if (cfg.keep_query_log) res.report.query_log.push_back({st.center, resp.cut});
        if (resp.inside()) {
            res.report.status = SolveStatus::optimal;
            res.point = st.center;
            return res;
        }
        check_strict_violation(*resp.cut, st.center, iter);
        central_cut_update(st, resp.cut->normal, dim);
    }
    // Budget exhausted: with max_iters chosen from a volume argument this
    // certifies emptiness; otherwise it is a best-effort "not found".
    res.report.status = SolveStatus::infeasible;
    return res;
}

LinearOptResult maximize_linear(const SeparationOracle& oracle, const Eigen::VectorXd& c, int dim,
                                double radius, double eps, long max_iters_per_level,
                                const ConvexConfig& cfg, const Eigen::VectorXd& center0) {
    if (c.size() != dim) throw ValidationError("objective dimension mismatch");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");

    LinearOptResult out;
    auto merge = [&out](const SolveReport& r) {
        out.report.iterations += r.iterations;
        out.report.oracle_calls += r.oracle_calls;
        for (const auto& q : r.query_log) out.report.query_log.push_back(q);
    };

    auto probe = [&](bool with_level, double level) {
        SeparationOracle composite = [&](const Eigen::VectorXd& x) {
            if (with_level && c.dot(x) < level) {
                Halfspace h;
                h.normal = -c;
                h.offset = -level;
                return SeparationResponse::separate(std::move(h));
            }
            return oracle(x);
        };
        return ellipsoid_feasibility(composite, dim, radius, max_iters_per_level, cfg, center0);
    };

    FeasibilityResult first = probe(false, 0.0);
    merge(first.report);
    if (first.report.status != SolveStatus::optimal) {
        out.report.status = SolveStatus::infeasible;
        return out;
    }

    double lo = c.dot(first.point);
    out.x = first.point;
    Eigen::VectorXd ctr = center0.size() ? center0 : Eigen::VectorXd::Zero(dim);
    double hi = c.dot(ctr) + radius * c.norm();
    if (hi < lo) hi = lo;

    int levels = 0;
    while (hi - lo > eps && levels++ < 200) {
        const double mid = 0.5 * (lo + hi);
        FeasibilityResult r = probe(true, mid);
        merge(r.report);
        if (r.report.status == SolveStatus::optimal) {
            lo = c.dot(r.point);
            out.x = r.point;
            if (lo > hi) hi = lo;
        } else {
            hi = mid;
        }
    }

    out.report.status = (hi - lo <= eps) ? SolveStatus::optimal : SolveStatus::iteration_limit;
    out.value = lo;
    out.bracket = hi - lo;
    return out;
}

LinearOptResult accpm_minimize(const SeparationOracle& oracle, const Eigen::VectorXd& c,
                               const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                               double eps, long max_iters, const ConvexConfig& cfg) {
    const int d = static_cast<int>(c.size());
    if (box_lo.size() != d || box_hi.size() != d)
        throw ValidationError("accpm box dimension mismatch");
    for (int j = 0; j < d; ++j)
        if (!(box_lo(j) < box_hi(j))) throw ValidationError("accpm box is empty or degenerate");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    if (max_iters <= 0) max_iters = 80L * d + 240;

    const double scale = (box_hi - box_lo).lpNorm<Eigen::Infinity>();

    ConstraintSet cs; // box rows + oracle cuts; all valid for the feasible set
    cs.dim = d;
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(j) = 1.0;
        cs.add(e, box_hi(j), 0);
        cs.add(-e, -box_lo(j), 0);
    }
    const int n_static = cs.count();

    LinearOptResult out;
    out.report.status = SolveStatus::iteration_limit;

    double upper = kInf;
    double lower = -kInf;
    bool have_best = false;
    Eigen::VectorXd best;

    Eigen::VectorXd x_prev = 0.5 * (box_lo + box_hi);
    bool prev_valid = true;

    // The objective level cut sits this fraction of the bracket below the
    // incumbent, so every acceptance improves the incumbent by at least that
    // share and a proven-empty level set raises the lower bound by it. A cut
    // exactly at the incumbent can stall: degenerate fallback queries land on
    // its face and get re-accepted at the same value.
    constexpr double kLevelShare = 0.3;

    for (long iter = 0; iter < max_iters; ++iter) {
        out.report.iterations = iter + 1;

        // Working set = cs + optional objective level cut.
        ConstraintSet work = cs;
        double level = kInf;
        if (have_best) {
            const double gap =
                lower > -kInf ? std::max(upper - lower, eps) : std::max(1.0, eps);
            level = upper - kLevelShare * gap;
            work.add(c, level, iter);
        }

        // Lower bound / emptiness: LP over every known-valid constraint.
        LpResult lb = direction_lp(work, c, false);
        if (lb.status == LpStatus::infeasible) {
            if (!have_best) {
                // Only box + valid cuts involved: the feasible set is empty.
                LpResult pure = direction_lp(cs, c, false);
                if (pure.status == LpStatus::infeasible)
                    throw EmptyPolytopeError("cutting planes prove the feasible set empty");
                throw SolverBreakdownError("localization LP failed without an objective cut",
                                           iter);
            }
            // No feasible point lies below the level, so it bounds the optimum.
            lower = std::max(lower, level);
            if (upper - lower <= eps) {
                out.report.status = SolveStatus::optimal;
                break;
            }
            continue;
        }
        if (lb.status == LpStatus::optimal) lower = std::max(lower, lb.objective);
        if (have_best && upper - lower <= eps) {
            out.report.status = SolveStatus::optimal;
            break;
        }

        // Query point: analytic center, warm-started; Chebyshev restart or a
        // Kelley vertex step when the localization set degenerates.
        Eigen::VectorXd x_query;
        bool have_query = false;
        if (prev_valid && work.min_slack(x_prev) > 1e-12 * scale) {
            CenterOutcome co = analytic_center(work, x_prev, scale, cfg);
            if (co.ok) {
                x_query = co.x;
                have_query = true;
            }
        }
        if (!have_query) {
            LpResult cheb = chebyshev_lp(work);
            if (cheb.status == LpStatus::optimal && cheb.objective > 1e-10 * scale) {
                Eigen::VectorXd start = cheb.x.head(d);
                CenterOutcome co = analytic_center(work, start, scale, cfg);
                if (co.ok) {
                    x_query = co.x;
                    have_query = true;
                } else {
                    // Bounding box of the localization polytope, per config.
                    ++out.report.degraded_steps;
                    Eigen::VectorXd mid(d);
                    bool box_ok = true;
                    for (int j = 0; j < d && box_ok; ++j) {
                        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
                        e(j) = 1.0;
                        LpResult mn = direction_lp(work, e, false);
                        LpResult mx = direction_lp(work, e, true);
                        if (mn.status != LpStatus::optimal || mx.status != LpStatus::optimal)
                            box_ok = false;
                        else
                            mid(j) = 0.5 * (mn.objective + mx.objective);
                    }
                    if (box_ok) {
                        x_query = mid;
                        have_query = true;
                    }
                }
            }
            if (!have_query) {
                // Degenerate localization: fall back to the LP minimizer, which
                // sits on the level face, so acceptance still makes progress.
                if (lb.status != LpStatus::optimal)
                    throw SolverBreakdownError("localization set degenerated", iter);
                x_query = lb.x;
                have_query = true;
            }
        }

        SeparationResponse resp = oracle(x_query);
        ++out.report.oracle_calls;
        if (cfg.keep_query_log) out.report.query_log.push_back({x_query, resp.cut});

        if (resp.inside()) {
            const double val = c.dot(x_query);
            if (!have_best || val < upper) {
                upper = val;
                best = x_query;
                have_best = true;
            }
        } else {
            check_strict_violation(*resp.cut, x_query, iter);
            cs.add(resp.cut->normal, resp.cut->offset, iter);
            if (cfg.max_cuts > 0 && cs.count() - n_static > cfg.max_cuts) {
                // Drop the loosest oracle cut at the current query point.
                int drop = n_static;
                double worst = -kInf;
                for (int i = n_static; i < cs.count(); ++i) {
                    const double slack =
                        cs.b[static_cast<std::size_t>(i)] - cs.a[static_cast<std::size_t>(i)].dot(x_query);
                    if (slack > worst) {
                        worst = slack;
                        drop = i;
                    }
                }
                cs.a.erase(cs.a.begin() + drop);
                cs.b.erase(cs.b.begin() + drop);
            }
        }

        x_prev = x_query;
        prev_valid = true;

        if (have_best && upper - lower <= eps) {
            out.report.status = SolveStatus::optimal;
            break;
        }
    }

    if (!have_best) {
        if (out.report.status != SolveStatus::optimal)
            out.report.status = SolveStatus::iteration_limit;
        return out;
    }
    out.x = best;
    out.value = upper;
    out.bracket = std::max(0.0, upper - lower);
    if (out.report.status != SolveStatus::optimal && out.bracket <= eps)
        out.report.status = SolveStatus::optimal;
    return out;
}

CaratheodoryResult caratheodory_decompose(const Eigen::VectorXd& target,
                                          const Eigen::MatrixXd& points, double tol) {
    const int d = static_cast<int>(target.size());
    const int n = static_cast<int>(points.cols());
    if (points.rows() != d) throw ValidationError("caratheodory: point dimension mismatch");
    if (n == 0) throw ValidationError("caratheodory: no points given");

    LpProblem lp;
    lp.A_eq.resize(d + 1, n);
    lp.A_eq.topRows(d) = points;
    lp.A_eq.bottomRows(1).setOnes();
    lp.b_eq.resize(d + 1);
    lp.b_eq.head(d) = target;
    lp.b_eq(d) = 1.0;
    lp.c = Eigen::VectorXd::Zero(n);

    LpResult r = dense_lp_solve(lp);
    CaratheodoryResult out;
    if (r.status != LpStatus::optimal) return out;

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (r.x(i) > tol) {
            out.support.emplace_back(i, r.x(i));
            total += r.x(i);
        }
    }
    if (out.support.empty() || total <= 0.0) return out;
    for (auto& [idx, w] : out.support) w /= total;
    out.feasible = true;
    return out;
}

} // namespace maxmin
