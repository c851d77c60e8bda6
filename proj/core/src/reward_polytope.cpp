#include "maxmin/reward_polytope.hpp"

#include "maxmin/errors.hpp"

#include <cmath>
#include <string>

namespace maxmin {

namespace {

constexpr double kNormBox = 1.0;

Eigen::VectorXd unit(int k, int j, double sign = 1.0) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e(j) = sign;
    return e;
}

// Membership slack of the box, pins and explicit rows only.
std::optional<Halfspace> static_cut(const RewardSpec& spec,
                                    const std::vector<Halfspace>& static_rows,
                                    const Eigen::VectorXd& w, double tol) {
    for (int j = 0; j < spec.k; ++j) {
        if (w(j) > kNormBox + tol) return Halfspace{unit(spec.k, j), kNormBox};
        if (w(j) < -kNormBox - tol) return Halfspace{unit(spec.k, j, -1.0), kNormBox};
    }
    for (const auto& h : static_rows) {
        if (h.violation(w) > tol) return h;
    }
    return std::nullopt;
}

std::vector<Halfspace> build_static_rows(const RewardSpec& spec) {
    std::vector<Halfspace> rows;
    for (const auto& [idx, val] : spec.pinned) {
        rows.push_back({unit(spec.k, idx), val});
        rows.push_back({unit(spec.k, idx, -1.0), -val});
    }
    for (const auto& h : spec.halfspaces) rows.push_back(h);
    return rows;
}

} // namespace

void RewardSpec::validate() const {
    if (k < 1) throw ValidationError("reward spec k must be at least 1");
    for (const auto& [idx, val] : pinned) {
        if (idx < 0 || idx >= k)
            throw ValidationError("pinned feature index " + std::to_string(idx) +
                                  " out of range");
        if (val < -kNormBox || val > kNormBox)
            throw ValidationError("pinned value for feature " + std::to_string(idx) +
                                  " lies outside the norm box");
    }
    for (std::size_t i = 0; i < halfspaces.size(); ++i) {
        if (halfspaces[i].normal.size() != k)
            throw ValidationError("halfspace " + std::to_string(i) + " has wrong dimension");
        if (!(halfspaces[i].normal.norm() > 0.0))
            throw ValidationError("halfspace " + std::to_string(i) + " has zero normal");
    }
    const auto nexp = experts.size();
    switch (kind) {
    case RewardSpecKind::explicit_only:
        if (nexp != 0) throw ValidationError("explicit spec must not carry expert terms");
        break;
    case RewardSpecKind::expert_additive:
    case RewardSpecKind::expert_multiplicative:
        if (nexp != 1) throw ValidationError("single-expert spec needs exactly one expert term");
        break;
    case RewardSpecKind::multi_expert:
        if (nexp < 1) throw ValidationError("multi-expert spec needs at least one expert term");
        break;
    }
    for (std::size_t i = 0; i < experts.size(); ++i) {
        const auto& e = experts[i];
        e.task.validate();
        if (e.task.k() != k)
            throw ValidationError("expert " + std::to_string(i) +
                                  " task feature dimension differs from spec k");
        if (e.mu_e.size() != k)
            throw ValidationError("expert " + std::to_string(i) + " mu_e has wrong dimension");
        if (e.epsilon < 0.0)
            throw ValidationError("expert " + std::to_string(i) + " epsilon is negative");
        if (kind == RewardSpecKind::expert_multiplicative && e.epsilon >= 1.0)
            throw ValidationError("multiplicative epsilon must be below 1");
    }
}

RewardOracle::RewardOracle(RewardSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    cuts_ = build_static_rows(spec_);
    n_static_ = cuts_.size();
    planners_.reserve(spec_.experts.size());
    for (const auto& e : spec_.experts) planners_.push_back(std::make_unique<Planner>(e.task));
}

void RewardOracle::remember(const Halfspace& h) {
    for (std::size_t i = n_static_; i < cuts_.size(); ++i) {
        if ((cuts_[i].normal - h.normal).lpNorm<Eigen::Infinity>() < 1e-12 &&
            std::abs(cuts_[i].offset - h.offset) < 1e-12)
            return;
    }
    cuts_.push_back(h);
    if (cuts_.size() - n_static_ > 512) cuts_.erase(cuts_.begin() + static_cast<long>(n_static_));
}

SeparationResponse RewardOracle::query(const Eigen::VectorXd& w, double tol) {
    if (w.size() != spec_.k) throw ValidationError("query point has wrong dimension");

    std::vector<Halfspace> statics(cuts_.begin(), cuts_.begin() + static_cast<long>(n_static_));
    if (auto cut = static_cut(spec_, statics, w, tol)) return SeparationResponse::separate(*cut);

    const bool multiplicative = spec_.kind == RewardSpecKind::expert_multiplicative;
    for (std::size_t i = 0; i < spec_.experts.size(); ++i) {
        const ExpertTerm& e = spec_.experts[i];
        SolveResult best = planners_[i]->solve(w);
        ++expert_solves_;
        const double lhs = multiplicative ? (1.0 - e.epsilon) * best.value : best.value;
        const double rhs = e.mu_e.dot(w) + (multiplicative ? 0.0 : e.epsilon);
        if (lhs > rhs + tol) {
            Halfspace h;
            if (multiplicative) {
                if (best.value < 0.0)
                    throw ValidationError(
                        "multiplicative consistency cut requires a nonnegative optimal value");
                h.normal = (1.0 - e.epsilon) * best.mu - e.mu_e;
                h.offset = 0.0;
            } else {
                h.normal = best.mu - e.mu_e;
                h.offset = e.epsilon;
            }
            remember(h);
            return SeparationResponse::separate(std::move(h));
        }
    }
    return SeparationResponse::ok();
}

SeparationResponse so_reward(const RewardSpec& spec, const Eigen::VectorXd& w, double tol) {
    RewardOracle oracle(spec);
    return oracle.query(w, tol);
}

SeparationResponse wso_reward(const RewardSpec& spec, const Eigen::VectorXd& w,
                              const WsoConfig& cfg, const ApproxSolver& solver) {
    spec.validate();
    if (spec.kind != RewardSpecKind::expert_additive)
        throw ValidationError("weak membership is defined for single additive expert specs");
    if (w.size() != spec.k) throw ValidationError("query point has wrong dimension");
    if (!(cfg.eta >= 0.0)) throw ValidationError("weak oracle eta must be nonnegative");

    std::vector<Halfspace> statics = build_static_rows(spec);
    if (auto cut = static_cut(spec, statics, w, cfg.tol))
        return SeparationResponse::separate(*cut);

    const ExpertTerm& e = spec.experts.front();
    SolveResult near_best = solver(e.task, w, cfg.eta);
    if (near_best.value > e.mu_e.dot(w) + e.epsilon + cfg.tol) {
        Halfspace h;
        h.normal = near_best.mu - e.mu_e;
        h.offset = e.epsilon;
        return SeparationResponse::separate(std::move(h));
    }
    return SeparationResponse::ok();
}

namespace {

// Kelley rounds over the pooled halfspaces: minimize over the current outer
// relaxation, ask the oracle about the minimizer, repeat. An accepted LP
// minimizer is optimal over the true set to LP accuracy.
std::optional<MinOverRewardResult> pool_shortcut(RewardOracle& oracle,
                                                 const Eigen::VectorXd& direction, double tol,
                                                 SolveReport& report) {
    const int k = oracle.spec().k;
    Eigen::VectorXd prev;
    for (int round = 0; round < 50; ++round) {
        const auto& cuts = oracle.known_cuts();
        LpProblem lp;
        lp.A_ub.resize(static_cast<int>(cuts.size()), k);
        lp.b_ub.resize(static_cast<int>(cuts.size()));
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            lp.A_ub.row(static_cast<int>(i)) = cuts[i].normal.transpose();
            lp.b_ub(static_cast<int>(i)) = cuts[i].offset;
        }
        lp.c = direction;
        lp.lo = Eigen::VectorXd::Constant(k, -kNormBox);
        lp.hi = Eigen::VectorXd::Constant(k, kNormBox);
        LpResult r = dense_lp_solve(lp);
        if (r.status == LpStatus::infeasible)
            throw EmptyPolytopeError("reward set has no point satisfying its certified cuts");
        if (r.status != LpStatus::optimal) return std::nullopt;

        SeparationResponse resp = oracle.query(r.x, tol);
        ++report.oracle_calls;
        ++report.iterations;
        if (resp.inside()) {
            MinOverRewardResult out;
            out.w = r.x;
            out.value = direction.dot(r.x);
            out.report = report;
            out.report.status = SolveStatus::optimal;
            return out;
        }
        if (prev.size() && (prev - r.x).lpNorm<Eigen::Infinity>() < 1e-12) return std::nullopt;
        prev = r.x;
    }
    return std::nullopt;
}

} // namespace

MinOverRewardResult min_over_reward(RewardOracle& oracle, const Eigen::VectorXd& direction,
                                    double eps, InnerMethod method) {
    if (direction.size() != oracle.spec().k)
        throw ValidationError("direction has wrong dimension");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    const int k = oracle.spec().k;
    const double tol = eps / 10.0;

    SolveReport pool_report;
    if (auto hit = pool_shortcut(oracle, direction, tol, pool_report)) return *hit;

    SeparationOracle sep = [&](const Eigen::VectorXd& w) { return oracle.query(w, tol); };

    MinOverRewardResult out;
    if (method == InnerMethod::accpm) {
        LinearOptResult r = accpm_minimize(sep, direction, Eigen::VectorXd::Constant(k, -kNormBox),
                                           Eigen::VectorXd::Constant(k, kNormBox), eps);
        if (r.report.status != SolveStatus::optimal || r.x.size() == 0)
            throw SolverBreakdownError("inner minimization did not converge",
                                       r.report.iterations);
        out.w = r.x;
        out.value = r.value;
        out.report = r.report;
    } else {
        // maximize -direction.w over the set; ball of radius sqrt(k) covers the box
        LinearOptResult r = maximize_linear(sep, -direction, k, std::sqrt(double(k)) + 1e-6, eps);
        if (r.report.status == SolveStatus::infeasible)
            throw EmptyPolytopeError("ellipsoid search found no point of the reward set");
        if (r.report.status != SolveStatus::optimal || r.x.size() == 0)
            throw SolverBreakdownError("inner minimization did not converge",
                                       r.report.iterations);
        out.w = r.x;
        out.value = direction.dot(r.x);
        out.report = r.report;
    }
    out.report.iterations += pool_report.iterations;
    out.report.oracle_calls += pool_report.oracle_calls;
    return out;
}

MinOverRewardResult min_over_reward(const RewardSpec& spec, const Eigen::VectorXd& direction,
                                    double eps, InnerMethod method) {
    RewardOracle oracle(spec);
    return min_over_reward(oracle, direction, eps, method);
}

MinOverRewardResult min_over_reward_approx(const RewardSpec& spec,
                                           const Eigen::VectorXd& direction, const WsoConfig& cfg,
                                           const ApproxSolver& solver, double eps) {
    spec.validate();
    if (spec.kind != RewardSpecKind::expert_additive)
        throw ValidationError("approximate minimization needs a single additive expert spec");
    if (direction.size() != spec.k) throw ValidationError("direction has wrong dimension");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    const double epsilon = spec.experts.front().epsilon;
    if (!(epsilon > 0.0))
        throw ValidationError("approximate minimization needs a positive expert epsilon");
    for (const auto& [idx, val] : spec.pinned)
        if (val != 0.0)
            throw ValidationError("approximate minimization cannot honor nonzero pins");
    for (const auto& h : spec.halfspaces)
        if (h.offset < 0.0)
            throw ValidationError(
                "approximate minimization needs nonnegative explicit offsets");

    const int k = spec.k;
    const double radius = std::sqrt(double(k)) + 1e-6;

    SolveReport report;
    auto probe = [&](bool with_level, double level) {
        SeparationOracle composite = [&](const Eigen::VectorXd& w) {
            if (with_level && direction.dot(w) > level) {
                Halfspace h;
                h.normal = direction;
                h.offset = level;
                return SeparationResponse::separate(std::move(h));
            }
            return wso_reward(spec, w, cfg, solver);
        };
        FeasibilityResult r = ellipsoid_feasibility(composite, k, radius);
        report.iterations += r.report.iterations;
        report.oracle_calls += r.report.oracle_calls;
        return r;
    };

    FeasibilityResult first = probe(false, 0.0);
    if (first.report.status != SolveStatus::optimal)
        throw EmptyPolytopeError("weak oracle accepted no point of the reward set");

    Eigen::VectorXd w_best = first.point;
    double hi = direction.dot(first.point);
    double lo = -direction.lpNorm<1>() - 1.0;

    int levels = 0;
    while (hi - lo > eps && levels++ < 200) {
        const double mid = 0.5 * (lo + hi);
        FeasibilityResult r = probe(true, mid);
        if (r.report.status == SolveStatus::optimal) {
            w_best = r.point;
            hi = direction.dot(r.point);
            if (hi < lo) lo = hi;
        } else {
            lo = mid;
        }
    }

    MinOverRewardResult out;
    out.w = w_best * (epsilon / (epsilon + cfg.eta));
    out.value = direction.dot(out.w);
    out.report = report;
    out.report.status = SolveStatus::optimal;
    return out;
}

} // namespace maxmin
