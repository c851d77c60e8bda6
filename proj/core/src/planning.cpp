#include "maxmin/planning.hpp"

#include "maxmin/errors.hpp"
#include "maxmin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace maxmin {

namespace {

std::uint64_t hash_actions(const std::vector<int>& actions) {
    std::uint64_t h = 1469598103934665603ull;
    for (int a : actions) {
        h ^= static_cast<std::uint64_t>(a) + 0x9e3779b97f4a7c15ull;
        h *= 1099511628211ull;
    }
    return h;
}

Eigen::MatrixXd deterministic_transition(const Mdp& mdp, const std::vector<int>& actions) {
    Eigen::MatrixXd P(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
        P.row(s) = mdp.transitions[static_cast<std::size_t>(actions[static_cast<std::size_t>(s)])].row(s);
    return P;
}

Eigen::VectorXd state_occupancy_of(const Mdp& mdp, const Eigen::MatrixXd& P_pi) {
    // y solves (I - gamma P_pi^T) y = initial_dist.
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * P_pi.transpose();
    return A.partialPivLu().solve(mdp.initial_dist);
}

int sample_categorical(CounterRng& rng, const Eigen::VectorXd& probs) {
    double u = rng.next_double();
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace

Planner::Planner(const Mdp& mdp) : mdp_(&mdp) {
    mdp.validate();
    hint_.assign(static_cast<std::size_t>(mdp.n_states), 0);
}

const Planner::Entry& Planner::evaluate(const std::vector<int>& actions) {
    const std::uint64_t h = hash_actions(actions);
    auto it = cache_.find(h);
    if (it != cache_.end() && cache_keys_[h] == actions) return it->second;

    Eigen::MatrixXd P = deterministic_transition(*mdp_, actions);
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(mdp_->n_states, mdp_->n_states) - mdp_->gamma * P;
    Entry e;
    e.W = A.partialPivLu().solve(mdp_->features);
    e.mu = e.W.transpose() * mdp_->initial_dist;
    cache_keys_[h] = actions;
    return cache_[h] = std::move(e);
}

SolveResult Planner::solve(const Eigen::VectorXd& w, double tol) {
    if (w.size() != mdp_->k())
        throw ValidationError("weight vector has length " + std::to_string(w.size()) +
                              ", expected " + std::to_string(mdp_->k()));
    ++solve_calls_;

    // Positive rescaling leaves the optimal policy unchanged; normalizing keeps
    // improvement thresholds meaningful when callers pass growing weight sums.
    const double scale = std::max(1.0, w.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd wn = w / scale;

    const double gamma = mdp_->gamma;
    const double improve_eps =
        gamma > 0.0 ? std::max(tol * (1.0 - gamma) / (2.0 * gamma), 1e-14) : tol;

    std::vector<int> pi = hint_;
    std::unordered_set<std::uint64_t> visited;
    visited.insert(hash_actions(pi));

    const long max_rounds = 10L * mdp_->n_states + 100;
    Eigen::MatrixXd Q(mdp_->n_states, mdp_->n_actions);
    long round = 0;
    for (;; ++round) {
        if (round > max_rounds)
            throw SolverBreakdownError("policy improvement failed to settle", round);

        const Entry& e = evaluate(pi);
        Eigen::VectorXd V = e.W * wn;
        for (int a = 0; a < mdp_->n_actions; ++a)
            Q.col(a) = gamma * (mdp_->transitions[static_cast<std::size_t>(a)] * V);

        bool changed = false;
        std::vector<int> next = pi;
        for (int s = 0; s < mdp_->n_states; ++s) {
            const int cur = pi[static_cast<std::size_t>(s)];
            int best = cur;
            for (int a = 0; a < mdp_->n_actions; ++a)
                if (Q(s, a) > Q(s, best) + improve_eps) best = a;
            if (best != cur) {
                next[static_cast<std::size_t>(s)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        // A revisit means improvements are cycling inside float noise.
        if (!visited.insert(hash_actions(next)).second) break;
        pi = std::move(next);
    }

    // Lowest-index greedy pass against the settled value function.
    {
        const Entry& e = evaluate(pi);
        Eigen::VectorXd V = e.W * wn;
        for (int a = 0; a < mdp_->n_actions; ++a)
            Q.col(a) = gamma * (mdp_->transitions[static_cast<std::size_t>(a)] * V);
        for (int s = 0; s < mdp_->n_states; ++s) {
            int best = 0;
            for (int a = 1; a < mdp_->n_actions; ++a)
                if (Q(s, a) > Q(s, best)) best = a;
            pi[static_cast<std::size_t>(s)] = best;
        }
    }

    const Entry& fin = evaluate(pi);
    hint_ = pi;

    SolveResult out;
    out.policy = Policy::from_actions(pi, mdp_->n_actions);
    out.mu = fin.mu;
    out.value = w.dot(fin.mu);
    out.iterations = round + 1;
    return out;
}

FeatureExpectation Planner::feature_expectation(const Policy& policy) const {
    return ::maxmin::feature_expectation(*mdp_, policy);
}

SolveResult solve_mdp(const Mdp& mdp, const Eigen::VectorXd& w, double tol) {
    Planner planner(mdp);
    return planner.solve(w, tol);
}

FeatureExpectation feature_expectation(const Mdp& mdp, const Policy& policy) {
    Eigen::VectorXd y = state_occupancy_of(mdp, policy_transition_matrix(mdp, policy));
    return mdp.features.transpose() * y;
}

OccupancyMeasure occupancy_measure(const Mdp& mdp, const Policy& policy) {
    Eigen::VectorXd y = state_occupancy_of(mdp, policy_transition_matrix(mdp, policy));
    OccupancyMeasure occ;
    occ.x = y.asDiagonal() * policy.probs;
    return occ;
}

Policy policy_from_occupancy(const Mdp& mdp, const OccupancyMeasure& occupancy) {
    if (occupancy.x.rows() != mdp.n_states || occupancy.x.cols() != mdp.n_actions)
        throw ValidationError("occupancy shape does not match the MDP");
    Eigen::MatrixXd x = occupancy.x.cwiseMax(0.0);
    Eigen::VectorXd y = x.rowwise().sum();
    const double floor = 1e-14 * std::max(y.maxCoeff(), 1e-300);

    Policy p;
    p.probs.resize(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (y(s) > floor)
            p.probs.row(s) = x.row(s) / y(s);
        else
            p.probs.row(s).setConstant(1.0 / mdp.n_actions);
    }
    return p;
}

FeatureExpectation occupancy_feature_expectation(const Mdp& mdp, const OccupancyMeasure& occupancy) {
    return mdp.features.transpose() * occupancy.x.rowwise().sum();
}

double flow_residual(const Mdp& mdp, const OccupancyMeasure& occupancy) {
    Eigen::VectorXd inflow = Eigen::VectorXd::Zero(mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        inflow += mdp.transitions[static_cast<std::size_t>(a)].transpose() * occupancy.x.col(a);
    Eigen::VectorXd residual =
        occupancy.x.rowwise().sum() - mdp.initial_dist - mdp.gamma * inflow;
    return residual.lpNorm<Eigen::Infinity>();
}

McEstimate monte_carlo_feature_expectation(const Mdp& mdp, const Policy& policy,
                                           int n_rollouts, int horizon, std::uint64_t seed) {
    if (n_rollouts <= 0) throw ValidationError("n_rollouts must be positive");
    if (horizon <= 0) throw ValidationError("horizon must be positive");

    const int k = mdp.k();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(k);

    for (int r = 0; r < n_rollouts; ++r) {
        CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
        int s = sample_categorical(rng, mdp.initial_dist);
        double disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            acc += disc * mdp.features.row(s).transpose();
            disc *= mdp.gamma;
            int a = sample_categorical(rng, policy.probs.row(s).transpose());
            s = sample_categorical(rng, mdp.transitions[static_cast<std::size_t>(a)].row(s).transpose());
        }
        sum += acc;
        sumsq += acc.cwiseProduct(acc);
    }

    McEstimate est;
    est.mean = sum / n_rollouts;
    est.n_rollouts = n_rollouts;
    est.horizon = horizon;
    if (n_rollouts > 1) {
        Eigen::VectorXd var =
            (sumsq - n_rollouts * est.mean.cwiseProduct(est.mean)) / (n_rollouts - 1.0);
        est.std_error = (var.cwiseMax(0.0) / n_rollouts).cwiseSqrt();
    } else {
        est.std_error = Eigen::VectorXd::Zero(k);
    }
    return est;
}

FeatureExpectation mixed_feature_expectation(const Mdp& mdp, const MixedPolicy& mixed) {
    mixed.validate();
    FeatureExpectation mu = Eigen::VectorXd::Zero(mdp.k());
    for (std::size_t i = 0; i < mixed.size(); ++i)
        mu += mixed.weights[i] * feature_expectation(mdp, mixed.components[i]);
    return mu;
}

OccupancyMeasure mixed_occupancy_measure(const Mdp& mdp, const MixedPolicy& mixed) {
    mixed.validate();
    OccupancyMeasure occ;
    occ.x = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    for (std::size_t i = 0; i < mixed.size(); ++i)
        occ.x += mixed.weights[i] * occupancy_measure(mdp, mixed.components[i]).x;
    return occ;
}

std::vector<std::vector<int>> enumerate_deterministic_policies(const Mdp& mdp, long limit) {
    double count = std::pow(static_cast<double>(mdp.n_actions), mdp.n_states);
    if (count > static_cast<double>(limit))
        throw ValidationError("policy enumeration would produce " + std::to_string(count) +
                              " policies, above the limit of " + std::to_string(limit));

    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> cur(static_cast<std::size_t>(mdp.n_states), 0);
    for (;;) {
        out.push_back(cur);
        int pos = 0;
        while (pos < mdp.n_states) {
            if (++cur[static_cast<std::size_t>(pos)] < mdp.n_actions) break;
            cur[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == mdp.n_states) break;
    }
    return out;
}

ApproxSolver make_exact_approx_solver() {
    return [](const Mdp& mdp, const Eigen::VectorXd& w, double /*eta*/) {
        return solve_mdp(mdp, w);
    };
}

ApproxSolver make_second_best_solver(long enumeration_limit) {
    return [enumeration_limit](const Mdp& mdp, const Eigen::VectorXd& w, double eta) {
        auto tables = enumerate_deterministic_policies(mdp, enumeration_limit);
        std::vector<FeatureExpectation> mus;
        mus.reserve(tables.size());
        for (const auto& t : tables)
            mus.push_back(feature_expectation(mdp, Policy::from_actions(t, mdp.n_actions)));

        std::size_t best = 0;
        for (std::size_t i = 1; i < tables.size(); ++i)
            if (w.dot(mus[i]) > w.dot(mus[best])) best = i;
        const double v_best = w.dot(mus[best]);

        // Runner-up by value among policies strictly worse than the optimum.
        bool have_second = false;
        std::size_t second = 0;
        const double strict = 1e-12 * std::max(1.0, std::abs(v_best));
        for (std::size_t i = 0; i < tables.size(); ++i) {
            const double v = w.dot(mus[i]);
            if (v < v_best - strict && (!have_second || v > w.dot(mus[second]))) {
                second = i;
                have_second = true;
            }
        }

        std::size_t pick = best;
        if (have_second && v_best - w.dot(mus[second]) <= eta) pick = second;

        SolveResult out;
        out.policy = Policy::from_actions(tables[pick], mdp.n_actions);
        out.mu = mus[pick];
        out.value = w.dot(mus[pick]);
        out.iterations = static_cast<long>(tables.size());
        return out;
    };
}

} // namespace maxmin
