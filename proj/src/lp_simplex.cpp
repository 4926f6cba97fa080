#include "aidcsim/lp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace aidcsim::lp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

// Product-form update: B_new^{-1} = E * B_old^{-1}, E = I + (eta - e_p) e_p'.
struct Eta {
    int pos = 0;
    double pivot_inv = 1.0;
    std::vector<std::pair<int, double>> others;
};

enum class Outcome { Optimal, Unbounded, IterationLimit, Singular };

class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& problem, const SolverOptions& options)
        : problem_(problem), opt_(options) {}

    LpSolution run();

private:
    int total() const { return n_ + m_ + na_; }
    bool is_structural(int j) const { return j < n_; }
    bool is_logical(int j) const { return j >= n_ && j < n_ + m_; }

    template <class F>
    void for_column(int j, F&& f) const {
        if (j < n_) {
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
                f(col_row_[k], col_val_[k]);
            }
        } else if (j < n_ + m_) {
            f(j - n_, -1.0);
        } else {
            const int k = j - n_ - m_;
            f(art_row_[k], art_sign_[k]);
        }
    }

    void build();
    bool refactor();
    Vec ftran(Vec rhs) const;
    Vec btran(Vec rhs) const;
    void recompute_basics();
    Vec column(int j) const;
    double reduced_cost(int j, const Vec& y) const;
    double cost_scale() const;
    double artificial_sum() const;
    double max_basic_violation() const;
    Outcome iterate(int phase);

    const LinearProgram& problem_;
    SolverOptions opt_;

    int m_ = 0;
    int n_ = 0;
    int na_ = 0;
    std::vector<int> col_start_;
    std::vector<int> col_row_;
    std::vector<double> col_val_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;

    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<double> cost_;
    std::vector<double> x_;
    std::vector<int> head_;
    std::vector<int> pos_;

    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lut_;
    std::vector<Eta> etas_;

    int iterations_ = 0;
    int max_iterations_ = 0;
};

void RevisedSimplex::build() {
    m_ = problem_.num_constraints();
    n_ = problem_.num_variables();

    // Row-wise terms to column-compressed structural matrix.
    std::vector<int> counts(static_cast<std::size_t>(n_), 0);
    for (const Constraint& c : problem_.constraints()) {
        for (const Term& t : c.terms) {
            ++counts[static_cast<std::size_t>(t.var)];
        }
    }
    col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) {
        col_start_[j + 1] = col_start_[j] + counts[j];
    }
    col_row_.resize(static_cast<std::size_t>(col_start_[n_]));
    col_val_.resize(static_cast<std::size_t>(col_start_[n_]));
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i) {
        for (const Term& t : problem_.constraint(i).terms) {
            const int k = fill[t.var]++;
            col_row_[k] = i;
            col_val_[k] = t.coef;
        }
    }

    lo_.clear();
    hi_.clear();
    x_.clear();
    for (const Variable& v : problem_.variables()) {
        lo_.push_back(v.lower);
        hi_.push_back(v.upper);
        if (std::isfinite(v.lower)) {
            x_.push_back(v.lower);
        } else if (std::isfinite(v.upper)) {
            x_.push_back(v.upper);
        } else {
            x_.push_back(0.0);
        }
    }

    std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < n_; ++j) {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
            activity[col_row_[k]] += col_val_[k] * x_[j];
        }
    }

    head_.assign(static_cast<std::size_t>(m_), -1);
    std::vector<double> art_value;
    for (int i = 0; i < m_; ++i) {
        const Constraint& c = problem_.constraint(i);
        lo_.push_back(c.lower);
        hi_.push_back(c.upper);
        const double v = activity[i];
        if (v >= c.lower && v <= c.upper) {
            x_.push_back(v);
            head_[i] = n_ + i;
        } else {
            const double bound = v < c.lower ? c.lower : c.upper;
            x_.push_back(bound);
            art_row_.push_back(i);
            art_sign_.push_back(bound > v ? 1.0 : -1.0);
            art_value.push_back(std::abs(bound - v));
        }
    }
    na_ = static_cast<int>(art_row_.size());
    for (int k = 0; k < na_; ++k) {
        lo_.push_back(0.0);
        hi_.push_back(kInf);
        x_.push_back(art_value[k]);
        head_[art_row_[k]] = n_ + m_ + k;
    }

    pos_.assign(static_cast<std::size_t>(total()), -1);
    for (int p = 0; p < m_; ++p) {
        pos_[head_[p]] = p;
    }
    cost_.assign(static_cast<std::size_t>(total()), 0.0);

    max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                              : std::max(20000, 50 * (m_ + n_));
}

bool RevisedSimplex::refactor() {
    std::vector<Eigen::Triplet<double, int>> trip;
    std::vector<Eigen::Triplet<double, int>> trip_t;
    trip.reserve(static_cast<std::size_t>(m_) * 4);
    trip_t.reserve(static_cast<std::size_t>(m_) * 4);
    for (int p = 0; p < m_; ++p) {
        for_column(head_[p], [&](int row, double val) {
            trip.emplace_back(row, p, val);
            trip_t.emplace_back(p, row, val);
        });
    }
    SpMat b(m_, m_);
    b.setFromTriplets(trip.begin(), trip.end());
    SpMat bt(m_, m_);
    bt.setFromTriplets(trip_t.begin(), trip_t.end());
    lu_.compute(b);
    if (lu_.info() != Eigen::Success) {
        return false;
    }
    lut_.compute(bt);
    if (lut_.info() != Eigen::Success) {
        return false;
    }
    etas_.clear();
    return true;
}

Vec RevisedSimplex::ftran(Vec rhs) const {
    Vec x = lu_.solve(rhs);
    for (const Eta& e : etas_) {
        const double t = x[e.pos];
        if (t == 0.0) {
            continue;
        }
        for (const auto& [i, v] : e.others) {
            x[i] += v * t;
        }
        x[e.pos] = e.pivot_inv * t;
    }
    return x;
}

Vec RevisedSimplex::btran(Vec rhs) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double s = it->pivot_inv * rhs[it->pos];
        for (const auto& [i, v] : it->others) {
            s += v * rhs[i];
        }
        rhs[it->pos] = s;
    }
    return lut_.solve(rhs);
}

Vec RevisedSimplex::column(int j) const {
    Vec a = Vec::Zero(m_);
    for_column(j, [&](int row, double val) { a[row] += val; });
    return a;
}

void RevisedSimplex::recompute_basics() {
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < total(); ++j) {
        if (pos_[j] >= 0 || x_[j] == 0.0) {
            continue;
        }
        const double xj = x_[j];
        for_column(j, [&](int row, double val) { rhs[row] -= val * xj; });
    }
    const Vec xb = ftran(std::move(rhs));
    for (int p = 0; p < m_; ++p) {
        x_[head_[p]] = xb[p];
    }
}

double RevisedSimplex::reduced_cost(int j, const Vec& y) const {
    double d = cost_[j];
    for_column(j, [&](int row, double val) { d -= y[row] * val; });
    return d;
}

double RevisedSimplex::cost_scale() const {
    double s = 1.0;
    for (double c : cost_) {
        s = std::max(s, std::abs(c));
    }
    return s;
}

double RevisedSimplex::artificial_sum() const {
    double s = 0.0;
    for (int k = 0; k < na_; ++k) {
        s += x_[n_ + m_ + k];
    }
    return s;
}

double RevisedSimplex::max_basic_violation() const {
    double worst = 0.0;
    for (int p = 0; p < m_; ++p) {
        const int b = head_[p];
        worst = std::max(worst, lo_[b] - x_[b]);
        worst = std::max(worst, x_[b] - hi_[b]);
    }
    return worst;
}

Outcome RevisedSimplex::iterate(int phase) {
    const double dtol = opt_.optimality_tol * cost_scale();
    const double harris = 0.1 * opt_.feasibility_tol;
    int stall = 0;
    bool bland = false;

    while (true) {
        if (phase == 1 && artificial_sum() <= 0.0) {
            return Outcome::Optimal;
        }
        if (iterations_ >= max_iterations_) {
            return Outcome::IterationLimit;
        }
        if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
            if (!refactor()) {
                return Outcome::Singular;
            }
            recompute_basics();
        }

        Vec cb(m_);
        for (int p = 0; p < m_; ++p) {
            cb[p] = cost_[head_[p]];
        }
        const Vec y = btran(std::move(cb));

        int q = -1;
        double dq = 0.0;
        double best = 0.0;
        for (int j = 0; j < total(); ++j) {
            if (pos_[j] >= 0 || lo_[j] == hi_[j]) {
                continue;
            }
            const double d = reduced_cost(j, y);
            const bool can_up = x_[j] < hi_[j];
            const bool can_down = x_[j] > lo_[j];
            const bool eligible = (d < -dtol && can_up) || (d > dtol && can_down);
            if (!eligible) {
                continue;
            }
            if (bland) {
                q = j;
                dq = d;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
                dq = d;
            }
        }
        if (q < 0) {
            return Outcome::Optimal;
        }

        const double dir = dq < 0.0 ? 1.0 : -1.0;
        const Vec alpha = ftran(column(q));

        // Harris two-pass ratio test.
        double theta_max = kInf;
        for (int p = 0; p < m_; ++p) {
            const double a = alpha[p];
            if (std::abs(a) <= opt_.pivot_tol) {
                continue;
            }
            const int b = head_[p];
            const double delta = -dir * a;
            if (delta < 0.0 && std::isfinite(lo_[b])) {
                theta_max = std::min(theta_max, (x_[b] - lo_[b] + harris) / -delta);
            } else if (delta > 0.0 && std::isfinite(hi_[b])) {
                theta_max = std::min(theta_max, (hi_[b] - x_[b] + harris) / delta);
            }
        }
        const double flip = hi_[q] - lo_[q];
        ++iterations_;

        if (std::isinf(theta_max) && std::isinf(flip)) {
            return Outcome::Unbounded;
        }

        if (flip <= theta_max) {
            x_[q] = dir > 0.0 ? hi_[q] : lo_[q];
            for (int p = 0; p < m_; ++p) {
                x_[head_[p]] += -dir * alpha[p] * flip;
            }
            stall = 0;
            bland = false;
            continue;
        }

        int leave = -1;
        double leave_abs = 0.0;
        double theta = 0.0;
        for (int p = 0; p < m_; ++p) {
            const double a = alpha[p];
            if (std::abs(a) <= opt_.pivot_tol) {
                continue;
            }
            const int b = head_[p];
            const double delta = -dir * a;
            double ratio = kInf;
            if (delta < 0.0 && std::isfinite(lo_[b])) {
                ratio = std::max(0.0, x_[b] - lo_[b]) / -delta;
            } else if (delta > 0.0 && std::isfinite(hi_[b])) {
                ratio = std::max(0.0, hi_[b] - x_[b]) / delta;
            }
            if (ratio > theta_max) {
                continue;
            }
            const bool better = std::abs(a) > leave_abs ||
                                (std::abs(a) == leave_abs && leave >= 0 && b < head_[leave]);
            if (leave < 0 || better) {
                leave = p;
                leave_abs = std::abs(a);
                theta = ratio;
            }
        }
        if (leave < 0) {
            return Outcome::Unbounded;
        }

        x_[q] += dir * theta;
        for (int p = 0; p < m_; ++p) {
            x_[head_[p]] += -dir * alpha[p] * theta;
        }
        const int out = head_[leave];
        const double out_delta = -dir * alpha[leave];
        x_[out] = out_delta < 0.0 ? lo_[out] : hi_[out];
        head_[leave] = q;
        pos_[q] = leave;
        pos_[out] = -1;

        Eta eta;
        eta.pos = leave;
        eta.pivot_inv = 1.0 / alpha[leave];
        for (int p = 0; p < m_; ++p) {
            if (p != leave && alpha[p] != 0.0) {
                eta.others.emplace_back(p, -alpha[p] * eta.pivot_inv);
            }
        }
        etas_.push_back(std::move(eta));

        if (theta * std::abs(dq) <= 1e-12) {
            if (++stall > 50) {
                bland = true;
            }
        } else {
            stall = 0;
            bland = false;
        }
    }
}

LpSolution RevisedSimplex::run() {
    build();
    LpSolution sol;

    if (m_ == 0) {
        sol.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j) {
            const Variable& v = problem_.variable(j);
            if (v.cost > 0.0) {
                if (std::isinf(v.lower)) {
                    sol.status = LpStatus::Unbounded;
                    sol.diagnostic = "variable '" + v.name + "' decreases without bound";
                    return sol;
                }
                sol.x[j] = v.lower;
            } else if (v.cost < 0.0) {
                if (std::isinf(v.upper)) {
                    sol.status = LpStatus::Unbounded;
                    sol.diagnostic = "variable '" + v.name + "' increases without bound";
                    return sol;
                }
                sol.x[j] = v.upper;
            } else {
                sol.x[j] = x_[j];
            }
        }
        sol.status = LpStatus::Optimal;
        sol.objective = problem_.objective_value(sol.x);
        return sol;
    }

    if (!refactor()) {
        sol.diagnostic = "initial basis factorization failed";
        return sol;
    }

    auto fail = [&](Outcome o, const char* phase) {
        std::ostringstream msg;
        msg << phase << ": "
            << (o == Outcome::IterationLimit ? "iteration limit reached"
                                             : "basis factorization failed")
            << " after " << iterations_ << " iterations";
        sol.status = LpStatus::NumericalFailure;
        sol.diagnostic = msg.str();
        sol.iterations = iterations_;
        return sol;
    };

    if (na_ > 0) {
        for (int k = 0; k < na_; ++k) {
            cost_[n_ + m_ + k] = 1.0;
        }
        const Outcome o = iterate(1);
        if (o == Outcome::IterationLimit || o == Outcome::Singular) {
            return fail(o, "phase 1");
        }
        if (!refactor()) {
            return fail(Outcome::Singular, "phase 1");
        }
        recompute_basics();
        double worst = 0.0;
        int worst_row = -1;
        for (int k = 0; k < na_; ++k) {
            if (x_[n_ + m_ + k] > worst) {
                worst = x_[n_ + m_ + k];
                worst_row = art_row_[k];
            }
        }
        if (worst > opt_.feasibility_tol) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations_;
            std::ostringstream msg;
            msg << "phase 1 residual " << worst << " on constraint '"
                << problem_.constraint(worst_row).name << "'";
            sol.diagnostic = msg.str();
            return sol;
        }
        for (int k = 0; k < na_; ++k) {
            const int j = n_ + m_ + k;
            cost_[j] = 0.0;
            hi_[j] = 0.0;
            if (pos_[j] < 0) {
                x_[j] = 0.0;
            }
        }
    }

    for (int j = 0; j < n_; ++j) {
        cost_[j] = problem_.variable(j).cost;
    }
    const Outcome o = iterate(2);
    if (o == Outcome::Unbounded) {
        sol.status = LpStatus::Unbounded;
        sol.iterations = iterations_;
        sol.diagnostic = "objective decreases without bound";
        return sol;
    }
    if (o != Outcome::Optimal) {
        return fail(o, "phase 2");
    }
    if (!refactor()) {
        return fail(Outcome::Singular, "phase 2");
    }
    recompute_basics();
    const double viol = max_basic_violation();
    if (viol > opt_.feasibility_tol) {
        std::ostringstream msg;
        msg << "basic solution violates bounds by " << viol << " after refactorization";
        sol.status = LpStatus::NumericalFailure;
        sol.diagnostic = msg.str();
        sol.iterations = iterations_;
        return sol;
    }

    Vec cb(m_);
    for (int p = 0; p < m_; ++p) {
        cb[p] = cost_[head_[p]];
    }
    const Vec y = btran(std::move(cb));

    sol.status = LpStatus::Optimal;
    sol.iterations = iterations_;
    sol.x.assign(x_.begin(), x_.begin() + n_);
    sol.objective = problem_.objective_value(sol.x);
    sol.duals.assign(y.data(), y.data() + m_);
    return sol;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& problem, const SolverOptions& options) {
    const auto problems = problem.validate();
    if (!problems.empty()) {
        std::string msg = "invalid linear program:";
        for (const auto& p : problems) {
            msg += "\n  " + p;
        }
        throw std::invalid_argument(msg);
    }
    RevisedSimplex solver(problem, options);
    return solver.run();
}

}  // namespace aidcsim::lp
