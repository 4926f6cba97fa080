#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace aidcsim::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
    int var;
    double coef;
};

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double cost = 0.0;
};

// Row activity sum(terms) is kept within [lower, upper]. A one-sided row has
// an infinite bound on the other side; an equality has lower == upper.
struct Constraint {
    std::string name;
    std::vector<Term> terms;
    double lower = -kInf;
    double upper = kInf;

    Relation relation() const;
    bool is_range() const;
};

// Minimization problem  min c'x  s.t.  lower_i <= a_i'x <= upper_i,  l <= x <= u.
class LinearProgram {
public:
    int add_variable(std::string name, double lower, double upper, double cost = 0.0);
    int add_constraint(std::string name, std::vector<Term> terms, Relation rel, double rhs);
    int add_range(std::string name, std::vector<Term> terms, double lower, double upper);

    void set_cost(int var, double cost);
    void set_bounds(int var, double lower, double upper);
    void set_row_bounds(int row, double lower, double upper);

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(rows_.size()); }
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return rows_; }
    const Variable& variable(int j) const { return vars_.at(static_cast<std::size_t>(j)); }
    const Constraint& constraint(int i) const { return rows_.at(static_cast<std::size_t>(i)); }

    // Empty when the problem is well-formed.
    std::vector<std::string> validate() const;

    double objective_value(std::span<const double> x) const;
    double row_activity(int row, std::span<const double> x) const;
    // Largest absolute violation of any variable bound or row bound.
    double max_violation(std::span<const double> x) const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string to_string(LpStatus status);

struct SolverOptions {
    double feasibility_tol = 1e-7;
    // Reduced-cost tolerance, relative to max(1, max |c_j|).
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    int refactor_interval = 64;
    int max_iterations = 0;  // 0 selects a size-dependent default
};

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    std::vector<double> x;
    double objective = 0.0;
    // d(objective)/d(rhs) per constraint; empty unless Optimal.
    std::vector<double> duals;
    int iterations = 0;
    std::string diagnostic;

    bool optimal() const { return status == LpStatus::Optimal; }
};

// Bounded-variable primal revised simplex (two phases, sparse LU basis with
// product-form updates). Entering variable: largest reduced cost with ties to
// the lowest index, falling back to the lowest-index rule while stalled.
// Throws std::invalid_argument when validate() reports problems.
LpSolution solve_lp(const LinearProgram& problem, const SolverOptions& options = {});

// CPLEX LP text layout; ranged rows are written as a pair of one-sided rows.
void write_lp_text(std::ostream& os, const LinearProgram& problem);

}  // namespace aidcsim::lp
