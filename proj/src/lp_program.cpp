#include "aidcsim/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace aidcsim::lp {

Relation Constraint::relation() const {
    if (lower == upper) {
        return Relation::Equal;
    }
    if (std::isinf(lower)) {
        return Relation::LessEqual;
    }
    return Relation::GreaterEqual;
}

bool Constraint::is_range() const {
    return std::isfinite(lower) && std::isfinite(upper) && lower != upper;
}

int LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
    vars_.push_back(Variable{std::move(name), lower, upper, cost});
    return num_variables() - 1;
}

int LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Relation rel,
                                  double rhs) {
    switch (rel) {
        case Relation::LessEqual:
            return add_range(std::move(name), std::move(terms), -kInf, rhs);
        case Relation::GreaterEqual:
            return add_range(std::move(name), std::move(terms), rhs, kInf);
        case Relation::Equal:
            return add_range(std::move(name), std::move(terms), rhs, rhs);
    }
    throw std::logic_error("unreachable relation");
}

int LinearProgram::add_range(std::string name, std::vector<Term> terms, double lower,
                             double upper) {
    // Merge duplicate references so each row holds one coefficient per variable.
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const Term& t : terms) {
        if (!merged.empty() && merged.back().var == t.var) {
            merged.back().coef += t.coef;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back(Constraint{std::move(name), std::move(merged), lower, upper});
    return num_constraints() - 1;
}

void LinearProgram::set_cost(int var, double cost) {
    vars_.at(static_cast<std::size_t>(var)).cost = cost;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    auto& v = vars_.at(static_cast<std::size_t>(var));
    v.lower = lower;
    v.upper = upper;
}

void LinearProgram::set_row_bounds(int row, double lower, double upper) {
    auto& r = rows_.at(static_cast<std::size_t>(row));
    r.lower = lower;
    r.upper = upper;
}

std::vector<std::string> LinearProgram::validate() const {
    std::vector<std::string> problems;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
        const Variable& v = vars_[j];
        if (!std::isfinite(v.cost)) {
            problems.push_back("variable '" + v.name + "' has a non-finite cost");
        }
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper ||
            v.lower == kInf || v.upper == -kInf) {
            problems.push_back("variable '" + v.name + "' has invalid bounds");
        }
    }
    for (const Constraint& c : rows_) {
        if (std::isnan(c.lower) || std::isnan(c.upper) || c.lower > c.upper ||
            c.lower == kInf || c.upper == -kInf) {
            problems.push_back("constraint '" + c.name + "' has invalid bounds");
        }
        for (const Term& t : c.terms) {
            if (t.var < 0 || t.var >= num_variables()) {
                problems.push_back("constraint '" + c.name + "' references an undeclared variable");
                break;
            }
            if (!std::isfinite(t.coef)) {
                problems.push_back("constraint '" + c.name + "' has a non-finite coefficient");
                break;
            }
        }
    }
    return problems;
}

double LinearProgram::objective_value(std::span<const double> x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
        z += vars_[j].cost * x[j];
    }
    return z;
}

double LinearProgram::row_activity(int row, std::span<const double> x) const {
    double a = 0.0;
    for (const Term& t : constraint(row).terms) {
        a += t.coef * x[static_cast<std::size_t>(t.var)];
    }
    return a;
}

double LinearProgram::max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
        worst = std::max(worst, vars_[j].lower - x[j]);
        worst = std::max(worst, x[j] - vars_[j].upper);
    }
    for (int i = 0; i < num_constraints(); ++i) {
        const double a = row_activity(i, x);
        worst = std::max(worst, rows_[static_cast<std::size_t>(i)].lower - a);
        worst = std::max(worst, a - rows_[static_cast<std::size_t>(i)].upper);
    }
    return worst;
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal:
            return "optimal";
        case LpStatus::Infeasible:
            return "infeasible";
        case LpStatus::Unbounded:
            return "unbounded";
        case LpStatus::NumericalFailure:
            return "numerical_failure";
    }
    return "unknown";
}

namespace {

// LP-format identifiers may not contain spaces or several operator characters.
std::string lp_name(const std::string& raw, const char* fallback_prefix, std::size_t index) {
    if (raw.empty()) {
        return fallback_prefix + std::to_string(index);
    }
    std::string out = raw;
    for (char& ch : out) {
        if (ch == ' ' || ch == ':' || ch == '+' || ch == '-' || ch == '*' || ch == '^' ||
            ch == '<' || ch == '>' || ch == '=' || ch == '[' || ch == ']' || ch == ',') {
            ch = '_';
        }
    }
    return out;
}

void write_expr(std::ostream& os, const LinearProgram& p, const std::vector<Term>& terms) {
    if (terms.empty()) {
        os << " 0 " << lp_name(p.variable(0).name, "x", 0);
        return;
    }
    for (const Term& t : terms) {
        os << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef) << ' '
           << lp_name(p.variable(t.var).name, "x", static_cast<std::size_t>(t.var));
    }
}

}  // namespace

void write_lp_text(std::ostream& os, const LinearProgram& p) {
    const auto prec = os.precision(17);
    os << "\\ aidcsim linear program\n";
    os << "Minimize\n obj:";
    bool any = false;
    for (int j = 0; j < p.num_variables(); ++j) {
        const double c = p.variable(j).cost;
        if (c != 0.0) {
            os << (c < 0 ? " - " : " + ") << std::abs(c) << ' '
               << lp_name(p.variable(j).name, "x", static_cast<std::size_t>(j));
            any = true;
        }
    }
    if (!any && p.num_variables() > 0) {
        os << " 0 " << lp_name(p.variable(0).name, "x", 0);
    }
    os << "\nSubject To\n";
    for (int i = 0; i < p.num_constraints(); ++i) {
        const Constraint& c = p.constraint(i);
        const std::string name = lp_name(c.name, "c", static_cast<std::size_t>(i));
        if (c.lower == c.upper) {
            os << ' ' << name << ':';
            write_expr(os, p, c.terms);
            os << " = " << c.upper << '\n';
            continue;
        }
        if (std::isfinite(c.lower)) {
            os << ' ' << name << (std::isfinite(c.upper) ? "_lo" : "") << ':';
            write_expr(os, p, c.terms);
            os << " >= " << c.lower << '\n';
        }
        if (std::isfinite(c.upper)) {
            os << ' ' << name << (std::isfinite(c.lower) ? "_hi" : "") << ':';
            write_expr(os, p, c.terms);
            os << " <= " << c.upper << '\n';
        }
    }
    os << "Bounds\n";
    for (int j = 0; j < p.num_variables(); ++j) {
        const Variable& v = p.variable(j);
        const std::string name = lp_name(v.name, "x", static_cast<std::size_t>(j));
        if (std::isinf(v.lower) && std::isinf(v.upper)) {
            os << ' ' << name << " free\n";
        } else if (v.lower == v.upper) {
            os << ' ' << name << " = " << v.lower << '\n';
        } else {
            os << ' ';
            if (std::isinf(v.lower)) {
                os << "-inf";
            } else {
                os << v.lower;
            }
            os << " <= " << name << " <= ";
            if (std::isinf(v.upper)) {
                os << "+inf";
            } else {
                os << v.upper;
            }
            os << '\n';
        }
    }
    os << "End\n";
    os.precision(prec);
}

}  // namespace aidcsim::lp
