#include "aidcsim/grid.hpp"

#include <cmath>

namespace aidcsim::grid {

namespace {

// Bus susceptance matrix in MW/rad with the reference row and column removed.
Eigen::MatrixXd reduced_susceptance(const NetworkCase& c, int ref) {
    const int n = c.num_buses();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (const Line& ln : c.lines) {
        const int f = c.bus_index(ln.from);
        const int t = c.bus_index(ln.to);
        const double y = ln.b_pu * c.mva_base;
        b(f, f) += y;
        b(t, t) += y;
        b(f, t) -= y;
        b(t, f) -= y;
    }
    Eigen::MatrixXd red(n - 1, n - 1);
    for (int i = 0, ri = 0; i < n; ++i) {
        if (i == ref) {
            continue;
        }
        for (int j = 0, rj = 0; j < n; ++j) {
            if (j == ref) {
                continue;
            }
            red(ri, rj) = b(i, j);
            ++rj;
        }
        ++ri;
    }
    return red;
}

}  // namespace

std::vector<double> Ptdf::flows(std::span<const double> injection_mw) const {
    Eigen::Map<const Eigen::VectorXd> p(injection_mw.data(), static_cast<Eigen::Index>(injection_mw.size()));
    const Eigen::VectorXd f = m * p;
    return {f.data(), f.data() + f.size()};
}

Ptdf compute_ptdf(const NetworkCase& c) {
    const int n = c.num_buses();
    const int ref = c.bus_index(c.ref_bus);
    if (ref < 0) {
        throw std::runtime_error("reference bus missing from network");
    }
    Ptdf out;
    out.ref = ref;
    out.m = Eigen::MatrixXd::Zero(c.num_lines(), n);
    if (n == 1) {
        return out;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced_susceptance(c, ref));
    if (!lu.isInvertible()) {
        throw std::runtime_error("reduced susceptance matrix is singular (network disconnected?)");
    }
    const Eigen::MatrixXd x_red = lu.inverse();
    // Pad the reactance matrix back to full size with a zero reference row/column.
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0, ri = 0; i < n; ++i) {
        if (i == ref) {
            continue;
        }
        for (int j = 0, rj = 0; j < n; ++j) {
            if (j == ref) {
                continue;
            }
            x(i, j) = x_red(ri, rj);
            ++rj;
        }
        ++ri;
    }
    for (int l = 0; l < c.num_lines(); ++l) {
        const Line& ln = c.lines[l];
        const int f = c.bus_index(ln.from);
        const int t = c.bus_index(ln.to);
        const double y = ln.b_pu * c.mva_base;
        out.m.row(l) = y * (x.row(f) - x.row(t));
    }
    out.m.col(ref).setZero();
    return out;
}

AngleFlow::AngleFlow(const NetworkCase& c) : case_(&c), ref_(c.bus_index(c.ref_bus)) {
    for (const Line& ln : c.lines) {
        from_.push_back(c.bus_index(ln.from));
        to_.push_back(c.bus_index(ln.to));
        b_mw_.push_back(ln.b_pu * c.mva_base);
    }
    if (c.num_buses() > 1) {
        lu_.compute(reduced_susceptance(c, ref_));
        if (!lu_.isInvertible()) {
            throw std::runtime_error("reduced susceptance matrix is singular (network disconnected?)");
        }
    }
}

Eigen::VectorXd AngleFlow::angles(std::span<const double> injection_mw) const {
    const int n = case_->num_buses();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    if (n == 1) {
        return theta;
    }
    Eigen::VectorXd p(n - 1);
    for (int i = 0, r = 0; i < n; ++i) {
        if (i != ref_) {
            p[r++] = injection_mw[i];
        }
    }
    const Eigen::VectorXd red = lu_.solve(p);
    for (int i = 0, r = 0; i < n; ++i) {
        if (i != ref_) {
            theta[i] = red[r++];
        }
    }
    return theta;
}

std::vector<double> AngleFlow::flows(std::span<const double> injection_mw) const {
    const Eigen::VectorXd theta = angles(injection_mw);
    std::vector<double> f(from_.size());
    for (std::size_t l = 0; l < from_.size(); ++l) {
        f[l] = b_mw_[l] * (theta[from_[l]] - theta[to_[l]]);
    }
    return f;
}

}  // namespace aidcsim::grid
