#include "sddp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sddp {

int LinearProgram::add_variable(const std::string& name, double lower, double upper,
                                double objective) {
    if (var_index_.count(name)) throw ValidationError("duplicate variable name: " + name);
    if (std::isnan(lower) || std::isnan(upper) || std::isnan(objective))
        throw ValidationError("NaN in variable data: " + name);
    var_index_[name] = static_cast<int>(vars_.size());
    vars_.push_back({name, lower, upper, objective});
    return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_constraint(const std::string& name,
                                  std::vector<std::pair<int, double>> coeffs, RowSense sense_,
                                  double rhs) {
    if (row_index_.count(name)) throw ValidationError("duplicate constraint name: " + name);
    for (auto& [j, a] : coeffs) {
        if (j < 0 || j >= num_variables())
            throw ValidationError("constraint " + name + " references unknown variable index");
        if (!std::isfinite(a)) throw ValidationError("non-finite coefficient in row " + name);
    }
    if (!std::isfinite(rhs)) throw ValidationError("non-finite rhs in row " + name);
    row_index_[name] = static_cast<int>(rows_.size());
    rows_.push_back({name, std::move(coeffs), sense_, rhs});
    return static_cast<int>(rows_.size()) - 1;
}

int LinearProgram::variable_index(const std::string& name) const {
    auto it = var_index_.find(name);
    return it == var_index_.end() ? -1 : it->second;
}

int LinearProgram::constraint_index(const std::string& name) const {
    auto it = row_index_.find(name);
    return it == row_index_.end() ? -1 : it->second;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper))
        throw ValidationError("NaN bound on variable " + vars_[var].name);
    vars_[var].lower = lower;
    vars_[var].upper = upper;
}

void LinearProgram::check_well_formed() const {
    for (const auto& v : vars_) {
        if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.objective))
            throw ValidationError("bad data on variable " + v.name);
    }
    for (const auto& r : rows_) {
        if (!std::isfinite(r.rhs)) throw ValidationError("non-finite rhs in row " + r.name);
        for (auto& [j, a] : r.coeffs)
            if (!std::isfinite(a)) throw ValidationError("non-finite coefficient in row " + r.name);
    }
}

double LpSolution::value(const LinearProgram& lp, const std::string& var) const {
    int j = lp.variable_index(var);
    if (j < 0) throw ValidationError("unknown variable: " + var);
    return primal[j];
}

double LpSolution::dual(const LinearProgram& lp, const std::string& row) const {
    int i = lp.constraint_index(row);
    if (i < 0) throw ValidationError("unknown constraint: " + row);
    return duals[i];
}

namespace {

enum ColStatus : unsigned char { kBasic, kAtLower, kAtUpper, kFreeZero };

// Bounded-variable two-phase revised simplex with a dense basis inverse.
// Columns 0..n-1 are structural, n..n+m-1 are row slacks (a_i x + s_i = b_i).
class Simplex {
public:
    explicit Simplex(const LinearProgram& lp) : lp_(lp) {
        m_ = lp.num_constraints();
        n_ = lp.num_variables();
        ncols_ = n_ + m_;
        cols_.resize(ncols_);
        lower_.resize(ncols_);
        upper_.resize(ncols_);
        cost_.assign(ncols_, 0.0);
        b_.resize(m_);

        const double sgn = lp.sense == Sense::maximize ? -1.0 : 1.0;
        for (int j = 0; j < n_; ++j) {
            const auto& v = lp.variable(j);
            lower_[j] = v.lower;
            upper_[j] = v.upper;
            cost_[j] = sgn * v.objective;
        }
        for (int i = 0; i < m_; ++i) {
            const auto& r = lp.constraint(i);
            for (auto& [j, a] : r.coeffs)
                if (a != 0.0) cols_[j].push_back({i, a});
            int s = n_ + i;
            cols_[s].push_back({i, 1.0});
            switch (r.sense) {
                case RowSense::le: lower_[s] = 0.0;   upper_[s] = kInf; break;
                case RowSense::eq: lower_[s] = 0.0;   upper_[s] = 0.0;  break;
                case RowSense::ge: lower_[s] = -kInf; upper_[s] = 0.0;  break;
            }
            b_[i] = r.rhs;
        }
    }

    LpSolution run() {
        LpSolution out;
        for (int j = 0; j < ncols_; ++j) {
            if (lower_[j] > upper_[j] + kFeasTol) {
                out.status = SolveStatus::infeasible;
                return out;
            }
        }
        init_basis();

        SolveStatus st = iterate(/*phase1=*/true);
        if (st == SolveStatus::infeasible) {
            out.status = SolveStatus::infeasible;
            out.iterations = iterations_;
            return out;
        }
        st = iterate(/*phase1=*/false);
        out.status = st;
        out.iterations = iterations_;
        if (st != SolveStatus::optimal) return out;

        extract(out);
        return out;
    }

private:
    const LinearProgram& lp_;
    int m_ = 0, n_ = 0, ncols_ = 0;
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lower_, upper_, cost_, b_;

    std::vector<int> basic_;            // row -> column
    std::vector<ColStatus> status_;     // per column
    std::vector<double> x_;             // per column
    std::vector<double> binv_;          // m x m, row-major
    std::vector<double> alpha_, y_;     // work vectors
    int iterations_ = 0;
    int stall_ = 0;
    bool bland_ = false;

    double bi(int i, int k) const { return binv_[static_cast<size_t>(i) * m_ + k]; }
    double& bi(int i, int k) { return binv_[static_cast<size_t>(i) * m_ + k]; }

    void init_basis() {
        basic_.resize(m_);
        status_.assign(ncols_, kAtLower);
        x_.assign(ncols_, 0.0);
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        alpha_.assign(m_, 0.0);
        y_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            basic_[i] = n_ + i;
            status_[n_ + i] = kBasic;
            bi(i, i) = 1.0;
        }
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lower_[j]) && (lower_[j] > 0.0 || std::isfinite(upper_[j]) == false)) {
                status_[j] = kAtLower;
                x_[j] = lower_[j];
            } else if (std::isfinite(lower_[j])) {
                // 0 in [l, u] or bounded box: start at the bound nearer zero
                if (lower_[j] <= 0.0 && upper_[j] >= 0.0) {
                    status_[j] = kAtLower;
                    x_[j] = lower_[j];
                } else {
                    status_[j] = kAtUpper;
                    x_[j] = upper_[j];
                }
            } else if (std::isfinite(upper_[j])) {
                status_[j] = kAtUpper;
                x_[j] = upper_[j];
            } else {
                status_[j] = kFreeZero;
                x_[j] = 0.0;
            }
        }
        recompute_basics();
    }

    void recompute_basics() {
        // x_B = Binv (b - N x_N)
        std::vector<double> rhs(b_);
        for (int j = 0; j < ncols_; ++j) {
            if (status_[j] == kBasic || x_[j] == 0.0) continue;
            for (auto& [i, a] : cols_[j]) rhs[i] -= a * x_[j];
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += bi(i, k) * rhs[k];
            x_[basic_[i]] = v;
        }
    }

    void refactorize() {
        // Rebuild Binv from scratch by Gauss-Jordan with partial pivoting.
        std::vector<double> mat(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i)
            for (auto& [r, a] : cols_[basic_[i]]) mat[static_cast<size_t>(r) * m_ + i] = a;
        std::vector<double> inv(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) inv[static_cast<size_t>(i) * m_ + i] = 1.0;
        for (int c = 0; c < m_; ++c) {
            int p = c;
            double best = std::fabs(mat[static_cast<size_t>(c) * m_ + c]);
            for (int r = c + 1; r < m_; ++r) {
                double v = std::fabs(mat[static_cast<size_t>(r) * m_ + c]);
                if (v > best) { best = v; p = r; }
            }
            if (best < 1e-13) throw SolveError("singular basis during refactorization");
            if (p != c) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(mat[static_cast<size_t>(p) * m_ + k], mat[static_cast<size_t>(c) * m_ + k]);
                    std::swap(inv[static_cast<size_t>(p) * m_ + k], inv[static_cast<size_t>(c) * m_ + k]);
                }
            }
            double piv = mat[static_cast<size_t>(c) * m_ + c];
            for (int k = 0; k < m_; ++k) {
                mat[static_cast<size_t>(c) * m_ + k] /= piv;
                inv[static_cast<size_t>(c) * m_ + k] /= piv;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == c) continue;
                double f = mat[static_cast<size_t>(r) * m_ + c];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    mat[static_cast<size_t>(r) * m_ + k] -= f * mat[static_cast<size_t>(c) * m_ + k];
                    inv[static_cast<size_t>(r) * m_ + k] -= f * inv[static_cast<size_t>(c) * m_ + k];
                }
            }
        }
        binv_ = std::move(inv);
        recompute_basics();
    }

    void ftran(int j) {
        std::fill(alpha_.begin(), alpha_.end(), 0.0);
        for (auto& [r, a] : cols_[j])
            for (int i = 0; i < m_; ++i) alpha_[i] += bi(i, r) * a;
    }

    // Row multipliers for the given basic cost vector.
    void btran(const std::vector<double>& cb) {
        for (int k = 0; k < m_; ++k) {
            double v = 0.0;
            for (int i = 0; i < m_; ++i)
                if (cb[i] != 0.0) v += cb[i] * bi(i, k);
            y_[k] = v;
        }
    }

    double infeasibility() const {
        double w = 0.0;
        for (int i = 0; i < m_; ++i) {
            int j = basic_[i];
            if (x_[j] < lower_[j]) w += lower_[j] - x_[j];
            if (x_[j] > upper_[j]) w += x_[j] - upper_[j];
        }
        return w;
    }

    SolveStatus iterate(bool phase1) {
        const long limit = 20000L + 50L * (m_ + ncols_);
        std::vector<double> cb(m_);
        int since_refactor = 0;
        stall_ = 0;
        bland_ = false;
        while (true) {
            if (phase1 && infeasibility() <= kFeasTol * (1.0 + m_)) return SolveStatus::optimal;
            if (++iterations_ > limit) throw SolveError("simplex iteration limit exceeded");

            for (int i = 0; i < m_; ++i) {
                int j = basic_[i];
                if (phase1)
                    cb[i] = x_[j] < lower_[j] - kFeasTol ? -1.0
                          : x_[j] > upper_[j] + kFeasTol ? 1.0
                                                         : 0.0;
                else
                    cb[i] = cost_[j];
            }
            btran(cb);

            // Pricing: most negative improvement, ties to the lowest index.
            int enter = -1, dir = 0;
            double best = phase1 ? -kFeasTol : -1e-9;
            for (int j = 0; j < ncols_; ++j) {
                if (status_[j] == kBasic) continue;
                double d = (phase1 ? 0.0 : cost_[j]);
                for (auto& [i, a] : cols_[j]) d -= y_[i] * a;
                double improv = 0.0;
                int dj = 0;
                if (status_[j] == kAtLower && d < 0) { improv = d; dj = +1; }
                else if (status_[j] == kAtUpper && d > 0) { improv = -d; dj = -1; }
                else if (status_[j] == kFreeZero && d != 0) { improv = -std::fabs(d); dj = d < 0 ? +1 : -1; }
                if (dj == 0) continue;
                if (bland_) {
                    if (improv < (phase1 ? -kFeasTol : -1e-9)) { enter = j; dir = dj; break; }
                } else if (improv < best - kTieTol) {
                    best = improv;
                    enter = j;
                    dir = dj;
                }
            }
            if (enter < 0) {
                if (phase1) return SolveStatus::infeasible;
                return SolveStatus::optimal;
            }

            ftran(enter);

            // Ratio test.  rate[i] = d x_B[i] / dt when x_enter moves dir * t.
            double tmax = kInf;
            int leave_row = -1;
            double leave_alpha = 0.0;
            bool leave_at_upper = false;
            for (int i = 0; i < m_; ++i) {
                double rate = -dir * alpha_[i];
                if (std::fabs(rate) <= kPivotTol) continue;
                int j = basic_[i];
                double t = kInf;
                bool at_upper = false;
                if (rate < 0) {  // moving down, blocks at lower
                    if (phase1 && x_[j] > upper_[j] + kFeasTol) {
                        t = (x_[j] - upper_[j]) / (-rate);  // infeasible above: blocks on re-entry
                        at_upper = true;
                    } else if (phase1 && x_[j] < lower_[j] - kFeasTol) {
                        continue;  // already below lower: moving down tracked by pricing
                    } else if (std::isfinite(lower_[j])) {
                        t = (x_[j] - lower_[j]) / (-rate);
                        at_upper = false;
                    }
                } else {  // moving up, blocks at upper
                    if (phase1 && x_[j] < lower_[j] - kFeasTol) {
                        t = (lower_[j] - x_[j]) / rate;
                        at_upper = false;
                    } else if (phase1 && x_[j] > upper_[j] + kFeasTol) {
                        continue;
                    } else if (std::isfinite(upper_[j])) {
                        t = (upper_[j] - x_[j]) / rate;
                        at_upper = true;
                    }
                }
                if (t < 0) t = 0;
                if (t < tmax - 1e-12 ||
                    (t < tmax + 1e-12 &&
                     (bland_ ? basic_[i] < (leave_row >= 0 ? basic_[leave_row] : ncols_)
                             : std::fabs(alpha_[i]) > std::fabs(leave_alpha)))) {
                    tmax = t;
                    leave_row = i;
                    leave_alpha = alpha_[i];
                    leave_at_upper = at_upper;
                }
            }
            double town = upper_[enter] - lower_[enter];  // inf if either side open
            bool flip = std::isfinite(town) && town <= tmax + 1e-12 && status_[enter] != kFreeZero;

            if (!flip && leave_row < 0) {
                if (phase1) throw SolveError("phase-1 ray without blocking event");
                return SolveStatus::unbounded;
            }

            double step = flip ? town : tmax;
            if (step < 0) step = 0;
            if (step <= 1e-12) {
                if (++stall_ > 2 * (m_ + ncols_)) bland_ = true;
            } else {
                stall_ = 0;
                bland_ = false;
            }

            double delta = dir * step;
            x_[enter] += delta;
            if (delta != 0.0)
                for (int i = 0; i < m_; ++i) x_[basic_[i]] -= alpha_[i] * delta;

            if (flip) {
                status_[enter] = status_[enter] == kAtLower ? kAtUpper : kAtLower;
                x_[enter] = status_[enter] == kAtLower ? lower_[enter] : upper_[enter];
                continue;
            }

            int leaving = basic_[leave_row];
            status_[leaving] = leave_at_upper ? kAtUpper : kAtLower;
            x_[leaving] = leave_at_upper ? upper_[leaving] : lower_[leaving];
            status_[enter] = kBasic;
            basic_[leave_row] = enter;

            // Binv <- E * Binv
            double piv = alpha_[leave_row];
            if (std::fabs(piv) < kPivotTol) {
                refactorize();
                continue;
            }
            double* prow = &binv_[static_cast<size_t>(leave_row) * m_];
            for (int k = 0; k < m_; ++k) prow[k] /= piv;
            for (int i = 0; i < m_; ++i) {
                if (i == leave_row) continue;
                double f = alpha_[i];
                if (f == 0.0) continue;
                double* row = &binv_[static_cast<size_t>(i) * m_];
                for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
            }
            if (++since_refactor >= 100) {
                refactorize();
                since_refactor = 0;
            }
        }
    }

    void extract(LpSolution& out) {
        recompute_basics();
        const double sgn = lp_.sense == Sense::maximize ? -1.0 : 1.0;
        out.primal.resize(n_);
        for (int j = 0; j < n_; ++j) {
            double v = x_[j];
            if (std::isfinite(lower_[j]) && v < lower_[j]) v = lower_[j];
            if (std::isfinite(upper_[j]) && v > upper_[j]) v = upper_[j];
            out.primal[j] = v;
        }
        double obj = lp_.objective_offset();
        for (int j = 0; j < n_; ++j) obj += lp_.variable(j).objective * out.primal[j];
        out.objective = obj;

        std::vector<double> cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = cost_[basic_[i]];
        btran(cb);
        out.duals.resize(m_);
        for (int i = 0; i < m_; ++i) out.duals[i] = sgn * y_[i];
        out.reduced_costs.resize(n_);
        for (int j = 0; j < n_; ++j) {
            double d = cost_[j];
            for (auto& [i, a] : cols_[j]) d -= y_[i] * a;
            out.reduced_costs[j] = sgn * (status_[j] == kBasic ? 0.0 : d);
        }
    }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    lp.check_well_formed();
    Simplex s(lp);
    return s.run();
}

Evaluation evaluate_at(const LinearProgram& lp, std::span<const double> values) {
    if (static_cast<int>(values.size()) != lp.num_variables())
        throw ValidationError("assignment does not cover every variable");
    Evaluation ev;
    ev.objective = lp.objective_offset();
    for (int j = 0; j < lp.num_variables(); ++j) ev.objective += lp.variable(j).objective * values[j];
    for (int i = 0; i < lp.num_constraints(); ++i) {
        const auto& r = lp.constraint(i);
        double lhs = 0.0;
        for (auto& [j, a] : r.coeffs) lhs += a * values[j];
        double viol = 0.0;
        switch (r.sense) {
            case RowSense::le: viol = lhs - r.rhs; break;
            case RowSense::ge: viol = r.rhs - lhs; break;
            case RowSense::eq: viol = std::fabs(lhs - r.rhs); break;
        }
        if (viol > ev.max_violation) {
            ev.max_violation = viol;
            ev.worst_constraint = r.name;
        }
    }
    ev.max_violation = std::max(ev.max_violation, 0.0);
    return ev;
}

Evaluation evaluate_at(const LinearProgram& lp, const std::map<std::string, double>& assignment) {
    std::vector<double> values(lp.num_variables());
    for (int j = 0; j < lp.num_variables(); ++j) {
        auto it = assignment.find(lp.variable(j).name);
        if (it == assignment.end())
            throw ValidationError("assignment missing variable " + lp.variable(j).name);
        values[j] = it->second;
    }
    return evaluate_at(lp, std::span<const double>(values));
}

std::string to_text(const LinearProgram& lp) {
    std::ostringstream os;
    os << (lp.sense == Sense::minimize ? "minimize" : "maximize");
    bool first = true;
    for (int j = 0; j < lp.num_variables(); ++j) {
        const auto& v = lp.variable(j);
        if (v.objective == 0.0) continue;
        os << (first ? " " : " + ") << v.objective << " " << v.name;
        first = false;
    }
    if (lp.objective_offset() != 0.0) os << (first ? " " : " + ") << lp.objective_offset();
    os << "\n";
    for (int i = 0; i < lp.num_constraints(); ++i) {
        const auto& r = lp.constraint(i);
        os << "  " << r.name << ": ";
        bool f2 = true;
        for (auto& [j, a] : r.coeffs) {
            os << (f2 ? "" : " + ") << a << " " << lp.variable(j).name;
            f2 = false;
        }
        os << (r.sense == RowSense::le ? " <= " : r.sense == RowSense::ge ? " >= " : " == ");
        os << r.rhs << "\n";
    }
    for (int j = 0; j < lp.num_variables(); ++j) {
        const auto& v = lp.variable(j);
        os << "  " << v.name << " in [" << v.lower << ", " << v.upper << "]\n";
    }
    return os.str();
}

}  // namespace sddp
