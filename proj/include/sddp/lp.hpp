#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sddp/errors.hpp"

namespace sddp {

enum class Sense { minimize, maximize };
enum class RowSense { le, eq, ge };
enum class SolveStatus { optimal, infeasible, unbounded };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Solver tolerances, fixed for reproducibility.
inline constexpr double kFeasTol = 1e-9;    // primal feasibility
inline constexpr double kDualTol = 1e-8;    // reduced-cost / duality-gap
inline constexpr double kPivotTol = 1e-10;  // minimum pivot magnitude
inline constexpr double kTieTol = 1e-12;    // entering-candidate tie window

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double objective = 0.0;
};

struct Constraint {
    std::string name;
    std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
    RowSense sense = RowSense::le;
    double rhs = 0.0;
};

/// A bounded-variable linear program.  Variables and constraints are addressed
/// by index; names must be unique and are kept for diagnostics and duals.
class LinearProgram {
public:
    Sense sense = Sense::minimize;

    int add_variable(const std::string& name, double lower, double upper, double objective = 0.0);
    int add_constraint(const std::string& name, std::vector<std::pair<int, double>> coeffs,
                       RowSense sense_, double rhs);

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(rows_.size()); }

    const Variable& variable(int j) const { return vars_[j]; }
    const Constraint& constraint(int i) const { return rows_[i]; }

    int variable_index(const std::string& name) const;      // -1 if absent
    int constraint_index(const std::string& name) const;    // -1 if absent

    void set_rhs(int row, double rhs) { rows_[row].rhs = rhs; }
    void set_bounds(int var, double lower, double upper);
    void set_objective_coeff(int var, double c) { vars_[var].objective = c; }
    void set_objective_offset(double c) { objective_offset_ = c; }
    double objective_offset() const { return objective_offset_; }

    // Throws ValidationError on NaN data, non-finite rhs, or bad indices.
    void check_well_formed() const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    std::map<std::string, int> var_index_;
    std::map<std::string, int> row_index_;
    double objective_offset_ = 0.0;
};

struct LpSolution {
    SolveStatus status = SolveStatus::optimal;
    double objective = 0.0;
    std::vector<double> primal;         // per variable
    std::vector<double> duals;          // per constraint; d(optimal value)/d(rhs)
    std::vector<double> reduced_costs;  // per variable
    int iterations = 0;

    double value(const LinearProgram& lp, const std::string& var) const;
    double dual(const LinearProgram& lp, const std::string& row) const;
};

/// Solves with a bounded-variable two-phase revised simplex.  Dual sign
/// convention: duals[i] is the derivative of the optimal objective with
/// respect to constraint i's right-hand side (so the dual of a fishing row
/// "x = xbar" is a subgradient of the optimal value in xbar).
LpSolution solve_lp(const LinearProgram& lp);

struct Evaluation {
    double objective = 0.0;
    double max_violation = 0.0;  // over constraint rows
    std::string worst_constraint;
};

/// Plain linear-algebra evaluation of a complete assignment; no solving.
Evaluation evaluate_at(const LinearProgram& lp, std::span<const double> values);
Evaluation evaluate_at(const LinearProgram& lp, const std::map<std::string, double>& assignment);

/// One constraint per line, for failure triage.
std::string to_text(const LinearProgram& lp);

}  // namespace sddp
