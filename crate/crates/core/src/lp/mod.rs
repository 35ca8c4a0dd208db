//! Upper bounds for general trees by linear programming.

pub mod expr;
pub mod program;
pub mod simplex;
pub mod upper;

pub use expr::{subsume, LinExpr, MinExpr};
pub use program::{Constraint, LinearProgram, LpOutcome, LpStatus, Relation, Sense};
pub use simplex::{solve_exact, solve_exact_rowgen, solve_float, solve_lp};
pub use upper::{answer_premise_restricted_general, assemble_upper_lp, LpCounts, UpperLp};
