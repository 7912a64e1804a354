//! Decision procedures for a paraconsistent Gödel modal logic with sceptical
//! (■) and credulous (♦) aggregation over finitely branching fuzzy
//! bi-relational Kripke frames.

pub mod algebra;
pub mod cli;
pub mod formula;
pub mod model;
pub mod oracle;
pub mod tableau;
pub mod translate;

pub use algebra::{Rational01, ValueError};
pub use formula::{parse, Formula, ParseError, SourceFormula};
pub use model::{Coord, KripkeModel, Mode, Sign, ValuePair};
pub use oracle::{search_countermodel, verify_verdict, SearchBounds, SearchOutcome};
pub use tableau::{decide_sat, prove, SatMode, TableauConfig, TableauError, Verdict};
pub use translate::{minus_bullet, nabla, partial, plus_bullet, shadow_model};
