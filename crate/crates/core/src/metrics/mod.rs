//! Dataset similarity measures, ball bounds and Hausdorff distances.

mod bounds;
mod hausdorff;

pub use bounds::{gbo, haus_bounds, ia, EpsilonPolicy, HausBounds};
pub use hausdorff::{
    haus_approx, haus_exact, haus_symmetric, nearest_slots, HausOutcome, HausdorffTraversal, SlotMatch,
    TraversalStats,
};
