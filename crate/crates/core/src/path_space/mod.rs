//! Path-space primitives: grids, stopped paths, the `d_p` pseudo-metric,
//! concatenation, shifted functionals, step paths and time-changes.

mod grid;
pub mod io;
mod norm;
mod pw;
mod random;
mod skeleton;
mod time_change;

pub use grid::{concat, concat_pw, DiscretePath, Grid, MetricOrder, PointInTheta};
pub use norm::{
    distance, path_norm, pw_distance, pw_norm_pow, stopped_norm_pow_closed_form, tuple_norm, DistanceMode,
    NormOrder,
};
pub use pw::PwPath;
pub(crate) use pw::euclid;
pub use random::{random_point, random_walk_path};
pub use skeleton::{step_path, StepSkeleton};
pub use time_change::TimeChange;
