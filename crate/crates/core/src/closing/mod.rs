//! Closing an almost-returning orbit segment to a hyperbolic periodic point.
//!
//! Everything runs on the flat torus, where charts are global and the
//! exponential map is a translation. Certificates come from sampling and are
//! labelled numerical.

mod charts;
mod locate;
mod manifold;
mod pair;
mod verify;

pub use charts::{build_charts, ChartSeq, Frame};
pub use locate::{
    certify_periodic_point, harvest, harvest_from, locate_periodic_point, Attempt, Harvest, HarvestConfig, HyperbolicPoint,
    LocateConfig, Location,
};
pub use manifold::{grow_manifold, invariance_error, local_manifolds, polyline_dist, LocalManifolds};
pub use pair::{find_return_pair, PairTally, ReturnSearch, ReturnThresholds};
pub use verify::{paper_box_scale, toy_boxes, verify_hyperbolic_map, CertificateReport, ChartBox, ConePair, StepCheck};
