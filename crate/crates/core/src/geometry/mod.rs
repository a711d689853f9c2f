//! Closed curves, distance functions and level-set profiles.

mod contour;
mod distance;
mod profiles;

pub use contour::{
    make_circle, make_ellipse_by_perimeter, make_perturbed_circle, Contour, ContourSpec, Harmonic, Point,
    DEFAULT_SAMPLES,
};
pub use distance::{in_radius, project, signed_distance, Projection};
pub use profiles::{distance_profiles, raster_sublevel_areas, DistanceProfileTable, ParallelCoordinates, ProfileSide};
