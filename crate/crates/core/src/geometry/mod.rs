//! Model manifolds, points, quadrature grids, balls, tubes and center nets.

mod centers;
mod gauss;
mod grid;
mod model;
mod point;

pub use centers::{
    fibonacci_sphere, generate_centers, generate_centers_capped, CenterLayout, CenterSet,
    DEFAULT_CENTER_CAP,
};
pub use gauss::gauss_gegenbauer;
pub use grid::{
    build_grid, build_zonal_grid, restrict_to_ball, restrict_to_tube, BallSpec, GridLayout,
    QuadratureGrid, TubeSpec, MAX_GRID_NODES,
};
pub use model::{
    critical_exponent, sphere_area, unit_ball_volume, ManifoldKind, ManifoldModel, MAX_TORUS_DIM,
};
pub use point::{geodesic_distance, Point};
pub(crate) use point::{cross3, dot3, norm3};
