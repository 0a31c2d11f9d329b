//! Shared setup for the kernel benchmarks.

use std::sync::Arc;

use morrey_lab::{build_grid, Domain, Grid};

pub fn square_grid(resolution: u32) -> Arc<Grid> {
    build_grid(Domain::unit_square(), resolution).expect("benchmark grid")
}

pub fn disk_grid(resolution: u32) -> Arc<Grid> {
    build_grid(Domain::unit_disk(), resolution).expect("benchmark grid")
}
