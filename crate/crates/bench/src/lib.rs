//! Shared fixtures for the benchmarks.

use pdelin::experiments::Instance;
use pdelin::observe::simulate_whitenoise;
use pdelin::pdes::{darcy_forward, DarcyGrid, Influx};
use pdelin::{scalar_fn, SeqObservation};

/// Volterra figure instance with one white-noise observation at level `n`.
pub fn volterra_observation(n: f64) -> (Instance, SeqObservation) {
    let inst = Instance::volterra_figure(n).expect("volterra instance");
    let obs = simulate_whitenoise(&inst.v0, &inst.system, n, 7).expect("simulate");
    (inst, obs)
}

/// Finite-difference inputs for the characteristics inversion with
/// `f = 1 + sin(2x+y)/2` and `u = (x+1/2)^2 + (y+1/4)^2` on the boundary.
pub fn darcy_grid(m: usize) -> DarcyGrid {
    let f = |x: &[f64]| 1.0 + 0.5 * (2.0 * x[0] + x[1]).sin();
    let h = move |x: &[f64]| {
        let c = (2.0 * x[0] + x[1]).cos();
        c * 2.0 * (x[0] + 0.5) + 0.5 * c * 2.0 * (x[1] + 0.25) + 4.0 * f(x)
    };
    let g = |x: &[f64]| (x[0] + 0.5).powi(2) + (x[1] + 0.25).powi(2);
    let u = darcy_forward(&f, &h, &g, m).expect("darcy forward");
    let hg = u.like(u.points().iter().map(|x| h(x)).collect());
    DarcyGrid::from_samples(&u, &hg, Influx::Function(scalar_fn(f))).expect("darcy grid")
}
