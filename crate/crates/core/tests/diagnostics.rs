use spherefield::experiments::diagnostics::{
    default_c_grid, oscillation_tail, smooth_event, OscillationTailSetup, SmoothEventSetup,
};
use spherefield::grid::EquiangularGrid;
use spherefield::spectrum::power_law_spectrum;

#[test]
fn smooth_event_holds_for_the_fitted_constant() {
    let s = power_law_spectrum(2.5, 256).unwrap();
    let g = EquiangularGrid::polar_cap(0.05, 24, 514).unwrap();
    let rep = smooth_event(&SmoothEventSetup {
        spectrum: &s,
        d: 1,
        r0: 0.05,
        radii: None,
        c_grid: default_c_grid(),
        replicates: 200,
        seed: 41,
        grid: &g,
    })
    .unwrap();
    println!("{rep:?}");
    assert!(rep.best_frequency >= 0.9, "{rep:?}");
    assert!(rep.target > 0.8 && rep.target < 0.9);
}

#[test]
fn full_field_oscillation_tail_is_gaussian() {
    let s = power_law_spectrum(3.0, 128).unwrap();
    let g = EquiangularGrid::polar_cap(0.05, 12, 258).unwrap();
    let rep = oscillation_tail(&OscillationTailSetup {
        spectrum: &s,
        d: 1,
        radius: 0.05,
        b: vec![4.0, 8.0],
        beta: 0.25,
        replicates: 200,
        batches: 4,
        seed: 5,
        grid: &g,
    })
    .unwrap();
    assert!(rep.full.r_squared >= 0.95, "R² {}", rep.full.r_squared);
    assert!(rep.full.slope < 0.0);
}
