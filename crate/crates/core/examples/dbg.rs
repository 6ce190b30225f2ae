use acomplex_core::almost_complex::validate;
use acomplex_core::coords::{self, ConstructConfig};
use acomplex_core::deform::{benchmark_diffeo, pullback_pair};
use acomplex_core::chart::GridChart;
use std::time::Instant;

fn main() {
    let chart = GridChart::new(2, 16, std::f64::consts::TAU).unwrap();
    let cfg = ConstructConfig::default();
    let spec = benchmark_diffeo(0.1);
    let (i_field, g_field) = pullback_pair(&chart, &spec).unwrap();
    let acs = validate(i_field, Some(g_field), 1e-8).unwrap();
    let mut single = f64::NAN;
    for steps in [1usize, 5, 10, 20] {
        let t0 = Instant::now();
        match coords::construct_coordinates(&acs, steps, &cfg) {
            Ok(map) => {
                let r = coords::coordinate_residual(&map, &acs).unwrap();
                if steps == 1 { single = r; }
                let fr = coords::complex_frame_residual(&map, &acs).unwrap();
                let hm = coords::hermitian_metric_report(&map, acs.metric().unwrap()).unwrap();
                println!("steps={steps}: residual={r:.4e} frame={fr:.3e} holo={:.3e} herm={:.3e} ({:?})",
                    hm.max_holo_inverse, hm.hermiticity_residual, t0.elapsed());
            }
            Err(e) => println!("steps={steps}: ERROR {e}"),
        }
    }
    println!("single-step residual for comparison: {single:.4e}");
}
