//! Monte-Carlo volumes against the closed form, and D_V between two disks.
use attractor_sos::geometry::{dv_metric, ellipsoid_volume, mc_volume};
use nalgebra::DMatrix;

fn main() {
    let p = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 4.0]);
    let exact = ellipsoid_volume(&p).unwrap();
    let q = p.clone();
    let est = mc_volume(
        move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (v.transpose() * &q * &v)[(0, 0)] <= 1.0
        },
        &[[-1.0, 1.0], [-1.1, 1.1], [-0.6, 0.6]],
        1_000_000,
        0,
    );
    println!("ellipsoid: exact {exact:.5}, MC {:.5} ± {:.5}", est.value, est.standard_error);

    let disk = |r: f64| move |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= r * r;
    let d = dv_metric(disk(1.0), disk(0.5), &[[-1.0, 1.0], [-1.0, 1.0]], 1_000_000, 1, true);
    println!(
        "D_V(unit disk, half disk) = {:.4} ± {:.4} (exact {:.4}), containment gap {:?}",
        d.dv.value,
        d.dv.standard_error,
        0.75 * std::f64::consts::PI,
        d.containment_gap
    );
}
