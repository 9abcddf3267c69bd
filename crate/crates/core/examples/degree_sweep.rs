//! Van der Pol without the boundary multiplier at d = 2, 4, 6: volumes and
//! D_V between consecutive certificates.
use attractor_sos::pipeline::{run_degree_sweep, RunConfig};

fn main() {
    let mut cfg = RunConfig::from_json(r#"{"system": {"name": "vanderpol"}, "d": 2, "include_k1": false}"#).unwrap();
    cfg.simulation.enabled = false;
    let dir = std::env::temp_dir().join("attractor-sos-sweep");
    let report = run_degree_sweep(&cfg, &dir, &[2, 4, 6]).unwrap();
    for e in &report.entries {
        println!("d = {}: volume {:.4} ± {:.4}", e.d, e.volume.value, e.volume.standard_error);
    }
    for s in &report.steps {
        println!("D_V(d{}, d{}) = {:.4}, non-increasing: {}", s.from, s.to, s.dv.value, s.non_increasing);
    }
    println!("monotone: {}", report.monotone);
}
