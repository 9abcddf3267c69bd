//! Full run from a config file (default: configs/lorenz.json) into a
//! temporary directory.
use attractor_sos::pipeline::{run_pipeline, RunConfig};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/lorenz.json".into());
    let cfg = RunConfig::load(path.as_ref()).unwrap();
    let dir = std::env::temp_dir().join("attractor-sos-example");
    match run_pipeline(&cfg, &dir) {
        Ok(out) => {
            let r = &out.report;
            println!("artifacts in {}", out.out_dir.display());
            println!("residual {:.3e}, boundary margin {:.3e}", r.certificate.max_lyapunov_residual, r.certificate.min_boundary_margin);
            println!("sublevel volume {:.4} ± {:.4}", r.sublevel_volume.value, r.sublevel_volume.standard_error);
            if let Some(inv) = &r.invariance {
                println!("invariance: {} of {} entered, {} violations", inv.entered, inv.n_trajectories, inv.violations.len());
            }
            if let Some(t) = &r.trajectory {
                println!("trajectory max J after burn-in {:.4}", t.max_j_after_burn_in);
            }
        }
        Err(e) => println!("run failed at {:?}: {}", e.stage, e.message),
    }
}
