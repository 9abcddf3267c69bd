//! Determinant maximization on Van der Pol without the boundary multiplier.
//! Pass a degree as the first argument (default 4).
use attractor_sos::detmax::{run_detmax, DetMaxSettings};
use attractor_sos::dynsys::{apply_scaling, builtin};

fn main() {
    let d: u32 = std::env::args().nth(1).map_or(4, |s| s.parse().expect("even degree"));
    let (sys, dom) = builtin("vanderpol").unwrap();
    let sys = apply_scaling(&sys);
    let (cert, state) = run_detmax(&sys, &dom, d, 1e-4, false, &DetMaxSettings::default()).unwrap();
    for h in &state.history {
        println!(
            "step {:2}  det^(1/N) {:.6e}  step {:.3e}  fw gap {:.2e}  solver its {}",
            h.step, h.detroot, h.step_size, h.fw_gap, h.solver_iterations
        );
    }
    println!("diagnostic: {:?}", state.diagnostic);
    println!("J = {:?}", cert.lyapunov());
}
