//! Minimize trace X subject to X12 = 1 with both solvers.
use attractor_sos::sdp::{self, solve_ipm, write_sdp_text, IpmSettings, SdpProblem, SolverSettings, VarRef};

fn main() {
    let mut p = SdpProblem::default();
    let b = p.add_block(2);
    p.add_constraint(vec![(VarRef::entry(b, 0, 1), 1.0)], 1.0);
    p.objective = vec![(VarRef::entry(b, 0, 0), 1.0), (VarRef::entry(b, 1, 1), 1.0)];
    print!("{}", write_sdp_text(&p));

    let admm = sdp::solve(&p, &SolverSettings::default()).unwrap();
    let ipm = solve_ipm(&p, &IpmSettings::default()).unwrap();
    for (name, s) in [("admm", admm), ("ipm", ipm)] {
        println!(
            "{name}: {:?} obj {:.9} dual {:.9} iters {} X = {:.6}",
            s.status, s.objective, s.dual_objective, s.iterations, s.blocks[0]
        );
    }
}
