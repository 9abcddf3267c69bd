//! Certify a sum of squares and reject the Motzkin polynomial.
use attractor_sos::poly::parse_polynomial;
use attractor_sos::sdp::SolverSettings;
use attractor_sos::soscomp::sos_feasibility;

fn main() {
    let s = SolverSettings::default();
    for src in [
        "2*x1^4 + 2*x1^3*x2 - x1^2*x2^2 + 5*x2^4",
        "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1",
        "x1^2 - 2*x1 + 0.5",
    ] {
        let p = parse_polynomial(src, 2).unwrap();
        let r = sos_feasibility(&p, &s).unwrap();
        match r.certificate {
            Some(c) => println!(
                "{src}\n  SOS, Gram {}x{}, min eig {:.2e}, coefficient error {:.1e}",
                c.gram.nrows(),
                c.gram.ncols(),
                c.min_eigenvalue(),
                r.coefficient_error
            ),
            None => println!("{src}\n  no certificate ({:?})", r.status),
        }
    }
}
