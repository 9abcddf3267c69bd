//! Solve for a Lorenz certificate and validate it by sampling.
use attractor_sos::certify::{check_boundary_condition_via_lemma, check_certificate, CheckSettings};
use attractor_sos::detmax::{run_detmax, DetMaxSettings};
use attractor_sos::dynsys::{apply_scaling, builtin};

fn main() {
    let (sys, dom) = builtin("lorenz").unwrap();
    let sys = apply_scaling(&sys);
    let (cert, _) = run_detmax(&sys, &dom, 4, 1e-4, true, &DetMaxSettings::default()).unwrap();
    let settings = CheckSettings::default();
    let report = check_certificate(&cert, &sys, &dom, &settings).unwrap();
    println!("max residual      {:.3e} at {:?}", report.max_lyapunov_residual, report.residual_argmax);
    println!("boundary margin   {:.3e}", report.min_boundary_margin);
    println!("witness J = {:.4} at {:?}", report.witness_value, report.witness);
    println!("passes at 1e-6:   {}", report.passes(1e-6));
    let lemma = check_boundary_condition_via_lemma(&cert, &sys, &dom, &settings).unwrap();
    println!("lemma: {:?}", lemma);
    let (r0, r1) = cert.identity_residuals(&sys.f, &dom.g).unwrap();
    println!("identity residuals {r0:.1e} {r1:?}, min Gram eigenvalue {:.2e}", cert.min_gram_eigenvalue());
}
