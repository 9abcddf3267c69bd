//! Converse construction from the analytic W of the seventh-degree example.
//! Pass a degree as the first argument (default 10).
use attractor_sos::certify::{analytic_w, converse_construct, CertifyError, CheckSettings, ConverseAuto};
use attractor_sos::dynsys::{apply_scaling, builtin};

fn main() {
    let d: u32 = std::env::args().nth(1).map_or(10, |s| s.parse().expect("even degree"));
    let (sys, dom) = builtin("ahmadi7").unwrap();
    let sys = apply_scaling(&sys);
    let (w, gw) = analytic_w("ahmadi7").unwrap();
    let result = match converse_construct(w, gw, &sys, &dom, d, None, &ConverseAuto::default(), &CheckSettings::default()) {
        Ok(r) => r,
        Err(CertifyError::FitTooCoarse { partial, fit_error, bound, .. }) => {
            println!("fit error {fit_error:.3e} is not below {bound:.3e}; showing the partial result");
            *partial
        }
        Err(e) => panic!("{e}"),
    };
    let p = &result.params;
    println!("gamma {:.4e} (M1*C/2 = {:.4e})", p.gamma, p.m1 * p.c / 2.0);
    println!("sigma {:.3e} delta {:.3e} theta {:.3e} alpha {:.3e}", p.sigma, p.delta, p.theta, p.alpha);
    println!("max sampled residual {:.3e}", result.report.max_lyapunov_residual);
    println!("Gram rank one: {} terms in P", result.certificate.poly.num_terms());
}
