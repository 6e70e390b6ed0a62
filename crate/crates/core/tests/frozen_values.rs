//! Spot checks against 40-digit reference values computed independently with
//! arbitrary-precision arithmetic (Gaussian quadratic-form propagation chain
//! evaluated symbolically, then frozen here as literals).

use num_complex::Complex64;
use pbnlc_core::coeffs::{fo_integrand, term1_integrand, term2_integrand, CoeffIndex};
use pbnlc_core::model::{alpha_from_db_per_km, LinkConfig, PulseParams};
use pbnlc_core::rxdsp::q_from_ber;

fn desk() -> (PulseParams<f64>, LinkConfig<f64>) {
    let t = 31.25e-12;
    (
        PulseParams {
            t_sym: t,
            tau: 0.5 * t,
            p0: 1e-3,
            rrc_rolloff: 0.1,
        },
        LinkConfig {
            alpha: alpha_from_db_per_km(0.2),
            beta2: -20.47e-27,
            gamma: 1.22e-3,
            span_length: 80e3,
            n_spans: 35,
            noise_figure_db: 5.5,
            center_wavelength: 1550e-9,
        },
    )
}

fn close(got: Complex64, want: Complex64) {
    let rel = (got - want).norm() / want.norm();
    assert!(rel < 1e-12, "rel {rel:.2e}: got {got:e} want {want:e}");
}

#[test]
fn integrands_match_high_precision_references() {
    let (pulse, link) = desk();
    close(
        fo_integrand(10e3, 1, 2, &pulse, &link, 80e3).unwrap(),
        Complex64::new(0.0036551926343801923799, -0.0029283049900562508188),
    );
    close(
        fo_integrand(80e3, 0, 0, &pulse, &link, 80e3).unwrap(),
        Complex64::new(-0.0042047882520978229238, 0.085446019620000711308),
    );
    close(
        term1_integrand(40e3, 20e3, CoeffIndex::new(1, 1, 1), &pulse, &link).unwrap(),
        Complex64::new(0.00057208550101889413472, 0.0018460423192771529781),
    );
    close(
        term1_integrand(120e3, 90e3, CoeffIndex::new(0, 0, 0), &pulse, &link).unwrap(),
        Complex64::new(-0.00058226696004552959815, -0.000019239681658790890474),
    );
    close(
        term2_integrand(40e3, 20e3, CoeffIndex::new(2, -1, 1), &pulse, &link).unwrap(),
        Complex64::new(-0.00013951246690292899931, -0.00014379808511160680004),
    );
    close(
        term2_integrand(150e3, 70e3, CoeffIndex::new(-3, 4, -2), &pulse, &link).unwrap(),
        Complex64::new(1.9292018609772248058e-6, -7.1297815012251331021e-7),
    );
}

#[test]
fn q_factor_matches_high_precision_reference() {
    let q = q_from_ber(2e-2);
    assert!((q - 2.0537489106318230529).abs() < 1e-12, "{q}");
    let q_db = 20.0 * q.log10();
    assert!((q_db - 6.2509469216150008081).abs() < 1e-12, "{q_db}");
}

#[test]
fn integrand_domain_is_guarded() {
    let (pulse, link) = desk();
    assert!(term1_integrand(10e3, 20e3, CoeffIndex::new(0, 0, 0), &pulse, &link).is_err());
    assert!(fo_integrand(-1.0, 0, 0, &pulse, &link, 80e3).is_err());
}
