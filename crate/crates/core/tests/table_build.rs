//! Table construction: retention, symmetry of the retained set, and (ignored
//! by default) full-scale build probes with counts and timing.

use pbnlc_core::coeffs::{build_table, CoeffIndex, CoeffOrder, QuadratureSpec};
use pbnlc_core::model::{alpha_from_db_per_km, LinkConfig, PulseParams};
use std::time::Instant;

fn desk(n_spans: usize) -> (PulseParams<f64>, LinkConfig<f64>) {
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
            n_spans,
            noise_figure_db: 5.5,
            center_wavelength: 1550e-9,
        },
    )
}

#[test]
fn small_build_retains_symmetric_set() {
    let (pulse, link) = desk(2);
    let quad = QuadratureSpec::default();
    for order in [CoeffOrder::SoTerm1, CoeffOrder::SoTerm2] {
        let t = build_table(order, 12, -30.0, &pulse, &link, &quad).unwrap();
        assert!(t.len() > 0, "{order}: empty table");
        let r = t.reference().unwrap();
        assert!(r.norm() > 0.0);
        for (&idx, &v) in &t.entries {
            let (m, n, k) = (idx.m as i32, idx.n as i32, idx.k as i32);
            // m <-> n exchange: same value, bitwise
            assert_eq!(t.get(n, m, k), Some(v), "{order} {idx:?}");
            // full index negation: same value
            assert_eq!(
                t.get(-m, -n, -k),
                Some(v),
                "{order} {idx:?}"
            );
            if order == CoeffOrder::SoTerm2 {
                // second term is even in k
                assert_eq!(t.get(m, n, -k), Some(v), "{idx:?}");
            }
        }
        // window bound respected
        for &idx in t.entries.keys() {
            assert!(idx.m.unsigned_abs() <= 6 && idx.n.unsigned_abs() <= 6);
            assert!(idx.k.unsigned_abs() <= 6);
        }
    }
}

#[test]
fn fo_build_matches_single_coeff_api() {
    let (pulse, link) = desk(2);
    let quad = QuadratureSpec {
        rel_tol: 1e-4,
        ..QuadratureSpec::default()
    };
    let t = build_table(CoeffOrder::Fo, 8, -30.0, &pulse, &link, &quad).unwrap();
    assert!(t.len() > 0);
    for (&idx, &v) in t.entries.iter().take(5) {
        let direct =
            pbnlc_core::coeffs::fo_coeff(idx.m as i32, idx.n as i32, &pulse, &link, &quad)
                .unwrap();
        assert!((v - direct).norm() <= 1e-9 * direct.norm());
    }
}

#[test]
#[ignore] // slow probe: run explicitly for scale measurements
fn desk_scale_build_probe() {
    let (pulse, link) = desk(8);
    let quad = QuadratureSpec::default();
    for order in [CoeffOrder::Fo, CoeffOrder::SoTerm1, CoeffOrder::SoTerm2] {
        let t0 = Instant::now();
        let t = build_table(order, 100, -40.0, &pulse, &link, &quad).unwrap();
        println!(
            "{order}: {} entries in {:.1}s (ref {:?})",
            t.len(),
            t0.elapsed().as_secs_f64(),
            t.reference()
        );
    }
}

#[test]
#[ignore] // slow probe: full 2800 km scale
fn full_scale_build_probe() {
    let (pulse, link) = desk(35);
    let quad = QuadratureSpec::default();
    for order in [CoeffOrder::SoTerm1, CoeffOrder::SoTerm2] {
        let t0 = Instant::now();
        let t = build_table(order, 100, -40.0, &pulse, &link, &quad).unwrap();
        println!(
            "{order}: {} entries in {:.1}s (ref {:?})",
            t.len(),
            t0.elapsed().as_secs_f64(),
            t.reference()
        );
    }
}
