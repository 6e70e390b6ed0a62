//! Randomized invariants of the library contracts: inputs are drawn from wide
//! ranges and the properties that must hold for every input are asserted.
//! These complement the fixed-case unit tests inside each module.

use num_complex::Complex64;
use pbnlc_core::channel::{propagate_link, ssfm_span, NoiseModel, SpanPlan};
use pbnlc_core::coeffs::{
    build_table, quantize_combine, CoeffIndex, CoeffOrder, CoeffTable, QuadratureSpec,
};
use pbnlc_core::complexity::{count_M, mult_dbp, mult_edc, mult_pbnlc, ComplexityParams};
use pbnlc_core::model::{
    alpha_from_db_per_km, qam16_map, rrc_taps, shape, Constellation, LinkConfig, PulseParams,
    SampledField, SymbolGrid,
};
use pbnlc_core::predistort::{fo_distortion, predistort, so_distortion, PredistortConfig};
use pbnlc_core::rxdsp::{edc, matched_filter_downsample, metrics, ml_detect};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn desk_pulse() -> PulseParams<f64> {
    let t = 31.25e-12;
    PulseParams {
        t_sym: t,
        tau: 0.5 * t,
        p0: 1e-3,
        rrc_rolloff: 0.1,
    }
}

fn desk_link(n_spans: usize) -> LinkConfig<f64> {
    LinkConfig {
        alpha: alpha_from_db_per_km(0.2),
        beta2: -20.47e-27,
        gamma: 1.22e-3,
        span_length: 80e3,
        n_spans,
        noise_figure_db: 5.5,
        center_wavelength: 1550e-9,
    }
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn grid_pair(n: usize) -> impl Strategy<Value = SymbolGrid<f64>> {
    (
        proptest::collection::vec(cplx(), n),
        proptest::collection::vec(cplx(), n),
    )
        .prop_map(|(x, y)| SymbolGrid {
            x,
            y,
            symbol_rate: 32e9,
        })
}

fn field_from(x: Vec<Complex64>, y: Vec<Complex64>) -> SampledField<f64> {
    SampledField {
        x,
        y,
        sample_rate: 128e9,
        center_time_offset: 0.0,
    }
}

fn toy_table(order: CoeffOrder, entries: &[(i32, i32, i32, f64, f64)]) -> CoeffTable<f64> {
    CoeffTable {
        order,
        l_w: 8,
        mu_db: -40.0,
        entries: entries
            .iter()
            .map(|&(m, n, k, re, im)| (CoeffIndex::new(m, n, k), Complex64::new(re, im)))
            .collect::<BTreeMap<_, _>>(),
        quantized: false,
        quant_scale: None,
        groups: None,
        pulse: desk_pulse(),
        link: desk_link(2),
    }
}

fn toy_cfg<'a>(
    fo: Option<&'a CoeffTable<f64>>,
    t1: Option<&'a CoeffTable<f64>>,
    t2: Option<&'a CoeffTable<f64>>,
) -> PredistortConfig<'a, f64> {
    PredistortConfig {
        epsilon_fo: 1.0,
        epsilon_so: 1.0,
        l_w: 8,
        use_term2: t2.is_some(),
        gamma: 1.22e-3,
        p0: 1e-3,
        fo_table: fo,
        so_term1_table: t1,
        so_term2_table: t2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rrc_taps_have_unit_energy_and_even_symmetry(
        rolloff in 0.0f64..=1.0,
        span in 8usize..=40,
        sps in 2usize..=8,
    ) {
        let taps = rrc_taps(rolloff, span, sps).unwrap();
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        prop_assert!((energy - 1.0).abs() < 1e-12, "energy {energy}");
        let n = taps.len();
        for i in 0..n / 2 {
            prop_assert!((taps[i] - taps[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn shaping_is_linear(
        n in 4usize..48,
        seed_grids in (proptest::collection::vec(cplx(), 96), proptest::collection::vec(cplx(), 96)),
        alpha in cplx(),
        sps in 2usize..=4,
    ) {
        let (va, vb) = seed_grids;
        let a = SymbolGrid { x: va[..n].to_vec(), y: va[n..2 * n].to_vec(), symbol_rate: 32e9 };
        let b = SymbolGrid { x: vb[..n].to_vec(), y: vb[n..2 * n].to_vec(), symbol_rate: 32e9 };
        let sum = SymbolGrid {
            x: a.x.iter().zip(&b.x).map(|(u, v)| u + alpha * v).collect(),
            y: a.y.iter().zip(&b.y).map(|(u, v)| u + alpha * v).collect(),
            symbol_rate: 32e9,
        };
        let taps = rrc_taps(0.1, 8, sps).unwrap();
        let fa = shape(&a, &taps, sps);
        let fb = shape(&b, &taps, sps);
        let fs = shape(&sum, &taps, sps);
        let scale = fs.x.iter().chain(&fs.y).map(|v| v.norm()).fold(1e-30, f64::max);
        for i in 0..fs.len() {
            prop_assert!((fs.x[i] - (fa.x[i] + alpha * fb.x[i])).norm() < 1e-12 * scale);
            prop_assert!((fs.y[i] - (fa.y[i] + alpha * fb.y[i])).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn noiseless_loopback_recovers_every_bit(
        bits in proptest::collection::vec(0u8..2, 8 * 32),
        sps in 2usize..=5,
    ) {
        let c = Constellation::qam16();
        let n = bits.len() / 8;
        let x = qam16_map(&bits[..4 * n], &c).unwrap();
        let y = qam16_map(&bits[4 * n..], &c).unwrap();
        let syms = SymbolGrid::new(x, y, 32e9).unwrap();
        // blind detector normalization assumes data-like energy; exclude the
        // (vanishingly unlikely) degenerate draws where the frame average is
        // far from the alphabet mean
        let e: f64 = syms.x.iter().chain(&syms.y).map(|v| v.norm_sqr()).sum::<f64>()
            / (2.0 * n as f64);
        prop_assume!(e > 0.7 && e < 1.4);
        let taps = rrc_taps(0.1, n, sps).unwrap();
        let tx = shape(&syms, &taps, sps);
        let rx = matched_filter_downsample(&tx, &taps, sps, 0).unwrap();
        let det = ml_detect(&rx, &c);
        let rec: Vec<u8> = det.bits_x.iter().chain(&det.bits_y).copied().collect();
        prop_assert_eq!(rec, bits);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantization_grids_groups_and_drops_consistently(
        raw in proptest::collection::btree_map(
            ((-4i32..=4), (-4i32..=4), (-4i32..=4)),
            (-1.2f64..1.2, -1.2f64..1.2),
            1..60,
        ),
        frac in 0.02f64..0.5,
    ) {
        let mut entries: Vec<(i32, i32, i32, f64, f64)> = raw
            .into_iter()
            .filter(|&((m, n, k), _)| (m, n, k) != (0, 0, 0))
            .map(|((m, n, k), (re, im))| (m, n, k, re, im))
            .collect();
        entries.push((0, 0, 0, 1.7, -0.9));
        let table = toy_table(CoeffOrder::SoTerm1, &entries);
        let step = table.reference().unwrap().norm() * frac;
        let q = quantize_combine(&table, Some(step)).unwrap();

        prop_assert_eq!(q.quant_scale, Some(step));
        prop_assert!(q.quantized);
        let cell = |v: Complex64| ((v.re / step).round() as i64, (v.im / step).round() as i64);
        // every surviving entry sits exactly on the grid, every dropped entry
        // quantized to the zero cell
        for (idx, &v) in &q.entries {
            let (a, b) = cell(table.entries[idx]);
            prop_assert!((a, b) != (0, 0));
            prop_assert!((v.re - a as f64 * step).abs() <= 1e-9 * step.max(1.0));
            prop_assert!((v.im - b as f64 * step).abs() <= 1e-9 * step.max(1.0));
        }
        for (idx, &v) in &table.entries {
            if !q.entries.contains_key(idx) {
                prop_assert_eq!(cell(v), (0, 0));
            }
        }
        // the groups partition the surviving set and count_M counts them
        let groups = q.groups.as_ref().unwrap();
        let mut seen = 0usize;
        for ((a, b), idxs) in groups {
            prop_assert!(!idxs.is_empty());
            for idx in idxs {
                prop_assert_eq!(cell(q.entries[idx]), (*a, *b));
                seen += 1;
            }
        }
        prop_assert_eq!(seen, q.entries.len());
        prop_assert_eq!(count_M(&q), groups.len());
        prop_assert_eq!(count_M(&table), table.entries.len());
        // quantizing twice is rejected rather than silently rescaled
        prop_assert!(quantize_combine(&q, Some(step)).is_err());
    }

    #[test]
    fn complexity_formulas_are_exact_and_monotone(
        steps in 1u32..64,
        spans in 1u32..64,
        log_fft in 4u32..14,
        n_samples in 1u32..100_000,
        m in 0usize..5_000_000,
    ) {
        let p = ComplexityParams { n_steps: steps, n_spans: spans, n_fft: 1 << log_fft, n_samples };
        prop_assert_eq!(mult_pbnlc(m), 2.0 * (4.0 * m as f64 + 3.0));
        let lg = log_fft as f64;
        prop_assert_eq!(mult_dbp(&p), 8.0 * (steps * spans) as f64 * (1u64 << log_fft) as f64 * (lg + 10.5) / n_samples as f64);
        prop_assert_eq!(mult_edc(&p), 8.0 * (1u64 << log_fft) as f64 * (lg + 1.0) / n_samples as f64);
        let more_steps = ComplexityParams { n_steps: steps + 1, ..p };
        let more_spans = ComplexityParams { n_spans: spans + 1, ..p };
        let more_fft = ComplexityParams { n_fft: 2 << log_fft, ..p };
        let more_samples = ComplexityParams { n_samples: n_samples + 1, ..p };
        prop_assert!(mult_dbp(&more_steps) > mult_dbp(&p));
        prop_assert!(mult_dbp(&more_spans) > mult_dbp(&p));
        prop_assert!(mult_dbp(&more_fft) > mult_dbp(&p));
        prop_assert!(mult_dbp(&more_samples) < mult_dbp(&p));
        prop_assert!(mult_edc(&more_fft) > mult_edc(&p));
        prop_assert!(mult_pbnlc(m + 1) > mult_pbnlc(m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonlinear_step_preserves_power_pointwise(
        data in (proptest::collection::vec(cplx(), 128), proptest::collection::vec(cplx(), 128)),
        gamma in 0.5e-3f64..3e-3,
        steps in 1usize..6,
    ) {
        let mut link = desk_link(1);
        link.beta2 = 0.0;
        link.alpha = 0.0;
        link.gamma = gamma;
        let field = field_from(data.0, data.1);
        let plan = SpanPlan::new(link.span_length / steps as f64).unwrap();
        let out = ssfm_span(&field, &link, &plan).unwrap();
        for i in 0..field.len() {
            prop_assert!((out.x[i].norm_sqr() - field.x[i].norm_sqr()).abs() < 1e-12);
            prop_assert!((out.y[i].norm_sqr() - field.y[i].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn lossless_propagation_conserves_energy(
        data in (proptest::collection::vec(cplx(), 128), proptest::collection::vec(cplx(), 128)),
        gamma in 0.0f64..3e-3,
    ) {
        let mut link = desk_link(1);
        link.alpha = 0.0;
        link.gamma = gamma;
        let field = field_from(data.0, data.1);
        let plan = SpanPlan::new(10e3).unwrap();
        let out = ssfm_span(&field, &link, &plan).unwrap();
        let rel = (out.mean_power() / field.mean_power() - 1.0).abs();
        prop_assert!(rel < 1e-12, "rel {rel}");
    }

    #[test]
    fn noisy_propagation_is_seed_deterministic(
        data in (proptest::collection::vec(cplx(), 128), proptest::collection::vec(cplx(), 128)),
        seed in any::<u64>(),
    ) {
        let link = desk_link(2);
        let noise = NoiseModel {
            noise_figure_db: 5.5,
            center_frequency: link.carrier_frequency(),
            seed,
            enabled: true,
        };
        let field = field_from(data.0, data.1);
        let plan = SpanPlan::new(20e3).unwrap();
        let a = propagate_link(&field, &link, &plan, &noise).unwrap();
        let b = propagate_link(&field, &link, &plan, &noise).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.y, b.y);
    }

    #[test]
    fn edc_is_additive_in_distance(
        data in (proptest::collection::vec(cplx(), 256), proptest::collection::vec(cplx(), 256)),
        total_km in 10.0f64..400.0,
        split in 0.0f64..1.0,
    ) {
        let link = desk_link(1);
        let field = field_from(data.0, data.1);
        let l1 = total_km * 1e3 * split;
        let l2 = total_km * 1e3 - l1;
        let once = edc(&field, &link, total_km * 1e3);
        let twice = edc(&edc(&field, &link, l1), &link, l2);
        let scale = once.x.iter().chain(&once.y).map(|v| v.norm()).fold(1e-30, f64::max);
        for i in 0..once.len() {
            prop_assert!((once.x[i] - twice.x[i]).norm() < 1e-12 * scale);
            prop_assert!((once.y[i] - twice.y[i]).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn error_count_survives_quarter_turn_rotations(
        bits in proptest::collection::vec(0u8..2, 8 * 64),
        noise in proptest::collection::vec((-0.22f64..0.22, -0.22f64..0.22), 128),
        quarters in 1u8..=3,
    ) {
        let c = Constellation::qam16();
        let n = bits.len() / 8;
        let x = qam16_map(&bits[..4 * n], &c).unwrap();
        let y = qam16_map(&bits[4 * n..], &c).unwrap();
        let rot = Complex64::new(0.0, 1.0).powu(quarters as u32);
        let perturb = |v: &[Complex64], off: usize| -> Vec<Complex64> {
            v.iter()
                .enumerate()
                .map(|(i, s)| s + Complex64::new(noise[off + i].0, noise[off + i].1))
                .collect()
        };
        let tx = SymbolGrid::new(x.clone(), y.clone(), 32e9).unwrap();
        let rx = SymbolGrid::new(perturb(&x, 0), perturb(&y, n), 32e9).unwrap();
        let spin = |g: &SymbolGrid<f64>| SymbolGrid {
            x: g.x.iter().map(|v| v * rot).collect(),
            y: g.y.iter().map(|v| v * rot).collect(),
            symbol_rate: g.symbol_rate,
        };
        let errors = |tx: &SymbolGrid<f64>, rx: &SymbolGrid<f64>| -> usize {
            let dt = ml_detect(tx, &c);
            let dr = ml_detect(rx, &c);
            dt.bits_x
                .iter()
                .chain(&dt.bits_y)
                .zip(dr.bits_x.iter().chain(&dr.bits_y))
                .filter(|(a, b)| a != b)
                .count()
        };
        prop_assert_eq!(errors(&tx, &rx), errors(&spin(&tx), &spin(&rx)));
    }

    #[test]
    fn snr_survives_any_common_rotation(
        bits in proptest::collection::vec(0u8..2, 8 * 32),
        noise in proptest::collection::vec((-0.1f64..0.1, -0.1f64..0.1), 64),
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let c = Constellation::qam16();
        let n = bits.len() / 8;
        let x = qam16_map(&bits[..4 * n], &c).unwrap();
        let y = qam16_map(&bits[4 * n..], &c).unwrap();
        let rx_x: Vec<Complex64> = x.iter().enumerate().map(|(i, s)| s + Complex64::new(noise[i].0, noise[i].1)).collect();
        let rx_y: Vec<Complex64> = y.iter().enumerate().map(|(i, s)| s + Complex64::new(noise[n + i].0, noise[n + i].1)).collect();
        let rot = Complex64::from_polar(1.0, phi);
        let mk = |vx: &[Complex64], vy: &[Complex64], r: Complex64| {
            SymbolGrid::new(vx.iter().map(|v| v * r).collect(), vy.iter().map(|v| v * r).collect(), 32e9).unwrap()
        };
        let one = Complex64::new(1.0, 0.0);
        let base = metrics(&bits, &bits, &mk(&x, &y, one), &mk(&rx_x, &rx_y, one)).unwrap();
        let spun = metrics(&bits, &bits, &mk(&x, &y, rot), &mk(&rx_x, &rx_y, rot)).unwrap();
        prop_assert!((base.snr_db - spun.snr_db).abs() < 1e-9,
            "{} vs {}", base.snr_db, spun.snr_db);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distortions_scale_with_odd_powers_of_the_field(
        grid in grid_pair(20),
        c in 0.3f64..2.5,
    ) {
        let fo_t = toy_table(CoeffOrder::Fo, &[(0, 0, 0, 0.4, -0.7), (1, -1, 0, -0.2, 0.1)]);
        let t1_t = toy_table(CoeffOrder::SoTerm1, &[(0, 0, 0, 0.4, -0.7), (1, -1, 2, -0.2, 0.1)]);
        let t2_t = toy_table(CoeffOrder::SoTerm2, &[(0, 0, 1, 0.1, 0.2)]);
        let cfg = toy_cfg(Some(&fo_t), Some(&t1_t), Some(&t2_t));
        let scaled = SymbolGrid {
            x: grid.x.iter().map(|v| v * c).collect(),
            y: grid.y.iter().map(|v| v * c).collect(),
            symbol_rate: grid.symbol_rate,
        };
        let (d1, d1s) = (fo_distortion(&grid, &cfg).unwrap(), fo_distortion(&scaled, &cfg).unwrap());
        let (d2, d2s) = (so_distortion(&grid, &cfg).unwrap(), so_distortion(&scaled, &cfg).unwrap());
        let c3 = c * c * c;
        let c5 = c3 * c * c;
        let m1 = d1s.x.iter().chain(&d1s.y).map(|v| v.norm()).fold(1e-30, f64::max);
        let m2 = d2s.x.iter().chain(&d2s.y).map(|v| v.norm()).fold(1e-30, f64::max);
        for i in 0..grid.len() {
            prop_assert!((d1s.x[i] - d1.x[i] * c3).norm() < 1e-12 * m1);
            prop_assert!((d1s.y[i] - d1.y[i] * c3).norm() < 1e-12 * m1);
            prop_assert!((d2s.x[i] - d2.x[i] * c5).norm() < 1e-12 * m2);
            prop_assert!((d2s.y[i] - d2.y[i] * c5).norm() < 1e-12 * m2);
        }
    }

    #[test]
    fn polarization_swap_commutes_with_predistortion(grid in grid_pair(24)) {
        let fo_t = toy_table(CoeffOrder::Fo, &[(0, 0, 0, 0.4, -0.7), (-2, 1, 0, 0.05, 0.3)]);
        let t1_t = toy_table(CoeffOrder::SoTerm1, &[(1, -1, 2, -0.2, 0.1), (-1, 2, -2, 0.05, 0.3)]);
        let t2_t = toy_table(CoeffOrder::SoTerm2, &[(0, 0, 1, 0.1, 0.2), (2, -1, -1, -0.3, 0.02)]);
        let cfg = toy_cfg(Some(&fo_t), Some(&t1_t), Some(&t2_t));
        let swapped = SymbolGrid {
            x: grid.y.clone(),
            y: grid.x.clone(),
            symbol_rate: grid.symbol_rate,
        };
        let a = predistort(&grid, &cfg).unwrap();
        let b = predistort(&swapped, &cfg).unwrap();
        prop_assert_eq!(&a.x, &b.y);
        prop_assert_eq!(&a.y, &b.x);
    }

    #[test]
    fn predistortion_is_undone_by_adding_the_distortions_back(grid in grid_pair(16)) {
        let fo_t = toy_table(CoeffOrder::Fo, &[(1, -1, 0, -0.2, 0.1)]);
        let t1_t = toy_table(CoeffOrder::SoTerm1, &[(0, 1, -1, 0.3, 0.4)]);
        let cfg = toy_cfg(Some(&fo_t), Some(&t1_t), None);
        let out = predistort(&grid, &cfg).unwrap();
        let d1 = fo_distortion(&grid, &cfg).unwrap();
        let d2 = so_distortion(&grid, &cfg).unwrap();
        for i in 0..grid.len() {
            prop_assert!((out.x[i] + d1.x[i] + d2.x[i] - grid.x[i]).norm() < 1e-12);
            prop_assert!((out.y[i] + d1.y[i] + d2.y[i] - grid.y[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_epsilon_predistortion_is_the_identity(grid in grid_pair(12)) {
        let fo_t = toy_table(CoeffOrder::Fo, &[(1, -1, 0, -0.2, 0.1)]);
        let t1_t = toy_table(CoeffOrder::SoTerm1, &[(0, 1, -1, 0.3, 0.4)]);
        let mut cfg = toy_cfg(Some(&fo_t), Some(&t1_t), None);
        cfg.epsilon_fo = 0.0;
        cfg.epsilon_so = 0.0;
        let out = predistort(&grid, &cfg).unwrap();
        prop_assert_eq!(&out.x, &grid.x);
        prop_assert_eq!(&out.y, &grid.y);
    }
}

/// Raising the threshold can only shed entries: every index retained at the
/// stricter cut is retained at the looser one with the same value up to the
/// pruning tolerance.
#[test]
fn truncation_monotonicity_of_built_tables() {
    let pulse = desk_pulse();
    let link = desk_link(1);
    let quad = QuadratureSpec::default();
    for order in [CoeffOrder::Fo, CoeffOrder::SoTerm1, CoeffOrder::SoTerm2] {
        let strict = build_table(order, 4, -20.0, &pulse, &link, &quad).unwrap();
        let loose = build_table(order, 4, -35.0, &pulse, &link, &quad).unwrap();
        assert!(strict.len() <= loose.len());
        for (idx, v) in &strict.entries {
            let lv = loose.entries.get(idx).unwrap_or_else(|| {
                panic!("({},{},{}) lost at looser threshold", idx.m, idx.n, idx.k)
            });
            assert!(
                (v - lv).norm() <= 1e-9 * lv.norm(),
                "value drifted at ({},{},{})",
                idx.m,
                idx.n,
                idx.k
            );
        }
    }
}

/// More spans leave more above-threshold interactions inside a fixed window.
#[test]
fn retained_count_grows_with_span_count() {
    let pulse = desk_pulse();
    let quad = QuadratureSpec::default();
    let counts: Vec<usize> = [1usize, 2, 3]
        .iter()
        .map(|&n| {
            build_table(CoeffOrder::SoTerm1, 6, -30.0, &pulse, &desk_link(n), &quad)
                .unwrap()
                .len()
        })
        .collect();
    assert!(
        counts.windows(2).all(|w| w[0] <= w[1]),
        "counts not monotone: {counts:?}"
    );
}
