//! Block-adaptive composite Gauss–Legendre quadrature for the coefficient
//! integrals over the triangle 0 ≤ s ≤ z ≤ L.
//!
//! The domain is tiled into span-pair blocks (span 0 split geometrically,
//! since the back-compensated phase varies fastest within the first few km).
//! Each block stores an 8×8 grid of raw index-free chain samples. For a pulse
//!-index row (m, n) and a band of |k|, the exponent E(z,s,k) is a quadratic
//! in k with sampled complex coefficients, so per block we can bound
//! max Re E exactly over the band (endpoints + vertex candidates) — blocks
//! whose bound falls below the retention floor are skipped — and budget the
//! number of Gauss–Legendre panels per axis from the total variation of Im E
//! (the oscillation a fixed-order panel must resolve).
//!
//! Inside a live block the integrand is summed over k by a two-multiply
//! recurrence per node: E(k+1) − E(k) = A + (2k+1)B, so consecutive k share
//! one running complex factor, restarted whenever Re E falls below the
//! underflow floor.

use super::chain::{self, ChainKind, ChainParams, KK, MK, MM, MN, NK, NN};
use crate::error::Result;
use crate::model::{LinkConfig, PulseParams};
use crate::Real;
use num_complex::Complex;
use std::collections::HashMap;

const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Geometric split of the first span (fractions of span length).
const V0_FRACS: [f64; 5] = [0.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0];
const NSAMP: usize = 8;
/// Phase (rad) one 8-point panel is trusted to resolve: the GL8 error on
/// e^{iΦx/2} over [−1,1] is ≈ (Φ/2)^16/16! ≈ 2e-8 at Φ = 4.5.
const PHASE_BUDGET: f64 = 4.5;
/// Envelope-sampling safety factor on the panel count.
const TV_GROW: f64 = 1.5;
const PANEL_CAP: u32 = 1024;
/// Retention-floor slack (ln scale) below the requested threshold.
const FLOOR_MARGIN: f64 = 14.0;
/// Blocks bounded this far (ln) below the row's best block are dropped even
/// when no explicit retention floor is given.
const REL_FLOOR: f64 = 46.0;
const MAX_CHUNK_NODES: usize = 640_000;
const CACHE_BYTES_CAP: usize = 3_200_000_000;

struct BlockSamples<T> {
    cre: [[[T; 6]; NSAMP]; NSAMP],
    cim: [[[T; 6]; NSAMP]; NSAMP],
    lnpref: T,
    lnarea: T,
}

struct Block<T> {
    z0: T,
    z1: T,
    s0: T,
    s1: T,
    diagonal: bool,
}

struct NodeArrays<T> {
    wpref: Vec<Complex<T>>,
    c: [Vec<Complex<T>>; 6],
}

impl<T: Real> NodeArrays<T> {
    fn bytes(&self) -> usize {
        self.wpref.len() * 7 * std::mem::size_of::<Complex<T>>()
    }
}

struct BlockPlan {
    idx: usize,
    nz: u32,
    ns: u32,
}

pub struct Engine<T: Real> {
    kind: ChainKind,
    cp: ChainParams<T>,
    blocks: Vec<Block<T>>,
    samples: Vec<BlockSamples<T>>,
    kmax: i32,
    mult_z: u32,
    mult_s: u32,
    cache: HashMap<(u32, u32, u32), NodeArrays<T>>,
    cache_bytes: usize,
    pub node_evals: u64,
}

/// Round up to the 3-smooth grid {1, 2, 3, 4, 6, 8, 12, …}: panel counts
/// quantized coarsely enough that nearby rows share cached node arrays, with
/// at most 4/3 overshoot (a plain power-of-two grid wastes up to 2×).
fn smooth_at_least(x: u32) -> u32 {
    let x = x.max(1);
    let p = x.next_power_of_two();
    let c = p / 4 * 3;
    if c >= x && c > 0 {
        c
    } else {
        p
    }
}

/// Virtual span edges: the geometric split of span 0 followed by whole spans.
fn virtual_spans<T: Real>(link: &LinkConfig<T>) -> Vec<(T, T)> {
    let sp = link.span_length;
    let mut vs: Vec<(T, T)> = V0_FRACS
        .windows(2)
        .map(|w| (sp * T::of(w[0]), sp * T::of(w[1])))
        .collect();
    for i in 1..link.n_spans {
        vs.push((sp * T::of(i as f64), sp * T::of(i as f64 + 1.0)));
    }
    vs
}

impl<T: Real> Engine<T> {
    pub fn new(
        order: super::CoeffOrder,
        pulse: &PulseParams<T>,
        link: &LinkConfig<T>,
        kmax: i32,
        mult_z: u32,
        mult_s: u32,
    ) -> Result<Self> {
        let kind = order.chain_kind();
        assert!(kind != ChainKind::Fo, "use FoEngine for the first-order integral");
        let cp = ChainParams {
            t_sym: pulse.t_sym,
            tau: pulse.tau,
            beta2: link.beta2,
            alpha: link.alpha,
            span_length: link.span_length,
        };
        let vs = virtual_spans(link);
        let mut blocks = Vec::new();
        for i in 0..vs.len() {
            for j in 0..=i {
                blocks.push(Block {
                    z0: vs[i].0,
                    z1: vs[i].1,
                    s0: vs[j].0,
                    s1: vs[j].1,
                    diagonal: i == j,
                });
            }
        }
        let mut samples = Vec::with_capacity(blocks.len());
        let mut node_evals = 0;
        for b in &blocks {
            let mut cre = [[[T::zero(); 6]; NSAMP]; NSAMP];
            let mut cim = cre;
            let mut lnpref = T::neg_infinity();
            for iz in 0..NSAMP {
                let fz = (iz as f64 + 0.5) / NSAMP as f64;
                let z = b.z0 + (b.z1 - b.z0) * T::of(fz);
                for is in 0..NSAMP {
                    let fs = (is as f64 + 0.5) / NSAMP as f64;
                    let s = (b.s0 + (b.s1 - b.s0) * T::of(fs)).min(z);
                    let node = chain::node_eval(kind, z, s, &cp)?;
                    node_evals += 1;
                    for q in 0..6 {
                        cre[iz][is][q] = node.c[q].re;
                        cim[iz][is][q] = node.c[q].im;
                    }
                    lnpref = lnpref.max(node.pref.norm().ln());
                }
            }
            let area = (b.z1 - b.z0) * (b.s1 - b.s0)
                * if b.diagonal { T::of(0.5) } else { T::one() };
            samples.push(BlockSamples {
                cre,
                cim,
                lnpref,
                lnarea: area.ln(),
            });
        }
        Ok(Engine {
            kind,
            cp,
            blocks,
            samples,
            kmax,
            mult_z,
            mult_s,
            cache: HashMap::new(),
            cache_bytes: 0,
            node_evals,
        })
    }

    /// |k| bands planned independently: inner k needs the most panels, outer k
    /// decays into fewer live blocks.
    fn bands(&self) -> Vec<(i32, i32)> {
        if self.kmax == 50 {
            vec![(0, 10), (11, 24), (25, 50)]
        } else {
            vec![(0, self.kmax)]
        }
    }

    /// Bound max Re E and the Im-E total variation per block for the k band,
    /// then convert oscillation into panel counts. Returns live-block plans.
    fn plan_band(&self, m: i32, n: i32, k_lo: i32, k_hi: i32, ln_eps: T) -> Vec<BlockPlan> {
        let (mf, nf) = (T::of(m as f64), T::of(n as f64));
        let m2 = mf * mf;
        let n2 = nf * nf;
        let mn = mf * nf;
        let cands = [
            T::of(k_lo as f64),
            T::of(k_hi as f64),
            T::of(-k_lo as f64),
            T::of(-k_hi as f64),
        ];
        let quad_max = |e0: T, a1: T, b1: T| -> T {
            let mut best = T::neg_infinity();
            for &kc in &cands {
                best = best.max(e0 + a1 * kc + b1 * kc * kc);
            }
            if b1 != T::zero() {
                let kv = -(T::of(0.5)) * a1 / b1;
                let kv = kv
                    .abs()
                    .max(T::of(k_lo as f64))
                    .min(T::of(k_hi as f64))
                    .copysign(if kv >= T::zero() { T::one() } else { -T::one() });
                best = best.max(e0 + a1 * kv + b1 * kv * kv);
            }
            best
        };
        // pass 1: Re bounds
        let mut ln_bound = vec![T::neg_infinity(); self.blocks.len()];
        let mut best_bound = T::neg_infinity();
        for (bi, sm) in self.samples.iter().enumerate() {
            let mut remax = T::neg_infinity();
            for iz in 0..NSAMP {
                for is in 0..NSAMP {
                    let c = &sm.cre[iz][is];
                    let e0 = c[MM] * m2 + c[NN] * n2 + c[MN] * mn;
                    let a1 = c[MK] * mf + c[NK] * nf;
                    remax = remax.max(quad_max(e0, a1, c[KK]));
                }
            }
            ln_bound[bi] = remax + sm.lnpref + sm.lnarea;
            best_bound = best_bound.max(ln_bound[bi]);
        }
        let floor = ln_eps.max(best_bound - T::of(REL_FLOOR));
        // pass 2: phase budgets for live blocks
        let mut plans = Vec::new();
        for (bi, sm) in self.samples.iter().enumerate() {
            if ln_bound[bi] < floor {
                continue;
            }
            let im = |iz: usize, is: usize| -> (T, T, T) {
                let c = &sm.cim[iz][is];
                (
                    c[MM] * m2 + c[NN] * n2 + c[MN] * mn,
                    c[MK] * mf + c[NK] * nf,
                    c[KK],
                )
            };
            let dmax = |p: (T, T, T), q: (T, T, T)| -> T {
                let (d0, d1, d2) = (q.0 - p.0, q.1 - p.1, q.2 - p.2);
                let mut best = T::zero();
                for &kc in &cands {
                    best = best.max((d0 + d1 * kc + d2 * kc * kc).abs());
                }
                if d2 != T::zero() {
                    let kv = -(T::of(0.5)) * d1 / d2;
                    let kv = kv
                        .abs()
                        .max(T::of(k_lo as f64))
                        .min(T::of(k_hi as f64))
                        .copysign(if kv >= T::zero() { T::one() } else { -T::one() });
                    best = best.max((d0 + d1 * kv + d2 * kv * kv).abs());
                }
                best
            };
            let mut tvz = T::zero();
            for is in 0..NSAMP {
                let mut acc = T::zero();
                for iz in 0..NSAMP - 1 {
                    acc += dmax(im(iz, is), im(iz + 1, is));
                }
                tvz = tvz.max(acc);
            }
            let mut tvs = T::zero();
            for iz in 0..NSAMP {
                let mut acc = T::zero();
                for is in 0..NSAMP - 1 {
                    acc += dmax(im(iz, is), im(iz, is + 1));
                }
                tvs = tvs.max(acc);
            }
            let panels = |tv: T| -> u32 {
                let raw = (T::of(TV_GROW) * tv / T::of(PHASE_BUDGET))
                    .ceil()
                    .to64()
                    .max(1.0) as u32;
                smooth_at_least(raw.min(PANEL_CAP))
            };
            plans.push(BlockPlan {
                idx: bi,
                nz: panels(tvz) * self.mult_z,
                ns: panels(tvs) * self.mult_s,
            });
        }
        plans
    }

    /// Gauss–Legendre tensor nodes of one z-panel range of a block.
    fn eval_nodes(&mut self, b: usize, za: T, zb: T, nz: u32, ns: u32) -> Result<NodeArrays<T>> {
        let blk = &self.blocks[b];
        let (s0, s1) = (blk.s0, blk.s1);
        let diagonal = blk.diagonal;
        let mut out = NodeArrays {
            wpref: Vec::new(),
            c: Default::default(),
        };
        let zw = (zb - za) / T::of(nz as f64);
        for pz in 0..nz {
            let zc = za + zw * T::of(pz as f64 + 0.5);
            let zh = zw * T::of(0.5);
            for g in 0..8 {
                let z = zc + zh * T::of(GL_X[g]);
                let wz = zh * T::of(GL_W[g]);
                let s_hi_all = if diagonal { z } else { s1 };
                let sw = (s1 - s0) / T::of(ns as f64);
                for ps in 0..ns {
                    let sa = s0 + sw * T::of(ps as f64);
                    let sb = (sa + sw).min(s_hi_all);
                    if sb <= sa {
                        break;
                    }
                    let sc = (sa + sb) * T::of(0.5);
                    let sh = (sb - sa) * T::of(0.5);
                    for gs in 0..8 {
                        let s = sc + sh * T::of(GL_X[gs]);
                        let ws = sh * T::of(GL_W[gs]);
                        let node = chain::node_eval(self.kind, z, s, &self.cp)?;
                        self.node_evals += 1;
                        out.wpref.push(node.pref * (wz * ws));
                        for q in 0..6 {
                            out.c[q].push(node.c[q]);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Run `f` over the node arrays of a block at the given resolution,
    /// streaming oversized blocks in z-panel chunks and caching the rest.
    fn with_block_nodes(
        &mut self,
        b: usize,
        nz: u32,
        ns: u32,
        f: &mut impl FnMut(&NodeArrays<T>),
    ) -> Result<()> {
        let key = (b as u32, nz, ns);
        if let Some(nodes) = self.cache.get(&key) {
            f(nodes);
            return Ok(());
        }
        let approx = nz as usize * ns as usize * 64;
        let (za, zb) = (self.blocks[b].z0, self.blocks[b].z1);
        if approx <= MAX_CHUNK_NODES {
            let nodes = self.eval_nodes(b, za, zb, nz, ns)?;
            f(&nodes);
            let bytes = nodes.bytes();
            if self.cache_bytes + bytes > CACHE_BYTES_CAP {
                self.cache.clear();
                self.cache_bytes = 0;
            }
            self.cache_bytes += bytes;
            self.cache.insert(key, nodes);
            return Ok(());
        }
        let chunk = ((MAX_CHUNK_NODES / (ns as usize * 64)).max(1) as u32).min(nz);
        let zw = (zb - za) / T::of(nz as f64);
        let mut p0 = 0;
        while p0 < nz {
            let p1 = (p0 + chunk).min(nz);
            let nodes = self.eval_nodes(
                b,
                za + zw * T::of(p0 as f64),
                za + zw * T::of(p1 as f64),
                p1 - p0,
                ns,
            )?;
            f(&nodes);
            p0 = p1;
        }
        Ok(())
    }

    /// One coefficient row: C(m, n, k) for every k in [−kmax, kmax].
    /// `ln_eps` is the retention floor (ln of the absolute magnitude below
    /// which contributions may be dropped); pass −∞ for full evaluation.
    pub fn row(&mut self, m: i32, n: i32, ln_eps: T) -> Result<Vec<Complex<T>>> {
        let kmax = self.kmax;
        let mut out = vec![Complex::new(T::zero(), T::zero()); (2 * kmax + 1) as usize];
        let floor_re = T::min_positive_value().ln() + T::of(8.0);
        let even_in_k = self.kind == ChainKind::SoTerm2;
        for (k_lo, k_hi) in self.bands() {
            let plans = self.plan_band(m, n, k_lo, k_hi, ln_eps - T::of(FLOOR_MARGIN));
            // segments of consecutive k handled by the exp recurrence
            let mut segs: Vec<(i32, i32)> = Vec::new();
            if even_in_k {
                segs.push((k_lo, k_hi));
            } else if k_lo == 0 {
                segs.push((-k_hi, k_hi));
            } else {
                segs.push((-k_hi, -k_lo));
                segs.push((k_lo, k_hi));
            }
            for plan in plans {
                let (mf, nf) = (T::of(m as f64), T::of(n as f64));
                let m2 = mf * mf;
                let n2 = nf * nf;
                let mn = mf * nf;
                let segs = segs.clone();
                self.with_block_nodes(plan.idx, plan.nz, plan.ns, &mut |nodes| {
                    for i in 0..nodes.wpref.len() {
                        let e0 = nodes.c[MM][i] * m2 + nodes.c[NN][i] * n2 + nodes.c[MN][i] * mn;
                        let a = nodes.c[MK][i] * mf + nodes.c[NK][i] * nf;
                        let b = nodes.c[KK][i];
                        let wp = nodes.wpref[i];
                        let two_b = b + b;
                        let mut q = Complex::new(T::zero(), T::zero());
                        let mut have_q = false;
                        for &(ka, kb) in &segs {
                            // scan Re E incrementally, chain exp within live runs
                            let kaf = T::of(ka as f64);
                            let mut re = e0.re + a.re * kaf + b.re * kaf * kaf;
                            let mut dre = a.re + b.re * (T::of((2 * ka + 1) as f64));
                            let ddre = b.re + b.re;
                            let mut e = Complex::new(T::zero(), T::zero());
                            let mut r = Complex::new(T::zero(), T::zero());
                            let mut in_run = false;
                            for k in ka..=kb {
                                if re >= floor_re {
                                    if !in_run {
                                        let kf = T::of(k as f64);
                                        e = (e0 + a * kf + b * (kf * kf)).exp();
                                        r = (a + b * T::of((2 * k + 1) as f64)).exp();
                                        if !have_q {
                                            q = two_b.exp();
                                            have_q = true;
                                        }
                                        in_run = true;
                                    }
                                    let v = wp * e;
                                    if even_in_k && k != 0 {
                                        out[(kmax - k) as usize] += v;
                                    }
                                    out[(kmax + k) as usize] += v;
                                    e = e * r;
                                    r = r * q;
                                } else {
                                    in_run = false;
                                }
                                re += dre;
                                dre += ddre;
                            }
                        }
                    }
                })?;
            }
        }
        Ok(out)
    }
}

/// Single-integral engine for the first-order triplet coefficients (the
/// integrand is z-free in the dispersion-compensated frame, so only the
/// s axis needs panels).
pub struct FoEngine<T: Real> {
    cp: ChainParams<T>,
    /// (s0, s1, ln max |pref| + ln width, im-exponent samples) per block
    blocks: Vec<FoBlock<T>>,
    mult: u32,
    pub node_evals: u64,
}

struct FoBlock<T> {
    s0: T,
    s1: T,
    lnscale: T,
    cre: [[T; 3]; NSAMP],
    cim: [[T; 3]; NSAMP],
}

impl<T: Real> FoEngine<T> {
    pub fn new(pulse: &PulseParams<T>, link: &LinkConfig<T>, mult: u32) -> Result<Self> {
        let cp = ChainParams {
            t_sym: pulse.t_sym,
            tau: pulse.tau,
            beta2: link.beta2,
            alpha: link.alpha,
            span_length: link.span_length,
        };
        let mut blocks = Vec::new();
        let mut node_evals = 0;
        for (s0, s1) in virtual_spans(link) {
            let mut cre = [[T::zero(); 3]; NSAMP];
            let mut cim = cre;
            let mut lnpref = T::neg_infinity();
            for i in 0..NSAMP {
                let s = s0 + (s1 - s0) * T::of((i as f64 + 0.5) / NSAMP as f64);
                let node = chain::node_eval(ChainKind::Fo, s, s, &cp)?;
                node_evals += 1;
                cre[i] = [node.c[MM].re, node.c[NN].re, node.c[MN].re];
                cim[i] = [node.c[MM].im, node.c[NN].im, node.c[MN].im];
                lnpref = lnpref.max(node.pref.norm().ln());
            }
            blocks.push(FoBlock {
                s0,
                s1,
                lnscale: lnpref + (s1 - s0).ln(),
                cre,
                cim,
            });
        }
        Ok(FoEngine {
            cp,
            blocks,
            mult,
            node_evals,
        })
    }

    /// C_FO(m, n); `ln_eps` is the retention floor as in `Engine::row`.
    pub fn value(&mut self, m: i32, n: i32, ln_eps: T) -> Result<Complex<T>> {
        let (mf, nf) = (T::of(m as f64), T::of(n as f64));
        let (m2, n2, mn) = (mf * mf, nf * nf, mf * nf);
        let reduce = |c: &[T; 3]| c[0] * m2 + c[1] * n2 + c[2] * mn;
        let mut bound = vec![T::neg_infinity(); self.blocks.len()];
        let mut best = T::neg_infinity();
        for (bi, blk) in self.blocks.iter().enumerate() {
            let mut remax = T::neg_infinity();
            for i in 0..NSAMP {
                remax = remax.max(reduce(&blk.cre[i]));
            }
            bound[bi] = remax + blk.lnscale;
            best = best.max(bound[bi]);
        }
        let floor = (ln_eps - T::of(FLOOR_MARGIN)).max(best - T::of(REL_FLOOR));
        let mut out = Complex::new(T::zero(), T::zero());
        for (bi, blk) in self.blocks.iter().enumerate() {
            if bound[bi] < floor {
                continue;
            }
            let mut tv = T::zero();
            for i in 0..NSAMP - 1 {
                tv += (reduce(&blk.cim[i + 1]) - reduce(&blk.cim[i])).abs();
            }
            let raw = (T::of(TV_GROW) * tv / T::of(PHASE_BUDGET))
                .ceil()
                .to64()
                .max(1.0) as u32;
            let ns = smooth_at_least(raw.min(PANEL_CAP)) * self.mult;
            let sw = (blk.s1 - blk.s0) / T::of(ns as f64);
            for p in 0..ns {
                let sc = blk.s0 + sw * T::of(p as f64 + 0.5);
                let sh = sw * T::of(0.5);
                for g in 0..8 {
                    let s = sc + sh * T::of(GL_X[g]);
                    let node = chain::node_eval(ChainKind::Fo, s, s, &self.cp)?;
                    self.node_evals += 1;
                    out += node.value(m, n, 0) * (sh * T::of(GL_W[g]));
                }
            }
        }
        Ok(out)
    }
}
