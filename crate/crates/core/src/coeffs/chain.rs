//! Gaussian quadratic-form chain: closed-form propagation of products of
//! dispersed Gaussian pulses with the pulse-index dependence factored out.
//!
//! Every factor is of the form `pref·exp(−a·t² + b·t + c)` where `b` is kept
//! as three complex coefficients of the indices (m, n, k) and `c` as the six
//! coefficients of the quadratic form over (m, n, k). Multiplying factors adds
//! (a, b, c) and multiplies prefactors; dispersing by a distance `h` maps the
//! form through the exact Gaussian convolution. The chain value at t = 0 for a
//! concrete index triple is `pref·exp(Σ c_q·u_q)` with
//! u = (m², n², k², mn, mk, nk).
//!
//! Branch safety: `Re a > 0` is preserved by every operation (Gaussian width
//! stays in the right half-plane), so each principal square root is evaluated
//! away from the cut and the product of factors is continuous in (z, s). The
//! `Re > 0` assertions below are the audit for that argument.

use crate::error::{Error, Result};
use crate::Real;
use num_complex::Complex;

pub const MM: usize = 0;
pub const NN: usize = 1;
pub const KK: usize = 2;
pub const MN: usize = 3;
pub const MK: usize = 4;
pub const NK: usize = 5;

/// Physics constants the chain needs, in SI units.
#[derive(Debug, Clone, Copy)]
pub struct ChainParams<T: Real> {
    pub t_sym: T,
    pub tau: T,
    pub beta2: T,
    pub alpha: T,
    pub span_length: T,
}

/// One Gaussian quadratic-form factor (or product of factors).
#[derive(Debug, Clone, Copy)]
pub struct Form<T: Real> {
    pub a: Complex<T>,
    pub b: [Complex<T>; 3],
    pub c: [Complex<T>; 6],
    pub pref: Complex<T>,
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> Form<T> {
    /// Dispersed Gaussian ĝ(z, t − pT) with p = wm·m + wn·n + wk·k:
    /// τ/√(τ²−jβ₂z) · exp(−(t−pT)²/(2(τ²−jβ₂z))).
    pub fn ghat(weights: [i32; 3], z: T, p: &ChainParams<T>) -> Self {
        let w = Complex::new(p.tau * p.tau, -p.beta2 * z);
        let two = T::of(2.0);
        let a = Complex::new(T::of(0.5), T::zero()) / w;
        let pref = Complex::new(p.tau, T::zero()) / w.sqrt();
        let mut b = [czero(); 3];
        for (slot, &wt) in weights.iter().enumerate() {
            if wt != 0 {
                b[slot] = Complex::new(T::of(wt as f64) * p.t_sym, T::zero()) / w;
            }
        }
        // −p²T²/(2w) expanded over the six index slots
        let t2_2w = Complex::new(p.t_sym * p.t_sym, T::zero()) / (w * two);
        let mut c = [czero(); 6];
        let pairs = [
            (MM, 0, 0),
            (NN, 1, 1),
            (KK, 2, 2),
            (MN, 0, 1),
            (MK, 0, 2),
            (NK, 1, 2),
        ];
        for (slot, i, j) in pairs {
            let f = if i == j {
                (weights[i] * weights[i]) as f64
            } else {
                (2 * weights[i] * weights[j]) as f64
            };
            if f != 0.0 {
                c[slot] = -t2_2w * T::of(f);
            }
        }
        Form { a, b, c, pref }
    }

    pub fn mul(mut self, o: &Form<T>) -> Self {
        self.a += o.a;
        for i in 0..3 {
            self.b[i] += o.b[i];
        }
        for i in 0..6 {
            self.c[i] += o.c[i];
        }
        self.pref = self.pref * o.pref;
        self
    }

    pub fn conj(mut self) -> Self {
        self.a = self.a.conj();
        for i in 0..3 {
            self.b[i] = self.b[i].conj();
        }
        for i in 0..6 {
            self.c[i] = self.c[i].conj();
        }
        self.pref = self.pref.conj();
        self
    }

    /// Exact dispersion of the whole form by distance `h` (either sign):
    /// convolution with the kernel of exp(+j(β₂/2)ω²h).
    pub fn disperse(mut self, h: T, p: &ChainParams<T>, at: (T, T)) -> Result<Self> {
        let four = T::of(4.0);
        let quarter_a = (self.a * four).inv();
        let aa = quarter_a - Complex::new(T::zero(), T::of(0.5) * p.beta2 * h);
        if !(self.a.re > T::zero() && aa.re > T::zero()) {
            return Err(Error::NumericDomain {
                what: "Gaussian width left the right half-plane",
                z: at.0.to64(),
                s: at.1.to64(),
                m: 0,
                n: 0,
                k: 0,
            });
        }
        let two = T::of(2.0);
        self.pref = self.pref / (self.a.sqrt() * aa.sqrt() * two);
        // c += b²·s2, b *= s1, expanded over slots
        let s2 = quarter_a - (self.a * self.a * aa * T::of(16.0)).inv();
        let s1 = (self.a * aa * four).inv();
        let [bm, bn, bk] = self.b;
        self.c[MM] += bm * bm * s2;
        self.c[NN] += bn * bn * s2;
        self.c[KK] += bk * bk * s2;
        self.c[MN] += bm * bn * s2 * two;
        self.c[MK] += bm * bk * s2 * two;
        self.c[NK] += bn * bk * s2 * two;
        for i in 0..3 {
            self.b[i] = self.b[i] * s1;
        }
        self.a = (aa * four).inv();
        Ok(self)
    }
}

/// Index-free chain state of one (z, s) quadrature node: the full integrand
/// for indices (m,n,k) is `pref·exp(c·u)`, u = (m², n², k², mn, mk, nk).
#[derive(Debug, Clone, Copy)]
pub struct Node<T: Real> {
    pub pref: Complex<T>,
    pub c: [Complex<T>; 6],
}

impl<T: Real> Node<T> {
    pub fn value(&self, m: i32, n: i32, k: i32) -> Complex<T> {
        let u = [
            (m * m) as f64,
            (n * n) as f64,
            (k * k) as f64,
            (m * n) as f64,
            (m * k) as f64,
            (n * k) as f64,
        ];
        let mut e = czero::<T>();
        for (q, &uq) in u.iter().enumerate() {
            if uq != 0.0 {
                e += self.c[q] * T::of(uq);
            }
        }
        self.pref * e.exp()
    }
}

/// Which coefficient family a chain node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// Second-order mixing, |a_k|²-paired bracket.
    SoTerm1,
    /// Second-order mixing, a_k·a_{−k}-paired bracket.
    SoTerm2,
    /// First-order triplet in the dispersion-compensated frame.
    Fo,
}

/// Lumped-amplification power profile: attenuation restarts at each span.
pub fn sawtooth_att<T: Real>(x: T, p: &ChainParams<T>) -> T {
    let r = x % p.span_length;
    (-p.alpha * r).exp()
}

/// Evaluate the index-free chain at one (z, s) node.
///
/// The inner triplet ĝ_m·ĝ_n·ĝ*_{m+n} is formed at distance s, dispersed
/// forward to z (or back to 0 for the FO kind), combined with the outer pulse
/// pair at z, and dispersion-compensated back to z = 0; the two j factors of
/// the nonlinear source and the sawtooth attenuation ride on the prefactor.
pub fn node_eval<T: Real>(kind: ChainKind, z: T, s: T, p: &ChainParams<T>) -> Result<Node<T>> {
    let at = (z, s);
    let j = Complex::new(T::zero(), T::one());
    let triplet = Form::ghat([1, 0, 0], s, p)
        .mul(&Form::ghat([0, 1, 0], s, p))
        .mul(&Form::ghat([1, 1, 0], s, p).conj());
    if kind == ChainKind::Fo {
        let mut g = triplet.disperse(-s, p, at)?;
        g.pref = g.pref * j * sawtooth_att(s, p);
        return Ok(Node { pref: g.pref, c: g.c });
    }
    let mut inner = triplet.disperse(z - s, p, at)?;
    inner.pref = inner.pref * j * sawtooth_att(s, p);
    let paired = match kind {
        ChainKind::SoTerm1 => inner
            .mul(&Form::ghat([0, 0, 1], z, p))
            .mul(&Form::ghat([0, 0, 1], z, p).conj()),
        ChainKind::SoTerm2 => inner
            .conj()
            .mul(&Form::ghat([0, 0, 1], z, p))
            .mul(&Form::ghat([0, 0, -1], z, p)),
        ChainKind::Fo => unreachable!(),
    };
    let mut out = paired.disperse(-z, p, at)?;
    out.pref = out.pref * j * sawtooth_att(z, p);
    Ok(Node {
        pref: out.pref,
        c: out.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn params() -> ChainParams<f64> {
        let t = 31.25e-12;
        ChainParams {
            t_sym: t,
            tau: 0.5 * t,
            beta2: -20.47e-27,
            alpha: 0.2 / (10.0 / 10f64.ln()) / 1e3,
            span_length: 80e3,
        }
    }

    #[test]
    fn ghat_matches_direct_gaussian() {
        // compare pref·exp(c) at m=n=k=... against the closed form at t=0
        let p = params();
        let z = 37.3e3;
        let g = Form::ghat([1, 0, 0], z, &p);
        let m = 3;
        let w = Complex64::new(p.tau * p.tau, -p.beta2 * z);
        let want = p.tau / w.sqrt()
            * (-(m as f64 * p.t_sym).powi(2) / (2.0 * w)).exp();
        let node = Node { pref: g.pref, c: g.c };
        let got = node.value(m, 0, 0);
        assert!((got - want).norm() / want.norm() < 1e-14);
    }

    #[test]
    fn disperse_round_trip_is_identity() {
        let p = params();
        let g = Form::ghat([1, 2, -1], 11e3, &p);
        let h = 53.7e3;
        let back = g
            .disperse(h, &p, (0.0, 0.0))
            .unwrap()
            .disperse(-h, &p, (0.0, 0.0))
            .unwrap();
        assert!((back.a - g.a).norm() < 1e-14 * g.a.norm());
        assert!((back.pref - g.pref).norm() < 1e-13 * g.pref.norm());
        for i in 0..6 {
            assert!((back.c[i] - g.c[i]).norm() <= 1e-13 * (g.c[i].norm() + 1e-30));
        }
    }

    #[test]
    fn disperse_matches_spectral_gaussian_law() {
        // dispersing ĝ(0) by z must equal ĝ(z) for a single pulse
        let p = params();
        let g0 = Form::ghat([0, 0, 1], 0.0, &p);
        let z = 29.1e3;
        let gz = Form::ghat([0, 0, 1], z, &p);
        let gd = g0.disperse(z, &p, (0.0, 0.0)).unwrap();
        for k in [-4, 1, 7] {
            let a = Node { pref: gd.pref, c: gd.c }.value(0, 0, k);
            let b = Node { pref: gz.pref, c: gz.c }.value(0, 0, k);
            assert!((a - b).norm() < 1e-13 * b.norm());
        }
    }

    #[test]
    fn node_m_n_exchange_is_bitwise() {
        let p = params();
        for kind in [ChainKind::SoTerm1, ChainKind::SoTerm2, ChainKind::Fo] {
            let n = node_eval(kind, 113.7e3, 41.9e3, &p).unwrap();
            let (m, nn, k) = (7, -3, 4);
            let a = n.value(m, nn, k);
            let b = n.value(nn, m, k);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn term2_is_even_in_k() {
        let p = params();
        let n = node_eval(ChainKind::SoTerm2, 90e3, 10e3, &p).unwrap();
        assert_eq!(n.value(2, 5, 9), n.value(2, 5, -9));
        assert_eq!(n.c[MK].norm(), 0.0);
        assert_eq!(n.c[NK].norm(), 0.0);
    }
}
