#![allow(dead_code)]

use qgs::coupling::GpiCouplingA;
use qgs::linalg::{c, CMatrix, C64};
use qgs::tree::{canonical_v, RadialCondition, TreeVertexCoupling};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn complex(rng: &mut impl Rng, r: f64) -> C64 {
    c(uniform(rng, -r, r), uniform(rng, -r, r))
}

/// Coupling with `|β| ≥ 0.1`.
pub fn coupling_beta_nonzero(rng: &mut impl Rng) -> GpiCouplingA {
    let mut beta = uniform(rng, 0.1, 3.0);
    if rng.gen_bool(0.5) {
        beta = -beta;
    }
    GpiCouplingA::new(uniform(rng, -3.0, 3.0), beta, complex(rng, 2.0))
}

/// Coupling with `|det 𝒜| ≥ 0.5`.
pub fn coupling_det_nonzero(rng: &mut impl Rng) -> GpiCouplingA {
    loop {
        let g = GpiCouplingA::new(
            uniform(rng, -3.0, 3.0),
            uniform(rng, -3.0, 3.0),
            complex(rng, 2.0),
        );
        if g.det_a().abs() >= 0.5 {
            return g;
        }
    }
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = CMatrix::from_fn(n, n, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn vertex_coupling(rng: &mut impl Rng, b: usize) -> TreeVertexCoupling {
    let radial = RadialCondition::Gpi(GpiCouplingA::new(
        uniform(rng, -3.0, 3.0),
        uniform(rng, -3.0, 3.0),
        complex(rng, 2.0),
    ));
    let u = unitary(rng, b - 1);
    let v = unitary(rng, b - 1) * canonical_v(b);
    TreeVertexCoupling::new(radial, u, v)
}

/// Increasing positions with gaps in `[0.3, 1.5)`.
pub fn positions(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += uniform(rng, 0.3, 1.5);
            t
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}
