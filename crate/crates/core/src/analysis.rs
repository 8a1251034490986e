//! Numerical indicators for absolutely continuous spectrum: growth of
//! transfer-matrix products across sparse point interactions, the
//! reflectionless defect `|m_+ + conj(m_-)|`, a distance between GPI
//! Hamiltonians built from their coupling measures, and a checker for the
//! hypotheses of the empty-ac-spectrum theorem for radial trees.
//!
//! None of these decide spectral type; they are finite-data diagnostics and
//! the reports carry the raw numbers next to every flag.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{a_to_b, GpiCouplingA};
use crate::error::{Error, Result};
use crate::linalg::{real, spectral_norm, Mat2, Num, C64};
use crate::reduction::{
    reduction_denominator, HalflineCoupling, HalflinePoint, HalflineProblem, RootCondition,
};
use crate::spectral::{mfunction_minus, mfunction_plus, MValue, SpectralParameter, DEFAULT_ETA};
use crate::tree::{RadialCondition, RadialTreeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Imaginary offset for boundary values.
    pub eta: f64,
    /// `ac_candidate` holds when every partial-product norm stays below this.
    pub growth_bound: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            growth_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub e: f64,
    pub defect: f64,
    /// Defect at `eta` not larger than at `10 eta`.
    pub defect_decreasing: bool,
    /// `‖M_n ⋯ M_1‖` after each point, in `(y, y'/k)` coordinates.
    pub growth: Vec<f64>,
    pub max_growth: f64,
    pub lyapunov_slope: f64,
    pub ac_candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
}

impl SpectralReport {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("E,defect,max_growth,lyapunov_slope,ac_candidate\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                Num(r.e),
                Num(r.defect),
                Num(r.max_growth),
                Num(r.lyapunov_slope),
                r.ac_candidate
            );
        }
        s
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn real_spectral_norm(m: &[[f64; 2]; 2]) -> f64 {
    spectral_norm(&Mat2::new(
        real(m[0][0]),
        real(m[0][1]),
        real(m[1][0]),
        real(m[1][1]),
    ))
}

/// Norms of the partial transfer products after each point at energy
/// `e > 0`. In `(y, y'/k)` coordinates the free propagator is a rotation, so
/// identity jumps give norms exactly 1.
pub fn partial_product_norms(p: &HalflineProblem, e: f64) -> Result<Vec<f64>> {
    if !(e > 0.0) {
        return Err(Error::InvalidInput("growth scans need E > 0".into()));
    }
    let k = e.sqrt();
    let mut prod = [[1.0, 0.0], [0.0, 1.0]];
    let mut pos = p.start;
    let mut out = Vec::with_capacity(p.points.len());
    for pt in &p.points {
        let w = k * (pt.t - pos);
        let rot = [[w.cos(), w.sin()], [-w.sin(), w.cos()]];
        let j = pt.coupling.jump()?.ok_or(Error::SeparatingCoupling)?.real;
        let js = [[j[0][0], j[0][1] * k], [j[1][0] / k, j[1][1]]];
        prod = mat_mul(&js, &mat_mul(&rot, &prod));
        out.push(real_spectral_norm(&prod));
        pos = pt.t;
    }
    Ok(out)
}

/// Least-squares slope of `ln ‖P_n‖` against `ln t_n`; 0 with fewer than two
/// points.
pub fn lyapunov_slope(ts: &[f64], norms: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(norms)
        .filter(|(t, n)| **t > 0.0 && **n > 0.0)
        .map(|(t, n)| (t.ln(), n.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn defect_at(points: &[HalflinePoint], left_free: bool, t: f64, e: f64, eta: f64) -> Result<f64> {
    let sp = SpectralParameter::from_energy(e, eta);
    let right: Vec<HalflinePoint> = points.iter().copied().filter(|p| p.t > t).collect();
    let probe = HalflineProblem {
        start: t,
        points: right,
        ..HalflineProblem::new(RootCondition::dirichlet(), vec![])
    };
    let mp = match mfunction_plus(&probe, &sp, t)? {
        MValue::Finite(m) => m,
        MValue::PointAtInfinity => return Ok(f64::INFINITY),
    };
    let mm = if left_free {
        C64::new(0.0, 1.0) * sp.k
    } else {
        match mfunction_minus(points, &sp, t)? {
            MValue::Finite(m) => m,
            MValue::PointAtInfinity => return Ok(f64::INFINITY),
        }
    };
    Ok((mp + mm.conj()).norm())
}

/// `|m_+(E + iη, 0) + conj(m_-(E + iη, 0))|`. With `left_free` the left half
/// is free and `m_- = ik`; otherwise points at `t < 0` form the left half.
pub fn reflectionless_defect(
    left_free: bool,
    points: &[(f64, GpiCouplingA)],
    e: f64,
    eta: f64,
) -> Result<f64> {
    if !(e > 0.0 && eta > 0.0) {
        return Err(Error::InvalidInput("need E > 0 and eta > 0".into()));
    }
    let pts: Vec<HalflinePoint> = points
        .iter()
        .map(|&(t, g)| HalflinePoint {
            t,
            coupling: HalflineCoupling::Gpi(g),
        })
        .collect();
    if left_free && pts.iter().any(|p| p.t < 0.0) {
        return Err(Error::InvalidInput(
            "left_free excludes points at t < 0".into(),
        ));
    }
    defect_at(&pts, left_free, 0.0, e, eta)
}

/// Growth and defect indicators of `p` on an energy grid; grid points are
/// independent and evaluated in parallel, rows keep the grid order.
pub fn transfer_growth_scan(
    p: &HalflineProblem,
    grid: &[f64],
    config: ScanConfig,
) -> Result<SpectralReport> {
    p.check()?;
    let ts: Vec<f64> = p.points.iter().map(|q| q.t).collect();
    let rows = grid
        .par_iter()
        .map(|&e| {
            let growth = partial_product_norms(p, e)?;
            let max_growth = growth.iter().cloned().fold(1.0, f64::max);
            let defect = defect_at(&p.points, true, p.start, e, config.eta)?;
            let coarse = defect_at(&p.points, true, p.start, e, 10.0 * config.eta)?;
            Ok(ScanRow {
                e,
                defect,
                defect_decreasing: defect <= coarse,
                lyapunov_slope: lyapunov_slope(&ts, &growth),
                ac_candidate: max_growth <= config.growth_bound,
                max_growth,
                growth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport { config, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureAtom {
    pub t: f64,
    pub weights: Vec<f64>,
}

/// Point measures describing a sequence of GPIs: weights `(a_n, d_n, |c_n|)`
/// when all `β_n ≠ 0`, `(Re γ_n, α_n)/(|γ_n|² + 4)` when all `β_n = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpiMeasureSet {
    pub atoms: Vec<MeasureAtom>,
}

impl GpiMeasureSet {
    pub fn from_couplings(points: &[(f64, GpiCouplingA)]) -> Result<Self> {
        let nonzero_beta = points.iter().filter(|(_, g)| g.beta != 0.0).count();
        if nonzero_beta != 0 && nonzero_beta != points.len() {
            return Err(Error::InvalidInput(
                "couplings mix the beta = 0 and beta != 0 regimes".into(),
            ));
        }
        let mut atoms = Vec::with_capacity(points.len());
        let mut prev = f64::NEG_INFINITY;
        for &(t, g) in points {
            if !(t > prev) {
                return Err(Error::InvalidInput("atom positions must increase".into()));
            }
            prev = t;
            let weights = if g.beta != 0.0 {
                let b = a_to_b(&g)?;
                vec![b.a, b.d, b.c.norm()]
            } else {
                let s = g.gamma.norm_sqr() + 4.0;
                vec![g.gamma.re / s, g.alpha / s]
            };
            atoms.push(MeasureAtom { t, weights });
        }
        Ok(Self { atoms })
    }

    /// Number of weights per atom, `None` for the empty set.
    pub fn regime(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.weights.len())
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| MeasureAtom {
                    t: a.t - s,
                    weights: a.weights.clone(),
                })
                .collect(),
        }
    }
}

/// Hat function of height 1 centred at `p / 2^q` with half-width `2^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hat {
    pub center: f64,
    pub half_width: f64,
}

impl Hat {
    pub fn eval(&self, t: f64) -> f64 {
        (1.0 - (t - self.center).abs() / self.half_width).max(0.0)
    }
}

/// First `m` hats of the test family. Stage `s` covers the dyadic centres
/// `p / 2^q` with `q < s` and `|p| ≤ s 2^q`; each stage only adds what the
/// previous ones lack, so the enumeration is fixed and dense on compacts.
pub fn hat_family(m: usize) -> Vec<Hat> {
    let mut out = Vec::with_capacity(m);
    let mut stage: i64 = 1;
    while out.len() < m {
        for q in 0..stage {
            let scale = 1i64 << q;
            let lim = stage * scale;
            for p in -lim..=lim {
                let seen = q < stage - 1 && p.abs() <= (stage - 1) * scale;
                if seen {
                    continue;
                }
                out.push(Hat {
                    center: p as f64 / scale as f64,
                    half_width: 1.0 / scale as f64,
                });
                if out.len() == m {
                    return out;
                }
            }
        }
        stage += 1;
    }
    out
}

/// `Σ_{m ≤ M} 2^{-m} ρ_m / (1 + ρ_m)` with `ρ_m = Σ_j |∫ f_m d(μ_j¹ − μ_j²)|`.
pub fn gpi_distance(h1: &GpiMeasureSet, h2: &GpiMeasureSet, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one term".into()));
    }
    let nw = match (h1.regime(), h2.regime()) {
        (Some(a), Some(b)) if a != b => return Err(Error::RegimeMismatch(a, b)),
        (a, b) => a.or(b).unwrap_or(0),
    };
    let integral = |h: &GpiMeasureSet, f: &Hat, j: usize| -> f64 {
        h.atoms.iter().map(|a| a.weights[j] * f.eval(a.t)).sum()
    };
    let mut d = 0.0;
    let mut w = 1.0;
    for f in hat_family(m) {
        w *= 0.5;
        let rho: f64 = (0..nw)
            .map(|j| (integral(h1, &f, j) - integral(h2, &f, j)).abs())
            .sum();
        d += w * rho / (1.0 + rho);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConfig {
    pub k: f64,
    pub n: usize,
    /// Tolerance of the `≠ 0` tests and lower bound for the spacing.
    pub delta: f64,
    /// Required ratio of the largest to the smallest gap for the sparsity proxy.
    pub gap_ratio: f64,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        Self {
            k: 100.0,
            n: 1,
            delta: 1e-9,
            gap_ratio: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationCheck {
    pub n: usize,
    pub b: usize,
    pub t: f64,
    pub separated: bool,
    /// The displayed non-vanishing condition, `det(√b − 1) + 4(1 − b)Re γ + 4(1 + √b)`.
    pub tri_value: f64,
    pub tri: bool,
    /// The reduction denominator `4(√b+1)² + det(√b−1)² + 4(1−b)Re γ`, which
    /// is not the same expression.
    pub denominator: f64,
    pub denominator_nonzero: bool,
    pub iii: bool,
    pub ctyri_value: f64,
    pub ctyri: bool,
    pub pet_value: f64,
    pub pet: bool,
    pub iv: bool,
    pub sest: bool,
    pub v_a: bool,
    pub beta_zero: bool,
    pub alpha_h: f64,
    pub beta_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reasons")]
pub enum Verdict {
    EmptyAcPredicted,
    HypothesesFail(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremReport {
    pub config: TheoremConfig,
    /// Finite-sample stand-in for `lim sup (t_{n+1} − t_n) = ∞`: gaps after
    /// generation `N` strictly increase and the largest exceeds `gap_ratio`
    /// times the smallest.
    pub sparsity_proxy: bool,
    pub min_gap: f64,
    pub spacing_ok: bool,
    pub generations: Vec<GenerationCheck>,
    pub v_b_uniform: bool,
    pub verdict: Verdict,
}

fn check_generation(
    n: usize,
    b: usize,
    t: f64,
    radial: &RadialCondition,
    cfg: &TheoremConfig,
) -> GenerationCheck {
    let nz = |x: f64| x.abs() > cfg.delta;
    let inside = |x: f64| 1.0 / cfg.k < x && x < cfg.k;
    let g = match radial {
        RadialCondition::Gpi(g) => *g,
        _ => {
            return GenerationCheck {
                n,
                b,
                t,
                separated: true,
                tri_value: 0.0,
                tri: false,
                denominator: 0.0,
                denominator_nonzero: false,
                iii: false,
                ctyri_value: 0.0,
                ctyri: false,
                pet_value: 0.0,
                pet: false,
                iv: false,
                sest: false,
                v_a: false,
                beta_zero: false,
                alpha_h: 0.0,
                beta_h: 0.0,
            }
        }
    };
    let bf = b as f64;
    let sb = bf.sqrt();
    let det = g.det_a();
    let re = g.gamma.re;
    let im = g.gamma.im;
    let tri_value = det * (sb - 1.0) + 4.0 * (1.0 - bf) * re + 4.0 * (1.0 + sb);
    let tri = nz(tri_value);
    let denominator = reduction_denominator(&g, b);
    let iii = nz(im) || (nz(det - 4.0) && tri);
    let ctyri_value =
        (4.0 - 2.0 * sb * (det - 4.0) + det + bf * (4.0 + det - 4.0 * re) + 4.0 * re).abs();
    let pet_value = 4.0 * bf * det
        + (1.0 - bf) * ((4.0 + det + 4.0 * re).powi(2) - bf * (4.0 + det - 4.0 * re).powi(2));
    let ctyri = inside(ctyri_value);
    let pet = inside(pet_value);
    let sest = g.beta != 0.0
        && sb / g.beta.abs() * ((det - 4.0).powi(2) + (4.0 * im).powi(2)).sqrt() > 1.0 / cfg.k;
    let v_a = bf * g.beta.abs() > 1.0 / cfg.k && sest;
    GenerationCheck {
        n,
        b,
        t,
        separated: false,
        tri_value,
        tri,
        denominator,
        denominator_nonzero: nz(denominator),
        iii,
        ctyri_value,
        ctyri,
        pet_value,
        pet,
        iv: ctyri && pet,
        sest,
        v_a,
        beta_zero: !nz(g.beta),
        alpha_h: 16.0 * g.alpha / denominator,
        beta_h: 16.0 * bf * g.beta / denominator,
    }
}

/// Evaluates the hypotheses on the generations `n > N` of the spec. The
/// sparsity condition can only be approximated from finitely many gaps; see
/// [`MainTheoremReport::sparsity_proxy`].
pub fn check_main_theorem(spec: &RadialTreeSpec, cfg: TheoremConfig) -> Result<MainTheoremReport> {
    let gens = &spec.generations;
    if gens.len() < cfg.n + 1 {
        return Err(Error::InsufficientGenerations {
            needed: cfg.n + 1,
            found: gens.len(),
        });
    }
    let mut ts = vec![0.0];
    ts.extend(gens.iter().map(|g| g.t));
    let gaps: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let spacing_ok = min_gap > cfg.delta;
    // gaps t_{n+1} − t_n for n ≥ max(N, 1)
    let late = &gaps[cfg.n.max(1)..];
    let sparsity_proxy = late.len() >= 2
        && late.windows(2).all(|w| w[1] > w[0])
        && late.iter().cloned().fold(0.0, f64::max)
            > cfg.gap_ratio * late.iter().cloned().fold(f64::INFINITY, f64::min);

    let checks: Vec<GenerationCheck> = gens
        .iter()
        .enumerate()
        .skip(cfg.n)
        .map(|(i, g)| check_generation(i + 1, g.b, g.t, &g.coupling.radial, &cfg))
        .collect();

    let all = |f: &dyn Fn(&GenerationCheck) -> bool| checks.iter().all(f);
    let lim = 1.0 / cfg.k;
    let v_b_uniform = all(&|c| c.beta_zero)
        && (all(&|c| c.alpha_h > lim)
            || all(&|c| c.alpha_h < -lim)
            || all(&|c| c.beta_h > lim)
            || all(&|c| c.beta_h < -lim));
    let v_a = all(&|c| c.v_a);

    let mut reasons = Vec::new();
    if !sparsity_proxy {
        reasons.push("(i) sparsity proxy fails".to_string());
    }
    if !spacing_ok {
        reasons.push(format!("(ii) minimal spacing {min_gap} not above delta"));
    }
    for c in &checks {
        if c.separated {
            reasons.push(format!("generation {}: separated radial condition", c.n));
        }
        if !c.iii {
            reasons.push(format!("(iii) fails at generation {}", c.n));
        }
        if !c.iv {
            reasons.push(format!("(iv) fails at generation {}", c.n));
        }
    }
    if !(v_a || v_b_uniform) {
        reasons.push("(v) neither (a) nor (b) holds uniformly".to_string());
    }
    let verdict = if reasons.is_empty() {
        Verdict::EmptyAcPredicted
    } else {
        Verdict::HypothesesFail(reasons)
    };
    Ok(MainTheoremReport {
        config: cfg,
        sparsity_proxy,
        min_gap,
        spacing_ok,
        generations: checks,
        v_b_uniform,
        verdict,
    })
}
