//! Reduction of radial tree couplings to halfline point interactions and the
//! decomposition of the tree Laplacian into halfline problems with
//! multiplicities.
//!
//! On the symmetric subspace of generation `n` the outgoing edge data enter
//! only through `Σ f+ / b = b^{-1/2} y+` and `Σ f+' = b^{1/2} y+'`, which turns
//! the radial part of each vertex coupling into a GPI on a halfline.

use serde::{Deserialize, Serialize};

use crate::coupling::{jump_matrix, GpiCouplingA, JumpMatrix, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::tree::{eigenphases, RadialCondition, RadialTreeSpec, TreeVertexCoupling};

/// Point interaction on a reduced halfline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HalflineCoupling {
    Gpi(GpiCouplingA),
    /// `y- = 0`, `y+ = 0`: the halfline splits.
    DirichletBoth,
    /// `y-' = 0`, `y+' = 0`.
    NeumannBoth,
    /// `y+' = -y-'`, `y+ + y- = -β' y-'` with `β' = (β_t/4)(√b - 1)²`.
    SpecialBeta {
        beta_t: f64,
        b: usize,
    },
    /// `y+ = -y-`, `y+' + y-' = -α' y-` with `α' = (α_t/4)(b^{-1/2} - 1)²`.
    SpecialAlpha {
        alpha_t: f64,
        b: usize,
    },
}

impl HalflineCoupling {
    pub fn free() -> Self {
        HalflineCoupling::Gpi(GpiCouplingA::free())
    }

    /// Coefficient multiplying `-y-'` (resp. `-y-`) in the special branches.
    pub fn special_factor(&self) -> Option<f64> {
        match *self {
            HalflineCoupling::SpecialBeta { beta_t, b } => {
                Some(beta_t / 4.0 * ((b as f64).sqrt() - 1.0).powi(2))
            }
            HalflineCoupling::SpecialAlpha { alpha_t, b } => {
                Some(alpha_t / 4.0 * (1.0 / (b as f64).sqrt() - 1.0).powi(2))
            }
            _ => None,
        }
    }

    /// `true` for couplings that decouple the two sides.
    pub fn is_separated(&self) -> bool {
        matches!(
            self,
            HalflineCoupling::DirichletBoth | HalflineCoupling::NeumannBoth
        )
    }

    /// Jump matrix `(y-, y-') ↦ (y+, y+')`; `None` for separated couplings.
    pub fn jump(&self) -> Result<Option<JumpMatrix>> {
        let f = self.special_factor();
        Ok(match *self {
            HalflineCoupling::Gpi(g) => Some(jump_matrix(&g)?),
            HalflineCoupling::DirichletBoth | HalflineCoupling::NeumannBoth => None,
            HalflineCoupling::SpecialBeta { .. } => {
                Some(JumpMatrix::from_real([[-1.0, -f.unwrap()], [0.0, -1.0]]))
            }
            HalflineCoupling::SpecialAlpha { .. } => {
                Some(JumpMatrix::from_real([[-1.0, 0.0], [-f.unwrap(), -1.0]]))
            }
        })
    }
}

/// Homogeneous Robin condition `cos(θ/2) y' + sin(θ/2) y = 0` at the start
/// of a halfline; `θ = π` is Dirichlet, `θ = 0` Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootCondition {
    pub theta: f64,
}

impl RootCondition {
    pub fn robin(theta: f64) -> Self {
        Self { theta }
    }

    pub fn dirichlet() -> Self {
        Self {
            theta: std::f64::consts::PI,
        }
    }

    pub fn neumann() -> Self {
        Self { theta: 0.0 }
    }

    /// Coefficients `(p, q)` of the condition `p y + q y' = 0`.
    pub fn coefficients(&self) -> (f64, f64) {
        ((self.theta / 2.0).sin(), (self.theta / 2.0).cos())
    }

    /// Value/derivative data `(y, y')` satisfying the condition.
    pub fn initial_data(&self) -> [f64; 2] {
        let (p, q) = self.coefficients();
        [q, -p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalflinePoint {
    pub t: f64,
    pub coupling: HalflineCoupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalflineProblem {
    /// Generation the halfline is rooted at (0 for the root halfline).
    pub generation: usize,
    /// Index of the eigenphase of `U_n` (0 for the root halfline).
    pub index: usize,
    pub start: f64,
    pub root: RootCondition,
    pub points: Vec<HalflinePoint>,
    pub multiplicity: u64,
}

impl HalflineProblem {
    /// Halfline on `[0, ∞)` with the given points, multiplicity 1.
    pub fn new(root: RootCondition, points: Vec<HalflinePoint>) -> Self {
        Self {
            generation: 0,
            index: 0,
            start: 0.0,
            root,
            points,
            multiplicity: 1,
        }
    }

    pub fn from_gpi(root: RootCondition, points: &[(f64, GpiCouplingA)]) -> Self {
        Self::new(
            root,
            points
                .iter()
                .map(|&(t, g)| HalflinePoint {
                    t,
                    coupling: HalflineCoupling::Gpi(g),
                })
                .collect(),
        )
    }

    pub fn check(&self) -> Result<()> {
        let mut prev = self.start;
        for p in &self.points {
            if !(p.t > prev) {
                return Err(Error::InvalidInput(format!(
                    "points must be strictly increasing and beyond the start {}",
                    self.start
                )));
            }
            prev = p.t;
        }
        Ok(())
    }
}

/// How the decomposition treats generations beyond `max_generation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Drop the remaining vertices (free continuation).
    #[default]
    Free,
    /// Put a Dirichlet point at the first dropped vertex, if the spec has one.
    Dirichlet,
}

/// Common denominator `4(√b+1)² + det𝒜 (√b-1)² + 4(1-b) Re γ`.
pub fn reduction_denominator(g: &GpiCouplingA, b: usize) -> f64 {
    let sb = (b as f64).sqrt();
    4.0 * (sb + 1.0).powi(2) + g.det_a() * (sb - 1.0).powi(2) + 4.0 * (1.0 - b as f64) * g.gamma.re
}

/// The `γ_t = 2(√b+1)/(√b-1)` value of the special branches (`b ≥ 2`).
pub fn special_gamma(b: usize) -> f64 {
    let sb = (b as f64).sqrt();
    2.0 * (sb + 1.0) / (sb - 1.0)
}

pub fn reduce_gpi(g: &GpiCouplingA, b: usize) -> Result<HalflineCoupling> {
    if b == 0 {
        return Err(Error::InvalidInput("branching number 0".into()));
    }
    let bf = b as f64;
    let sb = bf.sqrt();
    let det = g.det_a();
    let den = reduction_denominator(g, b);
    let scale = 16.0 + det.abs() * (sb - 1.0).powi(2) + 4.0 * (bf - 1.0) * g.gamma.re.abs();
    if den.abs() <= DEGENERACY_TOL * scale {
        let on_branch = b >= 2
            && g.gamma.im.abs() <= DEGENERACY_TOL
            && (g.gamma.re - special_gamma(b)).abs() <= DEGENERACY_TOL * special_gamma(b);
        if on_branch && g.alpha.abs() <= DEGENERACY_TOL {
            return Ok(HalflineCoupling::SpecialBeta { beta_t: g.beta, b });
        }
        if on_branch && g.beta.abs() <= DEGENERACY_TOL {
            return Ok(HalflineCoupling::SpecialAlpha {
                alpha_t: g.alpha,
                b,
            });
        }
        return Err(Error::UnhandledDegenerate { generation: 0 });
    }
    let alpha = 16.0 * g.alpha / den;
    let beta = 16.0 * bf * g.beta / den;
    let gamma = c(
        (1.0 - bf) * (4.0 + det) + 4.0 * (bf + 1.0) * g.gamma.re,
        8.0 * sb * g.gamma.im,
    ) * (2.0 / den);
    Ok(HalflineCoupling::Gpi(GpiCouplingA::new(alpha, beta, gamma)))
}

pub fn reduce_vertex_coupling(c: &TreeVertexCoupling, b: usize) -> Result<HalflineCoupling> {
    match &c.radial {
        RadialCondition::Gpi(g) => reduce_gpi(g, b),
        RadialCondition::DirichletBoth => Ok(HalflineCoupling::DirichletBoth),
        RadialCondition::NeumannBoth => Ok(HalflineCoupling::NeumannBoth),
    }
}

/// `b_0 b_1 ⋯ b_{n-1}` with `b_0 = 1`.
pub fn multiplicity(spec: &RadialTreeSpec, n: usize) -> Result<u64> {
    let max = spec.generations.len();
    if n == 0 || n > max {
        return Err(Error::OutOfRange { index: n, max });
    }
    Ok(spec.generations[..n - 1]
        .iter()
        .map(|g| g.b as u64)
        .product())
}

/// Phases closer than this are treated as one eigenvalue of `U_n`.
pub const PHASE_MERGE_TOL: f64 = 1e-10;

/// Halfline problems `L_0` and `L_{ns}` for `n ≤ max_generation`, ordered by
/// `(n, s)`. Identical eigenphases of `U_n` give one problem with the summed
/// multiplicity.
pub fn decompose(
    spec: &RadialTreeSpec,
    max_generation: usize,
    truncation: Truncation,
) -> Result<Vec<HalflineProblem>> {
    let gens = &spec.generations;
    if max_generation > gens.len() {
        return Err(Error::InsufficientGenerations {
            needed: max_generation,
            found: gens.len(),
        });
    }
    let mut reduced = Vec::with_capacity(max_generation);
    for (k, g) in gens[..max_generation].iter().enumerate() {
        let h = reduce_vertex_coupling(&g.coupling, g.b).map_err(|e| match e {
            Error::UnhandledDegenerate { .. } => Error::UnhandledDegenerate { generation: k + 1 },
            e => e,
        })?;
        reduced.push(HalflinePoint {
            t: g.t,
            coupling: h,
        });
    }
    let tail = match (truncation, gens.get(max_generation)) {
        (Truncation::Dirichlet, Some(g)) => Some(HalflinePoint {
            t: g.t,
            coupling: HalflineCoupling::DirichletBoth,
        }),
        _ => None,
    };
    let points_after =
        |n: usize| -> Vec<HalflinePoint> { reduced[n..].iter().copied().chain(tail).collect() };

    let mut out = vec![HalflineProblem {
        generation: 0,
        index: 0,
        start: 0.0,
        root: RootCondition::robin(spec.theta0),
        points: points_after(0),
        multiplicity: 1,
    }];
    let mut mult = 1u64;
    for n in 1..=max_generation {
        let g = &gens[n - 1];
        let phases = eigenphases(&g.coupling.u)?;
        let mut merged: Vec<(f64, u64)> = Vec::new();
        for &th in &phases.thetas {
            match merged.last_mut() {
                Some((prev, m)) if (th - *prev).abs() <= PHASE_MERGE_TOL => *m += 1,
                _ => merged.push((th, 1)),
            }
        }
        for (s, (theta, m)) in merged.into_iter().enumerate() {
            out.push(HalflineProblem {
                generation: n,
                index: s + 1,
                start: g.t,
                root: RootCondition::robin(theta),
                points: points_after(n),
                multiplicity: mult * m,
            });
        }
        mult *= g.b as u64;
    }
    Ok(out)
}
