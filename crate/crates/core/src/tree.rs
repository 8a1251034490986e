//! Radial rooted metric trees: generations with a common branching number,
//! distance from the root and vertex coupling, plus a Robin condition at the
//! root.
//!
//! At a vertex with branching number `b` the coupling consists of a GPI-type
//! relation between the incoming edge and the averages over the `b` outgoing
//! edges (`radial`), and a relation `(U - I) V Ψ + i (U + I) V Ψ' = 0` acting
//! on the part of the outgoing data orthogonal to `(1, …, 1)`. `U` is a
//! `(b-1)×(b-1)` unitary and `V` a `(b-1)×b` matrix with orthonormal rows,
//! each orthogonal to `(1, …, 1)`.

use std::f64::consts::{PI, TAU};

use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

use crate::coupling::GpiCouplingA;
use crate::error::{Error, Result};
use crate::linalg::{fro, max_abs, real, serde_cmatrix, unitarity_residual, CMatrix, C64, I};

/// Tolerance for the unitarity / orthonormality checks of validation.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// The two-parameter-block part of a vertex coupling seen by radial functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialCondition {
    Gpi(GpiCouplingA),
    /// `f- = 0` and `Σ f+ = 0`.
    DirichletBoth,
    /// `f-' = 0` and `Σ f+' = 0`.
    NeumannBoth,
}

impl Default for RadialCondition {
    fn default() -> Self {
        RadialCondition::Gpi(GpiCouplingA::free())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadialConditionJson {
    Gpi(GpiCouplingA),
    Named(SeparatedName),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SeparatedName {
    Dirichlet,
    Neumann,
}

impl Serialize for RadialCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            RadialCondition::Gpi(g) => RadialConditionJson::Gpi(g),
            RadialCondition::DirichletBoth => RadialConditionJson::Named(SeparatedName::Dirichlet),
            RadialCondition::NeumannBoth => RadialConditionJson::Named(SeparatedName::Neumann),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RadialCondition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match RadialConditionJson::deserialize(d)? {
            RadialConditionJson::Gpi(g) => RadialCondition::Gpi(g),
            RadialConditionJson::Named(SeparatedName::Dirichlet) => RadialCondition::DirichletBoth,
            RadialConditionJson::Named(SeparatedName::Neumann) => RadialCondition::NeumannBoth,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVertexCoupling {
    #[serde(default)]
    pub radial: RadialCondition,
    #[serde(with = "serde_cmatrix")]
    pub u: CMatrix,
    #[serde(with = "serde_cmatrix")]
    pub v: CMatrix,
}

impl TreeVertexCoupling {
    pub fn new(radial: RadialCondition, u: CMatrix, v: CMatrix) -> Self {
        Self { radial, u, v }
    }

    /// Coupling with the canonical `V` for the branching number `u.nrows() + 1`.
    pub fn with_canonical_v(radial: RadialCondition, u: CMatrix) -> Self {
        let b = u.nrows() + 1;
        Self::new(radial, u, canonical_v(b))
    }

    /// `U = -I`; together with a free radial part this is the Kirchhoff vertex.
    pub fn kirchhoff_like(radial: RadialCondition, b: usize) -> Self {
        let n = b.saturating_sub(1);
        Self::with_canonical_v(radial, -CMatrix::identity(n, n))
    }

    pub fn gpi(&self) -> Option<&GpiCouplingA> {
        match &self.radial {
            RadialCondition::Gpi(g) => Some(g),
            _ => None,
        }
    }
}

/// Orthonormalized difference basis of the complement of `(1, …, 1)` in `C^b`:
/// row `j` is `(1, …, 1, -j, 0, …, 0) / sqrt(j (j + 1))` with `j` leading ones.
pub fn canonical_v(b: usize) -> CMatrix {
    let n = b.saturating_sub(1);
    CMatrix::from_fn(n, b, |i, k| {
        let j = (i + 1) as f64;
        let norm = (j * (j + 1.0)).sqrt();
        if k <= i {
            real(1.0 / norm)
        } else if k == i + 1 {
            real(-j / norm)
        } else {
            real(0.0)
        }
    })
}

/// `U = W⁻¹ diag(e^{iθ}) W` for unitary `W`.
pub fn unitary_from_phases(w: &CMatrix, thetas: &[f64]) -> CMatrix {
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        thetas.len(),
        thetas.iter().map(|&t| C64::from_polar(1.0, t)),
    ));
    w.adjoint() * d * w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GenerationJson", into = "GenerationJson")]
pub struct Generation {
    pub b: usize,
    pub t: f64,
    pub coupling: TreeVertexCoupling,
}

#[derive(Serialize, Deserialize)]
struct GenerationJson {
    b: usize,
    t: f64,
    coupling: CouplingJson,
}

#[derive(Serialize, Deserialize)]
struct CouplingJson {
    #[serde(default)]
    radial: RadialCondition,
    #[serde(
        default,
        with = "serde_cmatrix::option",
        skip_serializing_if = "Option::is_none"
    )]
    u: Option<CMatrix>,
    #[serde(
        default,
        with = "serde_cmatrix::option",
        skip_serializing_if = "Option::is_none"
    )]
    v: Option<CMatrix>,
}

impl TryFrom<GenerationJson> for Generation {
    type Error = String;

    fn try_from(g: GenerationJson) -> std::result::Result<Self, String> {
        if g.b == 0 {
            return Err("branching number must be at least 1".into());
        }
        let n = g.b - 1;
        // an empty JSON matrix carries no column count
        let fix = |m: CMatrix, cols: usize| {
            if m.nrows() == 0 {
                CMatrix::zeros(0, cols)
            } else {
                m
            }
        };
        let u = fix(g.coupling.u.unwrap_or_else(|| -CMatrix::identity(n, n)), n);
        let v = fix(g.coupling.v.unwrap_or_else(|| canonical_v(g.b)), g.b);
        Ok(Generation {
            b: g.b,
            t: g.t,
            coupling: TreeVertexCoupling::new(g.coupling.radial, u, v),
        })
    }
}

impl From<Generation> for GenerationJson {
    fn from(g: Generation) -> Self {
        GenerationJson {
            b: g.b,
            t: g.t,
            coupling: CouplingJson {
                radial: g.coupling.radial,
                u: Some(g.coupling.u),
                v: Some(g.coupling.v),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTreeSpec {
    pub generations: Vec<Generation>,
    /// Root condition `f' + tan(θ0/2) f = 0`, `θ0 ∈ (-π/2, π/2]`.
    #[serde(default)]
    pub theta0: f64,
}

impl RadialTreeSpec {
    pub fn vertex_positions(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.t).collect()
    }

    pub fn branching_numbers(&self) -> Vec<usize> {
        self.generations.iter().map(|g| g.b).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

pub fn validate_coupling(c: &TreeVertexCoupling, b: usize) -> Vec<String> {
    let mut out = Vec::new();
    let n = b.saturating_sub(1);
    if let RadialCondition::Gpi(g) = &c.radial {
        if !g.is_finite() {
            out.push("radial coupling parameters not finite".into());
        }
    }
    if c.u.shape() != (n, n) {
        out.push(format!(
            "U has shape {:?}, expected ({n}, {n})",
            c.u.shape()
        ));
    } else if n > 0 {
        let r = unitarity_residual(&c.u);
        if !(r <= STRUCTURE_TOL) {
            out.push(format!("U not unitary (residual {r:e})"));
        }
    }
    if c.v.shape() != (n, b) {
        out.push(format!(
            "V has shape {:?}, expected ({n}, {b})",
            c.v.shape()
        ));
    } else if n > 0 {
        let r = max_abs(&(&c.v * c.v.adjoint() - CMatrix::identity(n, n)));
        if !(r <= STRUCTURE_TOL) {
            out.push(format!("V rows not orthonormal (residual {r:e})"));
        }
        for i in 0..n {
            let s: C64 = c.v.row(i).iter().sum();
            if !(s.norm() <= STRUCTURE_TOL) {
                out.push(format!("V row {i} not orthogonal to (1,...,1)"));
            }
        }
    }
    out
}

pub fn validate_tree(spec: &RadialTreeSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if !(spec.theta0 > -PI / 2.0 && spec.theta0 <= PI / 2.0) {
        violations.push(format!("theta0 = {} outside (-pi/2, pi/2]", spec.theta0));
    }
    let mut prev = 0.0;
    for (k, g) in spec.generations.iter().enumerate() {
        let gen = k + 1;
        if !(g.t.is_finite() && g.t > 0.0) {
            violations.push(format!("generation {gen}: t = {} must be positive", g.t));
        }
        if k > 0 && !(g.t > prev) {
            violations.push(format!("generation {gen}: t not strictly increasing"));
        }
        prev = g.t;
        if g.b == 0 {
            violations.push(format!("generation {gen}: branching number must be >= 1"));
            continue;
        }
        for v in validate_coupling(&g.coupling, g.b) {
            violations.push(format!("generation {gen}: {v}"));
        }
    }
    ValidationReport { violations }
}

/// Boundary-form matrices of the vertex coupling acting on
/// `(f-, Ψ)` and `(-f-', Ψ')`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMatrices {
    pub a: CMatrix,
    pub b: CMatrix,
}

pub fn vertex_matrices(c: &TreeVertexCoupling, b: usize) -> Result<VertexMatrices> {
    let n = b
        .checked_sub(1)
        .ok_or_else(|| Error::DimensionMismatch("branching number 0".into()))?;
    if c.u.shape() != (n, n) || c.v.shape() != (n, b) {
        return Err(Error::DimensionMismatch(format!(
            "U {:?}, V {:?} for b = {b}",
            c.u.shape(),
            c.v.shape()
        )));
    }
    let dim = b + 1;
    let bf = b as f64;
    let mut a = CMatrix::zeros(dim, dim);
    let mut bm = CMatrix::zeros(dim, dim);
    match c.radial {
        RadialCondition::Gpi(g) => {
            let (al, be, ga) = (g.alpha, g.beta, g.gamma);
            a[(0, 0)] = real(-al / 2.0);
            a[(1, 0)] = -(1.0 - ga.conj() / 2.0);
            bm[(0, 0)] = 1.0 + ga / 2.0;
            bm[(1, 0)] = real(be / 2.0);
            for j in 1..dim {
                a[(0, j)] = real(-al / (2.0 * bf));
                a[(1, j)] = (1.0 + ga.conj() / 2.0) / bf;
                bm[(0, j)] = 1.0 - ga / 2.0;
                bm[(1, j)] = real(-be / 2.0);
            }
        }
        RadialCondition::DirichletBoth => {
            a[(0, 0)] = real(1.0);
            for j in 1..dim {
                a[(1, j)] = real(1.0 / bf);
            }
        }
        RadialCondition::NeumannBoth => {
            bm[(0, 0)] = real(1.0);
            for j in 1..dim {
                bm[(1, j)] = real(1.0);
            }
        }
    }
    if n > 0 {
        let id = CMatrix::identity(n, n);
        let upper = (&c.u - &id) * &c.v;
        let lower = (&c.u + &id) * &c.v * I;
        a.view_mut((2, 1), (n, b)).copy_from(&upper);
        bm.view_mut((2, 1), (n, b)).copy_from(&lower);
    }
    Ok(VertexMatrices { a, b: bm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Frobenius norm of `AB* - (AB*)*`.
    pub hermiticity_residual: f64,
    /// Smallest singular value of `(A, B)` after normalizing its rows.
    pub sigma_min: f64,
    pub passed: bool,
}

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const RANK_TOL: f64 = 1e-10;

pub fn check_self_adjoint(m: &VertexMatrices) -> CertificateReport {
    let ab = &m.a * m.b.adjoint();
    let hermiticity_residual = fro(&(&ab - ab.adjoint()));
    let rows = m.a.nrows();
    let cols = m.a.ncols() + m.b.ncols();
    let mut stacked = CMatrix::zeros(rows, cols);
    stacked
        .view_mut((0, 0), (rows, m.a.ncols()))
        .copy_from(&m.a);
    stacked
        .view_mut((0, m.a.ncols()), (rows, m.b.ncols()))
        .copy_from(&m.b);
    for i in 0..rows {
        let nrm = stacked.row(i).norm();
        if nrm > 0.0 {
            stacked.row_mut(i).scale_mut(1.0 / nrm);
        }
    }
    let sigma_min = if rows == 0 {
        f64::INFINITY
    } else {
        stacked
            .singular_values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    CertificateReport {
        hermiticity_residual,
        sigma_min,
        passed: hermiticity_residual < HERMITICITY_TOL && sigma_min > RANK_TOL,
    }
}

/// Eigen-decomposition `U = W⁻¹ diag(e^{iθ}) W` with `W` unitary and the
/// phases sorted ascending in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenphases {
    pub thetas: Vec<f64>,
    /// Rows form the eigenvector basis (conjugated), so `W U W* = D`.
    pub w: CMatrix,
}

impl Eigenphases {
    pub fn reconstruct(&self) -> CMatrix {
        unitary_from_phases(&self.w, &self.thetas)
    }
}

pub fn eigenphases(u: &CMatrix) -> Result<Eigenphases> {
    let res = unitarity_residual(u);
    if !(res <= STRUCTURE_TOL) {
        return Err(Error::NotUnitary(res));
    }
    let n = u.nrows();
    if n == 0 {
        return Ok(Eigenphases {
            thetas: Vec::new(),
            w: CMatrix::zeros(0, 0),
        });
    }
    let (q, t) = Schur::new(u.clone()).unpack();
    let mut pairs: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let mut th = t[(i, i)].arg().rem_euclid(TAU);
            if th > TAU - 1e-12 {
                th = 0.0;
            }
            (th, i)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let qa = q.adjoint();
    let w = CMatrix::from_fn(n, n, |i, j| qa[(pairs[i].1, j)]);
    Ok(Eigenphases {
        thetas: pairs.iter().map(|p| p.0).collect(),
        w,
    })
}

/// Product of the branching numbers of all generations with `t_k < t`.
pub fn branching_function(spec: &RadialTreeSpec, t: f64) -> Result<u64> {
    let mut g = 1u64;
    for gen in &spec.generations {
        if (t - gen.t).abs() <= 1e-14 {
            return Err(Error::OnVertex(t));
        }
        if gen.t < t {
            g *= gen.b as u64;
        }
    }
    Ok(g)
}

/// `max |W⁻¹DW - U|`, used by tests and reports.
pub fn reconstruction_error(u: &CMatrix, e: &Eigenphases) -> f64 {
    max_abs(&(e.reconstruct() - u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    pub(crate) fn fig1_tree() -> RadialTreeSpec {
        let g = |b: usize, t: f64| Generation {
            b,
            t,
            coupling: TreeVertexCoupling::kirchhoff_like(RadialCondition::default(), b),
        };
        RadialTreeSpec {
            generations: vec![g(3, 1.0), g(2, 3.0)],
            theta0: 0.0,
        }
    }

    #[test]
    fn canonical_v_matches_three_edge_example() {
        let v = canonical_v(3);
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        let expect = [[1.0 / s2, -1.0 / s2, 0.0], [1.0 / s6, 1.0 / s6, -2.0 / s6]];
        for i in 0..2 {
            for j in 0..3 {
                assert!((v[(i, j)].re - expect[i][j]).abs() < 1e-15);
            }
        }
        for b in 1..8 {
            let v = canonical_v(b);
            assert!(validate_coupling(
                &TreeVertexCoupling::kirchhoff_like(RadialCondition::default(), b),
                b
            )
            .is_empty());
            assert_eq!(v.shape(), (b - 1, b));
        }
    }

    #[test]
    fn validate_examples() {
        let mut spec = fig1_tree();
        spec.generations.push(Generation {
            b: 2,
            t: 7.0,
            coupling: TreeVertexCoupling::kirchhoff_like(RadialCondition::default(), 2),
        });
        assert!(validate_tree(&spec).is_valid());

        let mut bad = fig1_tree();
        bad.generations[0].t = 3.0;
        bad.generations[1].t = 1.0;
        let rep = validate_tree(&bad);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.contains("t not strictly increasing")));

        let mut bad = fig1_tree();
        let r = 1.0 / 3f64.sqrt();
        bad.generations[0].coupling.v[(0, 0)] = real(r);
        bad.generations[0].coupling.v[(0, 1)] = real(r);
        bad.generations[0].coupling.v[(0, 2)] = real(r);
        let rep = validate_tree(&bad);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.contains("not orthogonal to (1,...,1)")));
    }

    #[test]
    fn vertex_matrices_b2_free() {
        let s = 1.0 / 2f64.sqrt();
        let cpl = TreeVertexCoupling::new(
            RadialCondition::default(),
            CMatrix::from_element(1, 1, real(1.0)),
            CMatrix::from_row_slice(1, 2, &[real(s), real(-s)]),
        );
        let m = vertex_matrices(&cpl, 2).unwrap();
        let ab = &m.a * m.b.adjoint();
        assert!(max_abs(&ab) < 1e-15);
        assert!(check_self_adjoint(&m).passed);
    }

    #[test]
    fn vertex_matrices_product_is_block_diagonal() {
        let g = GpiCouplingA::new(0.7, -1.2, c(0.3, 0.4));
        let th = [0.4, 2.1];
        let w = CMatrix::from_row_slice(2, 2, &[real(0.6), real(0.8), real(0.8), real(-0.6)]);
        let u = unitary_from_phases(&w, &th);
        let cpl = TreeVertexCoupling::with_canonical_v(RadialCondition::Gpi(g), u.clone());
        let m = vertex_matrices(&cpl, 3).unwrap();
        let ab = &m.a * m.b.adjoint();
        assert!((ab[(0, 0)] - real(-0.7)).norm() < 1e-14);
        assert!((ab[(1, 1)] - real(1.2)).norm() < 1e-14);
        assert!(ab[(0, 1)].norm() < 1e-14 && ab[(1, 0)].norm() < 1e-14);
        let id = CMatrix::identity(2, 2);
        let block = (&u - &id) * (u.adjoint() + &id) * (-I);
        assert!(max_abs(&(ab.view((2, 2), (2, 2)) - block)) < 1e-14);
        assert!(check_self_adjoint(&m).passed);
    }

    #[test]
    fn non_unitary_u_fails_certificate() {
        let w = CMatrix::from_row_slice(2, 2, &[real(0.6), real(0.8), real(0.8), real(-0.6)]);
        let mut u = unitary_from_phases(&w, &[0.4, 2.1]);
        u[(0, 1)] += real(0.1);
        let cpl = TreeVertexCoupling::with_canonical_v(RadialCondition::default(), u);
        let rep = check_self_adjoint(&vertex_matrices(&cpl, 3).unwrap());
        assert!(rep.hermiticity_residual > 1e-3);
        assert!(!rep.passed);
    }

    #[test]
    fn chain_vertex_certificate() {
        let cpl = TreeVertexCoupling::kirchhoff_like(
            RadialCondition::Gpi(GpiCouplingA::new(1.0, 2.0, c(0.5, 0.5))),
            1,
        );
        let m = vertex_matrices(&cpl, 1).unwrap();
        assert_eq!(m.a.shape(), (2, 2));
        assert!(check_self_adjoint(&m).passed);
    }

    #[test]
    fn separated_radial_parts_certify() {
        for radial in [RadialCondition::DirichletBoth, RadialCondition::NeumannBoth] {
            let cpl = TreeVertexCoupling::kirchhoff_like(radial, 3);
            assert!(check_self_adjoint(&vertex_matrices(&cpl, 3).unwrap()).passed);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cpl = TreeVertexCoupling::kirchhoff_like(RadialCondition::default(), 3);
        assert!(matches!(
            vertex_matrices(&cpl, 4),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn eigenphase_examples() {
        let e = eigenphases(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(e.thetas, vec![0.0, 0.0]);
        let e = eigenphases(&(-CMatrix::identity(2, 2))).unwrap();
        assert!(e.thetas.iter().all(|t| (t - PI).abs() < 1e-14));
        let swap = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let e = eigenphases(&swap).unwrap();
        assert!(e.thetas[0].abs() < 1e-14 && (e.thetas[1] - PI).abs() < 1e-14);
        assert!(reconstruction_error(&swap, &e) < 1e-10);
        assert!(matches!(
            eigenphases(&CMatrix::from_element(2, 2, real(1.0))),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn branching_function_fig1() {
        let spec = fig1_tree();
        assert_eq!(branching_function(&spec, 0.5).unwrap(), 1);
        assert_eq!(branching_function(&spec, 2.0).unwrap(), 3);
        assert_eq!(branching_function(&spec, 10.0).unwrap(), 6);
        assert!(matches!(
            branching_function(&spec, 1.0),
            Err(Error::OnVertex(_))
        ));
    }

    #[test]
    fn tree_json_defaults_and_round_trip() {
        let s = r#"{"theta0": 0.25, "generations": [
            {"b": 3, "t": 1.0, "coupling": {"radial": {"alpha": 1.0, "beta": 0.0, "gamma": [0.0, 0.0]}}},
            {"b": 1, "t": 2.0, "coupling": {"radial": "dirichlet"}}
        ]}"#;
        let spec = RadialTreeSpec::from_json(s).unwrap();
        assert!(validate_tree(&spec).is_valid(), "{}", validate_tree(&spec));
        assert_eq!(spec.generations[0].coupling.u, -CMatrix::identity(2, 2));
        assert_eq!(
            spec.generations[1].coupling.radial,
            RadialCondition::DirichletBoth
        );
        let back = RadialTreeSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
