//! Built-in trees used by `qgs reproduce-example` and the test suite.

use std::f64::consts::PI;

use crate::coupling::GpiCouplingA;
use crate::linalg::{c, real, CMatrix, C64};
use crate::tree::{
    canonical_v, unitary_from_phases, Generation, RadialCondition, RadialTreeSpec,
    TreeVertexCoupling,
};

/// Eigenvector matrix of the three-edge example:
/// `[[r e^{iφ}, √(1−r²) e^{−iφ}], [√(1−r²) e^{iφ}, −r e^{−iφ}]]`.
pub fn three_edge_w(r: f64, phi: f64) -> CMatrix {
    let s = (1.0 - r * r).sqrt();
    let e = C64::from_polar(1.0, phi);
    CMatrix::from_row_slice(2, 2, &[r * e, s * e.conj(), s * e, -r * e.conj()])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeEdgeParams {
    pub theta1: f64,
    pub theta2: f64,
    pub phi: f64,
    pub r: f64,
}

impl Default for ThreeEdgeParams {
    fn default() -> Self {
        Self {
            theta1: PI / 3.0,
            theta2: PI / 5.0,
            phi: 0.2,
            r: 0.6,
        }
    }
}

impl ThreeEdgeParams {
    pub fn unitary(&self) -> CMatrix {
        unitary_from_phases(&three_edge_w(self.r, self.phi), &[self.theta1, self.theta2])
    }
}

/// Two generations, `b1 = 3` at `t = 1` with the three-edge unitary and
/// `b2 = 2` at `t = 2.3`, generic non-separating radial couplings.
pub fn two_generation_tree(params: ThreeEdgeParams) -> RadialTreeSpec {
    let g1 = Generation {
        b: 3,
        t: 1.0,
        coupling: TreeVertexCoupling::new(
            RadialCondition::Gpi(GpiCouplingA::new(0.7, 0.4, c(0.3, 0.2))),
            params.unitary(),
            canonical_v(3),
        ),
    };
    let g2 = Generation {
        b: 2,
        t: 2.3,
        coupling: TreeVertexCoupling::new(
            RadialCondition::Gpi(GpiCouplingA::new(-0.5, 1.1, c(-0.4, 0.6))),
            CMatrix::from_element(1, 1, C64::from_polar(1.0, 1.1)),
            canonical_v(2),
        ),
    };
    RadialTreeSpec {
        generations: vec![g1, g2],
        theta0: 0.4,
    }
}

/// Cut-off distance and energy window of the eigenvalue comparison.
pub const TWO_GENERATION_CUTOFF: f64 = 4.0;
pub const TWO_GENERATION_WINDOW: (f64, f64) = (0.0, 100.0);

/// `γ_t = 2(√b − 1)/(√b + 1)`, which reduces to the free halfline coupling.
pub fn free_reducing_gamma(b: usize) -> f64 {
    let sb = (b as f64).sqrt();
    2.0 * (sb - 1.0) / (sb + 1.0)
}

/// Sparse tree `t_n = 2ⁿ`, `n = 1..=generations`, branching `b` everywhere,
/// Kirchhoff-type `U = −I` and the free-reducing radial coupling.
pub fn free_reducing_sparse_tree(b: usize, generations: usize) -> RadialTreeSpec {
    let radial = RadialCondition::Gpi(GpiCouplingA::new(0.0, 0.0, real(free_reducing_gamma(b))));
    sparse_tree(b, generations, radial)
}

/// Sparse tree `t_n = 2ⁿ` with the same radial coupling at every vertex.
pub fn sparse_tree(b: usize, generations: usize, radial: RadialCondition) -> RadialTreeSpec {
    RadialTreeSpec {
        generations: (1..=generations)
            .map(|n| Generation {
                b,
                t: 2f64.powi(n as i32),
                coupling: TreeVertexCoupling::kirchhoff_like(radial, b),
            })
            .collect(),
        theta0: 0.0,
    }
}
