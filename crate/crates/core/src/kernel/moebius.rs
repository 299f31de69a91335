//! The compression semigroup of the Moebius space.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupMembership {
    pub member: bool,
    pub alpha: f64,
    pub beta: C64,
    pub gamma: f64,
}

/// `alpha = |A11|^2 - |A21|^2`, `beta = conj(A11) A12 - conj(A21) A22`,
/// `gamma = |A22|^2 - |A12|^2`; member iff `alpha > 0`, `|beta| <= alpha`
/// and `gamma <= alpha - 2|beta|`.
pub fn semigroup_member(a: &CMat) -> SemigroupMembership {
    assert!(a.nrows() == 2 && a.ncols() == 2, "Moebius maps are 2x2");
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let alpha = a11.norm_sqr() - a21.norm_sqr();
    let beta = a11.conj() * a12 - a21.conj() * a22;
    let gamma = a22.norm_sqr() - a12.norm_sqr();
    SemigroupMembership {
        member: alpha > 0.0 && beta.norm() <= alpha && gamma <= alpha - 2.0 * beta.norm(),
        alpha,
        beta,
        gamma,
    }
}
