//! The shifted elliptic form `a_σ(u, v) = (b∇u, ∇v) + ((V + σ)u, v)`.

use crate::coefficient::CoefficientField;
use crate::error::Result;
use crate::fem::{self, Dofs, Weight};
use crate::linalg::lanczos_smallest_ritz;
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// Grid resolution used to sample `V` when choosing the shift.
const SHIFT_SAMPLES: usize = 256;

/// How the coercivity shift `σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    /// `σ = 0` if the sampled `V` is nonnegative, otherwise `1 − min V`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct BilinearFormSpec {
    b: CoefficientField,
    v: CoefficientField,
    sigma: f64,
}

impl BilinearFormSpec {
    pub fn new(b: CoefficientField, v: CoefficientField, shift: Shift) -> Self {
        let sigma = match shift {
            Shift::Auto => auto_shift(&v),
            Shift::Fixed(s) => s,
        };
        BilinearFormSpec { b, v, sigma }
    }

    pub fn b(&self) -> &CoefficientField {
        &self.b
    }

    pub fn v(&self) -> &CoefficientField {
        &self.v
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Local `a_σ` matrix on element `e`, using the same rules as
    /// [`Self::assemble`].
    pub fn local_matrix(&self, mesh: &Mesh, e: usize) -> Result<[[f64; 3]; 3]> {
        let k = fem::local_stiffness(mesh, e, &self.b)?;
        let mv = fem::local_mass(mesh, e, Weight::Field(&self.v));
        let m = fem::local_mass(mesh, e, Weight::Unit);
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for c in 0..3 {
                out[a][c] = k[a][c] + mv[a][c] + self.sigma * m[a][c];
            }
        }
        Ok(out)
    }

    /// Assembles all pieces of the form on `mesh` (all nodes).
    pub fn assemble(&self, mesh: &Mesh) -> Result<AssembledForm> {
        let stiffness = fem::assemble_stiffness(mesh, &self.b)?;
        let mass_v = fem::assemble_mass(mesh, Weight::Field(&self.v))?;
        let mass = fem::assemble_mass(mesh, Weight::Unit)?;
        let n = mesh.n_nodes();
        let a = CsrMatrix::combine_real(n, &[(1.0, &stiffness), (1.0, &mass_v), (self.sigma, &mass)]);
        Ok(AssembledForm {
            stiffness,
            mass_v,
            mass,
            a,
            sigma: self.sigma,
        })
    }
}

/// The shift rule of [`Shift::Auto`].
pub fn auto_shift(v: &CoefficientField) -> f64 {
    let (min_v, _) = v.sample_range(SHIFT_SAMPLES);
    if min_v >= 0.0 {
        0.0
    } else {
        1.0 - min_v
    }
}

/// Matrices of a form on all nodes of one mesh.
#[derive(Debug, Clone)]
pub struct AssembledForm {
    pub stiffness: CsrMatrix<f64>,
    pub mass_v: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    /// `stiffness + mass_v + σ mass`.
    pub a: CsrMatrix<f64>,
    pub sigma: f64,
}

impl AssembledForm {
    /// Smallest Ritz value of the Dirichlet-reduced `a_σ` over 20 Lanczos
    /// probes; positive when the shift makes the form coercive.
    pub fn smallest_ritz_value(&self, dofs: &Dofs, seed: u64) -> Result<f64> {
        let a = dofs.restrict_matrix(&self.a);
        lanczos_smallest_ritz(&a, 20, 60, seed)
    }
}
