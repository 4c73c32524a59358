use std::io::Write;

use crate::error::{Error, Result};
use crate::functionals::TestFunction;
use crate::scalar::Scalar;

/// Finite signed measure on `R_+`: atoms `(location, weight)`, weights of
/// either sign. `mu_Sigma` itself is the unit-weight measure on the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSpectralMeasure<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> SignedSpectralMeasure<T> {
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        if let Some(&(x, w)) = atoms
            .iter()
            .find(|&&(x, w)| !x.is_finite() || x < T::zero() || !w.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "atom ({x}, {w}) outside R_+ or non-finite"
            )));
        }
        Ok(Self { atoms })
    }

    /// Spectral measure of a matrix with the given eigenvalues.
    pub fn from_eigenvalues(eigenvalues: &[T]) -> Result<Self> {
        Self::new(eigenvalues.iter().map(|&x| (x, T::one())).collect())
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// `int f d mu = sum_k w_k f(x_k)`.
    pub fn integrate(&self, f: &TestFunction) -> T {
        self.atoms.iter().map(|&(x, w)| w * f.value(x)).sum()
    }

    /// Atoms ordered by location, ties by weight.
    pub fn sorted_atoms(&self) -> Vec<(T, T)> {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite")
                .then(a.1.partial_cmp(&b.1).expect("finite"))
        });
        atoms
    }

    /// `location,weight` rows in [`Self::sorted_atoms`] order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "location,weight")?;
        for (x, w) in self.sorted_atoms() {
            writeln!(out, "{x},{w}")?;
        }
        Ok(())
    }
}
