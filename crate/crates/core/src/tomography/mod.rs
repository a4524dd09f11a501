//! Homodyne photocurrent statistics and Wigner tomography of the emitted
//! right-moving light.
//!
//! The chain is: counting-field deformation of the generator, its leading
//! eigenvalue θ(s) per quadrature angle, Legendre transform to the
//! stationary marginals, and inverse Radon transform to W(x, p).

pub mod deform;
pub mod legendre;
pub mod radon;
pub mod scgf;
pub mod sinogram;

pub use deform::{deform, right_jump_operator, DeformationTemplate, DeformedGenerator, JumpOperator};
pub use legendre::{legendre, rate_function, Marginal, RateFunction};
pub use radon::{forward_project, invert_radon, negativity, relative_l2, FbpOptions, WignerResult};
pub use scgf::{cold_start, scgf, EigenOptions, LeadingEigen, ScgfCurve};
pub use sinogram::{gaussian_sinogram, sinogram, uniform_angles, Consistency, Sinogram, TomographyGrids};

use crate::error::Result;
use crate::lindblad::Liouvillian;

/// Sinogram and reconstructed Wigner function of one stationary state.
#[derive(Debug, Clone)]
pub struct Tomogram {
    pub sinogram: Sinogram,
    pub wigner: WignerResult,
}

pub fn reconstruct(
    l: &Liouvillian,
    jump: &JumpOperator,
    grids: &TomographyGrids,
    eigen: &EigenOptions,
    fbp: &FbpOptions,
) -> Result<Tomogram> {
    let template = DeformationTemplate::new(l, jump)?;
    let sinogram = sinogram(&template, grids, eigen)?;
    let unconverged: usize = sinogram
        .curves
        .iter()
        .map(|c| c.converged.iter().filter(|&&ok| !ok).count())
        .sum();
    if unconverged > 0 {
        log::warn!("{unconverged} SCGF samples did not converge");
    }
    let wigner = invert_radon(&sinogram, fbp)?;
    Ok(Tomogram { sinogram, wigner })
}
