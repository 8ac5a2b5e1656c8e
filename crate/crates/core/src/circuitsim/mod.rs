//! Statevector simulation of the block encodings and amplitude amplification.
//!
//! Registers are laid out ancillas first: index = ancilla * D + system.

mod amplify;
mod lcu;
mod phases;
mod qsp;

use crate::linalg::CVec;

pub use amplify::{amplitude_amplification, optimal_rounds, AmplificationReport};
pub use lcu::{ancilla_qubits, prepare_unitary, simulate_lcu, simulate_lcu_coeffs};
pub use phases::{solve_phase_set, solve_qsp_phases, PhaseSolution, QspPhaseSet, TargetKind, RESIDUAL_GATE};
pub use qsp::{chebyshev_split, qsp_matrix, simulate_qsp, split_coeffs, ChebyshevSplit};

/// Output of a block-encoding circuit applied to |0>|psi>.
#[derive(Clone, Debug)]
pub struct BlockEncodingResult {
    /// ancilla-|0> component, equal to (X / normalization)|psi>
    pub top_block: CVec,
    /// norm of everything outside the ancilla-|0> block
    pub orth_norm: f64,
    pub ancilla_count: usize,
    pub normalization: f64,
    /// full output state on ancillas and system
    pub output: CVec,
}

impl BlockEncodingResult {
    pub(crate) fn from_output(output: CVec, system_dim: usize, ancilla_count: usize, normalization: f64) -> Self {
        let top_block = output.rows(0, system_dim).into_owned();
        let rest = output.rows(system_dim, output.len() - system_dim).norm();
        BlockEncodingResult {
            top_block,
            orth_norm: rest,
            ancilla_count,
            normalization,
            output,
        }
    }

    pub fn probability_defect(&self) -> f64 {
        (self.top_block.norm_squared() + self.orth_norm * self.orth_norm - self.output.norm_squared()).abs()
    }
}
