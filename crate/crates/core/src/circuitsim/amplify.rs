use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub rounds_used: usize,
    pub initial_amplitude: f64,
    /// norm of the good component after the last round
    pub final_overlap: f64,
    /// 1 / initial amplitude, the measured counterpart of the round estimate
    pub expected_rounds: f64,
}

/// Round count maximizing sin^2((2k+1) asin a), capped at `max_rounds`.
pub fn optimal_rounds(a: f64, max_rounds: usize) -> usize {
    let theta = a.clamp(0.0, 1.0).asin();
    if theta <= 0.0 {
        return 0;
    }
    let k0 = (std::f64::consts::PI / (4.0 * theta) - 0.5).floor().max(0.0) as usize;
    let success = |k: usize| ((2 * k + 1) as f64 * theta).sin().powi(2);
    let (lo, hi) = (k0.min(max_rounds), (k0 + 1).min(max_rounds));
    if success(hi) > success(lo) + 1e-15 {
        hi
    } else {
        lo
    }
}

/// Amplifies the component of `xi` on its first `good_dim` entries.
///
/// Each round applies -(1 - 2|xi><xi|)(1 - 2P). Returns the normalized good
/// component after the chosen number of rounds.
pub fn amplitude_amplification(xi: &CVec, good_dim: usize, max_rounds: usize) -> Result<(CVec, AmplificationReport)> {
    if good_dim == 0 || good_dim > xi.len() {
        return Err(Error::InvalidArgument(format!("good block size {good_dim} out of range")));
    }
    let xi_norm = xi.norm();
    if (xi_norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("prepared state has norm {xi_norm}")));
    }
    let a = xi.rows(0, good_dim).norm();
    if a == 0.0 {
        return Err(Error::NoSignal);
    }
    let k = optimal_rounds(a, max_rounds);
    let mut state = xi.clone();
    for _ in 0..k {
        for z in state.rows_mut(0, good_dim).iter_mut() {
            *z = -*z;
        }
        let ov = xi.dotc(&state);
        state.axpy(C64::new(-2.0, 0.0) * ov, xi, C64::new(1.0, 0.0));
        state.neg_mut();
    }
    let good = state.rows(0, good_dim).into_owned();
    let overlap = good.norm();
    if overlap == 0.0 {
        return Err(Error::NoSignal);
    }
    let report = AmplificationReport {
        rounds_used: k,
        initial_amplitude: a,
        final_overlap: overlap,
        expected_rounds: 1.0 / a,
    };
    Ok((good / C64::new(overlap, 0.0), report))
}
