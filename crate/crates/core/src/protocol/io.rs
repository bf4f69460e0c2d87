//! Plain-text artifacts of a run.
//!
//! * trajectory CSV: header `k,energy,ergotropy,purity`; the last two columns
//!   are empty on rows that were not sampled.
//! * populations CSV: header `n,prob`.
//! * state JSON: `{"dim": N, "entries": [[re, im], ...]}`, row-major.
//!
//! CSV floats carry 17 significant digits.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::{CMatrix, DensityMatrix};
use crate::metrics::PopulationVector;
use crate::protocol::Trajectory;
use crate::scalar::{cplx, Real};

/// Format with 17 significant digits.
pub fn fmt_float<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

pub fn write_trajectory_csv<T: Real, W: Write>(traj: &Trajectory<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "k,energy,ergotropy,purity")?;
    let mut samples = traj
        .sampled_k
        .iter()
        .zip(traj.ergotropies.iter().zip(&traj.purities))
        .peekable();
    for (k, &e) in traj.energies.iter().enumerate() {
        match samples.peek() {
            Some(&(&sk, (&w, &p))) if sk == k => {
                writeln!(out, "{k},{},{},{}", fmt_float(e), fmt_float(w), fmt_float(p))?;
                samples.next();
            }
            _ => writeln!(out, "{k},{},,", fmt_float(e))?,
        }
    }
    Ok(())
}

pub fn write_populations_csv<T: Real, W: Write>(pops: &PopulationVector<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "n,prob")?;
    for (n, &p) in pops.probs.iter().enumerate() {
        writeln!(out, "{n},{}", fmt_float(p))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl StateDump {
    pub fn from_state<T: Real>(rho: &DensityMatrix<T>) -> Self {
        Self {
            dim: rho.dim(),
            entries: rho
                .entries()
                .as_slice()
                .iter()
                .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
                .collect(),
        }
    }

    /// Back to a validated density matrix.
    pub fn to_state<T: Real>(&self) -> Result<DensityMatrix<T>> {
        if self.entries.len() != self.dim * self.dim {
            return Err(MaserError::DimensionMismatch {
                expected: self.dim * self.dim,
                found: self.entries.len(),
            });
        }
        let data = self
            .entries
            .iter()
            .map(|&[re, im]| cplx(T::lit(re), T::lit(im)))
            .collect();
        DensityMatrix::new(CMatrix::from_vec(self.dim, data))
    }
}

pub fn write_state_json<T: Real, W: Write>(rho: &DensityMatrix<T>, out: W) -> io::Result<()> {
    serde_json::to_writer(out, &StateDump::from_state(rho)).map_err(io::Error::other)
}

pub fn read_state_json<T: Real>(text: &str) -> Result<DensityMatrix<T>> {
    let dump: StateDump =
        serde_json::from_str(text).map_err(|e| MaserError::Invalid(format!("state JSON: {e}")))?;
    dump.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jc::coupling_value;
    use crate::metrics::populations;
    use crate::protocol::{run_protocol, BatchSpec, ProtocolSpec};

    fn short_run() -> Trajectory<f64> {
        let spec = ProtocolSpec::new(coupling_value(1, 4, 0.0).unwrap(), 16, vec![BatchSpec::new(5, 0.8, 0.4)])
            .with_stride(2);
        run_protocol(&spec).unwrap()
    }

    #[test]
    fn trajectory_csv_layout() {
        let t = short_run();
        let mut buf = Vec::new();
        write_trajectory_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,energy,ergotropy,purity");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
        assert!(lines[2].starts_with("1,") && lines[2].ends_with(",,"));
        assert_eq!(lines[3].split(',').filter(|s| !s.is_empty()).count(), 4);
        assert_eq!(lines[6].split(',').filter(|s| !s.is_empty()).count(), 4);
    }

    #[test]
    fn state_json_round_trip() {
        let t = short_run();
        let mut buf = Vec::new();
        write_state_json(&t.final_state, &mut buf).unwrap();
        let back: DensityMatrix<f64> = read_state_json(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, t.final_state);
    }

    #[test]
    fn populations_csv_layout() {
        let mut buf = Vec::new();
        write_populations_csv(&populations(&DensityMatrix::<f64>::fock(3, 2)), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,prob\n0,0.0000000000000000e0\n1,0.0000000000000000e0\n2,1.0000000000000000e0\n"
        );
    }
}
