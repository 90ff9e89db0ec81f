//! Binary container for a [`ReducedBasis`].
//!
//! Layout (little endian):
//!
//! ```text
//! b"WROM"  u8 version  u64 header_len  header (UTF-8 JSON)  block*
//! block := u64 rows  u64 cols  f64[rows*cols] (column-major)
//! ```
//!
//! Blocks, in order: basis `Z`; `A^N_q` for each `q`; `f^N_q` (as `N×1`) for each `q`; then, if
//! the header records estimator constants, `G_ff`, `G_fa`, `G_aa`; then, if it records a
//! spectrum, the POD mode coefficients.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::estimator::{CoercivityData, EstimatorData};
use super::{BuildMeta, GreedyStep, ReducedBasis};
use crate::error::{Result, RomError};
use crate::fem::Theta;
use crate::param::ParameterVector;
use crate::pod::PodSpectrum;

pub const ARCHIVE_MAGIC: &[u8; 4] = b"WROM";
pub const ARCHIVE_VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    n_dof: usize,
    n: usize,
    n_params: usize,
    a_theta: Vec<Theta>,
    f_theta: Vec<Theta>,
    selected: Vec<ParameterVector>,
    history: Vec<GreedyStep>,
    meta: BuildMeta,
    cond_limit: f64,
    coercivity: Option<CoercivityData>,
    spectrum: Option<PodSpectrum>,
}

fn write_block<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    w.write_u64::<LittleEndian>(m.nrows() as u64)?;
    w.write_u64::<LittleEndian>(m.ncols() as u64)?;
    for v in m.as_slice() {
        w.write_f64::<LittleEndian>(*v)?;
    }
    Ok(())
}

fn read_block<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let (rr, cc) = (r.read_u64::<LittleEndian>()? as usize, r.read_u64::<LittleEndian>()? as usize);
    if (rr, cc) != (rows, cols) {
        return Err(RomError::Format(format!("block is {rr}×{cc}, expected {rows}×{cols}")));
    }
    let mut data = vec![0.0; rows * cols];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    Ok(DMatrix::from_vec(rows, cols, data))
}

pub fn write_archive<W: Write>(mut w: W, rb: &ReducedBasis) -> Result<()> {
    let header = Header {
        n_dof: rb.n_dof(),
        n: rb.n(),
        n_params: rb.n_params,
        a_theta: rb.a_theta.clone(),
        f_theta: rb.f_theta.clone(),
        selected: rb.selected.clone(),
        history: rb.history.clone(),
        meta: rb.meta.clone(),
        cond_limit: rb.cond_limit,
        coercivity: rb.estimator.as_ref().map(|e| e.coercivity),
        spectrum: rb.spectrum.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| RomError::Format(e.to_string()))?;
    w.write_all(ARCHIVE_MAGIC)?;
    w.write_u8(ARCHIVE_VERSION)?;
    w.write_u64::<LittleEndian>(json.len() as u64)?;
    w.write_all(&json)?;
    write_block(&mut w, &rb.basis)?;
    for a in &rb.reduced_a {
        write_block(&mut w, a)?;
    }
    for f in &rb.reduced_f {
        write_block(&mut w, &DMatrix::from_column_slice(f.len(), 1, f.as_slice()))?;
    }
    if let Some(e) = &rb.estimator {
        write_block(&mut w, &e.g_ff)?;
        write_block(&mut w, &e.g_fa)?;
        write_block(&mut w, &e.g_aa)?;
    }
    if let Some(s) = &rb.spectrum {
        write_block(&mut w, &s.modes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_archive<R: Read>(mut r: R) -> Result<ReducedBasis> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != ARCHIVE_MAGIC {
        return Err(RomError::Format("not a reduced basis archive".into()));
    }
    let version = r.read_u8()?;
    if version != ARCHIVE_VERSION {
        return Err(RomError::Format(format!("unsupported archive version {version}")));
    }
    let len = r.read_u64::<LittleEndian>()? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let h: Header = serde_json::from_slice(&json).map_err(|e| RomError::Format(e.to_string()))?;
    let (n_dof, n) = (h.n_dof, h.n);
    let basis = read_block(&mut r, n_dof, n)?;
    let reduced_a = (0..h.a_theta.len()).map(|_| read_block(&mut r, n, n)).collect::<Result<Vec<_>>>()?;
    let reduced_f = (0..h.f_theta.len())
        .map(|_| read_block(&mut r, n, 1).map(|m| DVector::from_column_slice(m.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    let (qa, qf) = (h.a_theta.len(), h.f_theta.len());
    let estimator = match h.coercivity {
        Some(coercivity) => Some(EstimatorData {
            coercivity,
            a_theta: h.a_theta.clone(),
            f_theta: h.f_theta.clone(),
            g_ff: read_block(&mut r, qf, qf)?,
            g_fa: read_block(&mut r, qf, qa * n)?,
            g_aa: read_block(&mut r, qa * n, qa * n)?,
        }),
        None => None,
    };
    let spectrum = match h.spectrum {
        Some(mut s) => {
            let nt = s.eigenvalues.len();
            let rows = r.read_u64::<LittleEndian>()? as usize;
            let cols = r.read_u64::<LittleEndian>()? as usize;
            if rows != nt && !(rows == 0 && cols == 0) {
                return Err(RomError::Format(format!("mode block has {rows} rows, expected {nt}")));
            }
            let mut data = vec![0.0; rows * cols];
            r.read_f64_into::<LittleEndian>(&mut data)?;
            s.modes = DMatrix::from_vec(rows, cols, data);
            Some(s)
        }
        None => None,
    };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(RomError::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok(ReducedBasis {
        basis,
        selected: h.selected,
        reduced_a,
        reduced_f,
        a_theta: h.a_theta,
        f_theta: h.f_theta,
        n_params: h.n_params,
        estimator,
        spectrum,
        history: h.history,
        meta: h.meta,
        cond_limit: h.cond_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_affine, Lame, TruthSpace};
    use crate::param::{ParameterDistribution, WeightFunction};
    use crate::pod::pod_build;
    use crate::quadrature::{monte_carlo_rule, McWeighting};
    use crate::rb::{greedy_build, GreedyOptions};

    fn round_trip(rb: &ReducedBasis) -> ReducedBasis {
        let mut buf = Vec::new();
        write_archive(&mut buf, rb).unwrap();
        assert_eq!(&buf[..4], ARCHIVE_MAGIC);
        assert_eq!(buf[4], ARCHIVE_VERSION);
        read_archive(buf.as_slice()).unwrap()
    }

    fn assert_same(a: &ReducedBasis, b: &ReducedBasis) {
        assert_eq!(a.basis, b.basis);
        assert_eq!(a.reduced_a, b.reduced_a);
        assert_eq!(a.reduced_f, b.reduced_f);
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.history, b.history);
        assert_eq!(a.meta, b.meta);
        assert_eq!(a.estimator, b.estimator);
        assert_eq!(a.spectrum, b.spectrum);
        assert_eq!(a.a_theta, b.a_theta);
    }

    #[test]
    fn greedy_and_pod_round_trip() {
        let space = TruthSpace::elasticity(4).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        let dist = ParameterDistribution::benchmark(10.0, 10.0);
        let t = monte_carlo_rule(&dist, 10, 1, McWeighting::Plain).unwrap();
        let opts = GreedyOptions { weight: WeightFunction::SqrtRho, eps_tol: 1e-30, n_max: 3, ..Default::default() };
        let g = greedy_build(&ops, &space, &t, &dist, &opts).unwrap().rb;
        assert_same(&g, &round_trip(&g));
        let p = pod_build(&ops, &space, &t, 1e-8, 4).unwrap();
        assert_same(&p, &round_trip(&p));
    }

    #[test]
    fn corrupt_input_rejected() {
        assert!(read_archive(&b"NOPE\x01"[..]).is_err());
        assert!(read_archive(&b"WROM\x07"[..]).is_err());
        assert!(read_archive(&b"WROM\x01\x00"[..]).is_err());
    }
}
