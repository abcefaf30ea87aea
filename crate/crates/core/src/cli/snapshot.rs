//! ASCII field snapshots.
//!
//! A field is a header line `q_min q_max p_min p_max n_q n_p t` followed by
//! one value per node, row-major. Hybrid snapshots repeat this per stored
//! block with the extra header tokens `block i j re|im` (1-based, `i ≤ j`).

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::HybridState;
use crate::phase_space::PhaseGrid;

fn header(grid: &PhaseGrid, t: f64) -> String {
    format!(
        "{} {} {} {} {} {} {}",
        grid.q_min(),
        grid.q_max(),
        grid.p_min(),
        grid.p_max(),
        grid.n_q(),
        grid.n_p(),
        t
    )
}

pub fn write_field<W: Write>(mut w: W, grid: &PhaseGrid, t: f64, values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "{}", header(grid, t))?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn write_hybrid<W: Write>(mut w: W, state: &HybridState, t: f64) -> std::io::Result<()> {
    let h = header(state.grid(), t);
    let d = state.dim();
    for i in 0..d {
        for j in i..d {
            for part in ["re", "im"] {
                writeln!(w, "{h} block {} {} {part}", i + 1, j + 1)?;
                for z in state.block(i, j) {
                    writeln!(w, "{}", if part == "re" { z.re } else { z.im })?;
                }
            }
        }
    }
    Ok(())
}

/// One section of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSection {
    pub grid: PhaseGrid,
    pub t: f64,
    /// `(i, j, is_imaginary)`, 0-based.
    pub block: Option<(usize, usize, bool)>,
    pub values: Vec<f64>,
}

pub fn read_sections<R: BufRead>(r: R) -> Result<Vec<FieldSection>> {
    let bad = |m: String| Error::Snapshot(m);
    let mut lines = r.lines().enumerate();
    let mut out = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 7 && tok.len() != 11 {
            return Err(bad(format!("line {}: expected a header, got {line:?}", ln + 1)));
        }
        let num = |k: usize| -> Result<f64> {
            tok[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad number {:?}", ln + 1, tok[k])))
        };
        let count = |k: usize| -> Result<usize> {
            tok[k]
                .parse::<usize>()
                .map_err(|_| bad(format!("line {}: bad count {:?}", ln + 1, tok[k])))
        };
        let grid = PhaseGrid::new(num(0)?, num(1)?, num(2)?, num(3)?, count(4)?, count(5)?)?;
        let t = num(6)?;
        let block = if tok.len() == 11 {
            if tok[7] != "block" {
                return Err(bad(format!("line {}: expected `block`, got {:?}", ln + 1, tok[7])));
            }
            let (i, j) = (count(8)?, count(9)?);
            if i == 0 || j == 0 {
                return Err(bad(format!("line {}: block indices are 1-based", ln + 1)));
            }
            let im = match tok[10] {
                "re" => false,
                "im" => true,
                other => return Err(bad(format!("line {}: expected re|im, got {other:?}", ln + 1))),
            };
            Some((i - 1, j - 1, im))
        } else {
            None
        };
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let (vl, v) = lines
                .next()
                .ok_or_else(|| bad(format!("section at line {} ends early", ln + 1)))?;
            let v = v.map_err(|e| bad(e.to_string()))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("line {}: bad value {v:?}", vl + 1)))?,
            );
        }
        out.push(FieldSection { grid, t, block, values });
    }
    Ok(out)
}

/// Reassembles a hybrid state from the sections of [`write_hybrid`].
pub fn read_hybrid<R: BufRead>(r: R, hbar: f64) -> Result<(HybridState, f64)> {
    let sections = read_sections(r)?;
    let first = sections.first().ok_or_else(|| Error::Snapshot("empty file".into()))?;
    let (grid, t) = (first.grid, first.t);
    let d = sections
        .iter()
        .filter_map(|s| s.block.map(|(i, j, _)| i.max(j) + 1))
        .max()
        .ok_or_else(|| Error::Snapshot("no block sections".into()))?;
    let mut blocks = vec![vec![Complex64::default(); grid.len()]; d * d];
    let mut seen = vec![[false; 2]; d * d];
    for s in &sections {
        if s.grid != grid || s.t != t {
            return Err(Error::Snapshot("sections disagree on grid or time".into()));
        }
        let Some((i, j, im)) = s.block else {
            return Err(Error::Snapshot("plain field section in a hybrid snapshot".into()));
        };
        if i > j {
            return Err(Error::Snapshot(format!("block {} {} below the diagonal", i + 1, j + 1)));
        }
        seen[i * d + j][im as usize] = true;
        for (z, v) in blocks[i * d + j].iter_mut().zip(&s.values) {
            if im {
                z.im = *v;
            } else {
                z.re = *v;
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            if seen[i * d + j] != [true, true] {
                return Err(Error::Snapshot(format!("block {} {} incomplete", i + 1, j + 1)));
            }
            if i != j {
                blocks[j * d + i] = blocks[i * d + j].iter().map(|z| z.conj()).collect();
            }
        }
    }
    Ok((HybridState::new(grid, d, hbar, blocks)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::product_state;
    use crate::phase_space::gaussian_state;
    use crate::quantum::pure_from_amplitudes;

    #[test]
    fn hybrid_round_trip_is_exact() {
        let g = PhaseGrid::new(-2.0, 2.0, -1.0, 1.0, 32, 16).unwrap();
        let rho = gaussian_state(&g, 0.1, 0.0, 0.5, 0.25).unwrap();
        let amps = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let s = product_state(&pure_from_amplitudes(&amps).unwrap(), &rho, 1.0).unwrap();
        let mut buf = Vec::new();
        write_hybrid(&mut buf, &s, 0.125).unwrap();
        let (back, t) = read_hybrid(buf.as_slice(), 1.0).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = PhaseGrid::new(-2.0, 2.0, -1.0, 1.0, 8, 8).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &g, 0.0, &vec![1.0; 64]).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(matches!(read_sections(buf.as_slice()), Err(Error::Snapshot(_))));
        let text = "0 1 0 1 8 8 0 blok 1 1 re\n";
        assert!(read_sections(text.as_bytes()).is_err());
    }
}
