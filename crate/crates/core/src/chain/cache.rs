//! Plain-text basis cache: a short header followed by masses, frequencies and one mode per line.

use std::io::{BufRead, Write};

use ndarray::Array2;

use super::{ChainError, EigenBasis, MassField, MassLaw, Result};

const MAGIC: &str = "# chain-hydro eigenbasis v1";

impl EigenBasis {
    pub fn write_cache(&self, mut w: impl Write) -> Result<()> {
        let mf = self.mass_field();
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "n={}", self.n())?;
        match mf.seed() {
            Some(s) => writeln!(w, "seed={s}")?,
            None => writeln!(w, "seed=-")?,
        }
        writeln!(w, "law={}", mf.law())?;
        write_line(&mut w, "masses", mf.masses().iter())?;
        write_line(&mut w, "frequencies", self.frequencies().iter())?;
        for k in 0..self.n() {
            write_line(&mut w, "mode", self.mode(k).iter())?;
        }
        Ok(())
    }

    /// Reads a cache written by [`EigenBasis::write_cache`]; values round-trip exactly.
    pub fn read_cache(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| ChainError::Cache("unexpected end of file".into()))?
                .map_err(ChainError::from)
        };
        if next()? != MAGIC {
            return Err(ChainError::Cache("missing header".into()));
        }
        let n: usize = header(&next()?, "n")?
            .parse()
            .map_err(|_| ChainError::Cache("bad n".into()))?;
        let seed = match header(&next()?, "seed")? {
            "-" => None,
            s => Some(s.parse().map_err(|_| ChainError::Cache("bad seed".into()))?),
        };
        let law: MassLaw = header(&next()?, "law")?.parse()?;
        let masses = parse_line(&next()?, "masses", n)?;
        let frequencies = parse_line(&next()?, "frequencies", n)?;
        let mut modes = Array2::zeros((n, n));
        for k in 0..n {
            let row = parse_line(&next()?, "mode", n)?;
            modes.row_mut(k).iter_mut().zip(row).for_each(|(a, b)| *a = b);
        }
        let mass_field = match seed {
            Some(s) => {
                let sampled = MassField::sample(law, n, s)?;
                if sampled.masses() != masses.as_slice() {
                    return Err(ChainError::Cache(
                        "stored masses disagree with (law, seed)".into(),
                    ));
                }
                sampled
            }
            None => MassField::from_masses(masses, law)?,
        };
        let basis = EigenBasis::from_modes(mass_field, modes);
        if basis.frequencies() != frequencies.as_slice() {
            return Err(ChainError::Cache(
                "stored frequencies disagree with the stored modes".into(),
            ));
        }
        Ok(basis)
    }
}

fn write_line<'a>(w: &mut impl Write, tag: &str, values: impl Iterator<Item = &'a f64>) -> Result<()> {
    write!(w, "{tag}")?;
    for v in values {
        write!(w, " {v:?}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn header<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| ChainError::Cache(format!("expected `{key}=` line")))
}

fn parse_line(line: &str, tag: &str, n: usize) -> Result<Vec<f64>> {
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some(tag) {
        return Err(ChainError::Cache(format!("expected `{tag}` line")));
    }
    let values = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| ChainError::Cache(format!("bad number `{p}` in `{tag}` line")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(ChainError::Cache(format!(
            "`{tag}` line has {} values, expected {n}",
            values.len()
        )));
    }
    Ok(values)
}
