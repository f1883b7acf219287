//! Flat `key = value` model files.
//!
//! ```text
//! # t-V chain
//! L = 8
//! M = 4
//! V = 2.0
//! boundary = open
//! ```

use std::collections::BTreeMap;

use crate::edengine::{Boundary, LatticeModel};
use crate::error::{Error, Result};

const KEYS: [&str; 10] = ["L", "M", "t", "V", "mu", "boundary", "cut", "seed", "restarts", "tol"];

/// Parsed but not yet validated settings; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSettings {
    pub length: Option<usize>,
    pub filling: Option<usize>,
    pub hopping: Option<f64>,
    pub interaction: Option<f64>,
    pub chemical_potential: Option<f64>,
    pub boundary: Option<Boundary>,
    pub cut: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub tol: Option<f64>,
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value '{value}' for {key}"),
    })
}

impl ModelSettings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        let mut s = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key = value, got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key '{key}'"),
                });
            }
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(Error::Parse {
                    line,
                    msg: format!("{key} already set on line {first}"),
                });
            }
            match key {
                "L" => s.length = Some(parse_value(line, key, value)?),
                "M" => s.filling = Some(parse_value(line, key, value)?),
                "t" => s.hopping = Some(parse_value(line, key, value)?),
                "V" => s.interaction = Some(parse_value(line, key, value)?),
                "mu" => s.chemical_potential = Some(parse_value(line, key, value)?),
                "boundary" => {
                    s.boundary = Some(value.parse().map_err(|e: Error| Error::Parse { line, msg: e.to_string() })?)
                }
                "cut" => s.cut = Some(parse_value(line, key, value)?),
                "seed" => s.seed = Some(parse_value(line, key, value)?),
                "restarts" => s.restarts = Some(parse_value(line, key, value)?),
                "tol" => s.tol = Some(parse_value(line, key, value)?),
                _ => unreachable!("key list checked above"),
            }
        }
        Ok(s)
    }

    /// Values set in `over` win.
    pub fn overridden_by(&self, over: &ModelSettings) -> ModelSettings {
        ModelSettings {
            length: over.length.or(self.length),
            filling: over.filling.or(self.filling),
            hopping: over.hopping.or(self.hopping),
            interaction: over.interaction.or(self.interaction),
            chemical_potential: over.chemical_potential.or(self.chemical_potential),
            boundary: over.boundary.or(self.boundary),
            cut: over.cut.or(self.cut),
            seed: over.seed.or(self.seed),
            restarts: over.restarts.or(self.restarts),
            tol: over.tol.or(self.tol),
        }
    }

    /// Defaults: `L = 8`, half filling, `t = 1`, `V = mu = 0`, open, `cut = L / 2`.
    pub fn model(&self) -> Result<(LatticeModel, usize)> {
        let length = self.length.unwrap_or(8);
        let model = LatticeModel {
            length,
            filling: self.filling.unwrap_or(length / 2),
            hopping: self.hopping.unwrap_or(1.0),
            interaction: self.interaction.unwrap_or(0.0),
            chemical_potential: self.chemical_potential.unwrap_or(0.0),
            boundary: self.boundary.unwrap_or(Boundary::Open),
        };
        model.validate()?;
        let cut = self.cut.unwrap_or(length / 2);
        if cut == 0 || cut >= length {
            return Err(Error::InvalidArgument(format!("cut must lie in 1..{length}, got {cut}")));
        }
        Ok((model, cut))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let text = "# chain\nL = 6\nM=3\nV = 2.5  # strong\nboundary = periodic\n\n";
        let s = ModelSettings::parse(text).unwrap();
        assert_eq!(s.length, Some(6));
        assert_eq!(s.boundary, Some(Boundary::Periodic));
        let over = ModelSettings {
            interaction: Some(0.5),
            ..Default::default()
        };
        let (m, cut) = s.overridden_by(&over).model().unwrap();
        assert_eq!((m.length, m.filling, m.interaction, cut), (6, 3, 0.5, 3));
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(
            ModelSettings::parse("L = 4\nV = x\n"),
            Err(Error::Parse {
                line: 2,
                msg: "invalid value 'x' for V".into()
            })
        );
        assert!(matches!(ModelSettings::parse("W = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ModelSettings::parse("L = 4\nL = 5"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ModelSettings::parse("L 4"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn validates_model() {
        let s = ModelSettings {
            length: Some(4),
            cut: Some(4),
            ..Default::default()
        };
        assert!(s.model().is_err());
        assert_eq!(ModelSettings::default().model().unwrap().1, 4);
    }
}
