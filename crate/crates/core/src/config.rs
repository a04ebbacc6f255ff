//! Run configuration read from `key=value` text. Every key has a default and
//! unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mpe::{DEFAULT_CHANNELS, DEFAULT_D_MAX};
use crate::priors::{TrainConfig, DEFAULT_FUSE_THRESHOLD};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub width_fraction: f64,
    /// LKA receptive field.
    pub k: usize,
    /// LKA dilation.
    pub d: usize,
    pub seed: u64,
    pub ssu_epochs: usize,
    pub ssu_step: f64,
    pub enms_threshold: f64,
    pub d_max: usize,
    pub mpe_d: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            width_fraction: 1.0,
            k: 21,
            d: 3,
            seed: 0,
            ssu_epochs: TrainConfig::default().epochs,
            ssu_step: TrainConfig::default().step,
            enms_threshold: DEFAULT_FUSE_THRESHOLD,
            d_max: DEFAULT_D_MAX,
            mpe_d: DEFAULT_CHANNELS,
        }
    }
}

pub const KEYS: [&str; 9] = [
    "width_fraction",
    "K",
    "d",
    "seed",
    "ssu.epochs",
    "ssu.step",
    "enms.threshold",
    "d_max",
    "mpe.d",
];

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Format(format!("config line {line}: bad value {raw:?} for {key}")))
}

impl Config {
    /// Blank lines and `#` comments are skipped; later lines override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {no}: expected key=value")))?;
            let (key, v) = (key.trim(), v.trim());
            match key {
                "width_fraction" => c.width_fraction = value(no, key, v)?,
                "K" => c.k = value(no, key, v)?,
                "d" => c.d = value(no, key, v)?,
                "seed" => c.seed = value(no, key, v)?,
                "ssu.epochs" => c.ssu_epochs = value(no, key, v)?,
                "ssu.step" => c.ssu_step = value(no, key, v)?,
                "enms.threshold" => c.enms_threshold = value(no, key, v)?,
                "d_max" => c.d_max = value(no, key, v)?,
                "mpe.d" => c.mpe_d = value(no, key, v)?,
                _ => return Err(Error::Format(format!("config line {no}: unknown key {key:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| Err(Error::invalid("config", reason.to_string()));
        if !(self.width_fraction > 0.0 && self.width_fraction <= 1.0) {
            return fail("width_fraction must lie in (0, 1]");
        }
        if self.k == 0 || self.d == 0 {
            return fail("K and d must be positive");
        }
        if !(self.ssu_step >= 0.0 && self.ssu_step.is_finite()) {
            return fail("ssu.step must be a non-negative number");
        }
        if !(0.0..=1.0).contains(&self.enms_threshold) {
            return fail("enms.threshold must lie in [0, 1]");
        }
        if self.d_max == 0 {
            return fail("d_max must be positive");
        }
        if self.mpe_d == 0 || self.mpe_d % 2 != 0 {
            return fail("mpe.d must be a positive even number");
        }
        Ok(())
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width_fraction={}", self.width_fraction)?;
        writeln!(f, "K={}", self.k)?;
        writeln!(f, "d={}", self.d)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "ssu.epochs={}", self.ssu_epochs)?;
        writeln!(f, "ssu.step={}", self.ssu_step)?;
        writeln!(f, "enms.threshold={}", self.enms_threshold)?;
        writeln!(f, "d_max={}", self.d_max)?;
        writeln!(f, "mpe.d={}", self.mpe_d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_the_fixed_constants() {
        let c = Config::default();
        assert_eq!((c.k, c.d, c.d_max, c.mpe_d), (21, 3, 128, 64));
        assert_eq!(c.enms_threshold, 0.25);
    }

    #[test]
    fn display_round_trips() {
        let c = Config {
            seed: 7,
            ssu_step: 0.125,
            ..Config::default()
        };
        assert_eq!(Config::parse(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn every_key_parses() {
        let text = "# run\nwidth_fraction = 0.5\nK=28\nd=3\nseed=9\nssu.epochs=2\nssu.step=0.1\nenms.threshold=0.3\nd_max=64\nmpe.d=32\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.width_fraction, 0.5);
        assert_eq!((c.k, c.seed, c.ssu_epochs, c.d_max, c.mpe_d), (28, 9, 2, 64, 32));
        assert_eq!(KEYS.len(), text.lines().filter(|l| l.contains('=')).count());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::parse("ssu.epoch=3").unwrap_err().to_string().contains("unknown key"));
        assert!(Config::parse("K=big").is_err());
        assert!(Config::parse("mpe.d=7").is_err());
        assert!(Config::parse("no equals sign").is_err());
    }
}
