//! Run configuration and its flat `key=value` file form.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use dynkde::{KdeConfig, KernelKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel: KernelKind,
    /// `None` lets `bench` and `verify` tune it; `build` falls back to 1.
    pub bandwidth: Option<f64>,
    pub epsilon: f64,
    pub f_kde: f64,
    pub seed: u64,
    pub constants: KdeConfig,
    /// Failure probability used to size robust ensembles.
    pub delta: f64,
    /// Density floor for robust ensembles; `None` means `f_kde / 4`.
    pub tau: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Gaussian,
            bandwidth: None,
            epsilon: 0.25,
            f_kde: 0.1,
            seed: 0,
            constants: KdeConfig::default(),
            delta: 0.05,
            tau: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Data(format!("config line {line}: bad value '{value}' for {key}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Starts from the defaults and applies every `key = value` line. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse_str(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Data(format!("config line {line}: expected key=value")));
            };
            let (key, value) = (key.trim(), value.trim());
            let c = &mut cfg.constants;
            match key {
                "kernel" => cfg.kernel = parse(key, value, line)?,
                "bandwidth" => cfg.bandwidth = Some(parse(key, value, line)?),
                "epsilon" => cfg.epsilon = parse(key, value, line)?,
                "f_kde" => cfg.f_kde = parse(key, value, line)?,
                "seed" => cfg.seed = parse(key, value, line)?,
                "delta" => cfg.delta = parse(key, value, line)?,
                "tau" => cfg.tau = Some(parse(key, value, line)?),
                "group_constant" => c.group_constant = parse(key, value, line)?,
                "repetition_constant" => c.repetition_constant = parse(key, value, line)?,
                "slack" => c.slack = parse(key, value, line)?,
                "bucket_width_factor" => c.bucket_width_factor = parse(key, value, line)?,
                "max_levels" => c.max_levels = parse(key, value, line)?,
                "max_repetitions" => c.max_repetitions = parse(key, value, line)?,
                "median_blocks" => c.median_blocks = parse(key, value, line)?,
                "boost_constant" => c.boost_constant = parse(key, value, line)?,
                _ => return Err(CliError::Data(format!("config line {line}: unknown key '{key}'"))),
            }
        }
        Ok(cfg)
    }

    /// File form; floats are written in shortest round-trip notation so that
    /// parsing the output gives back an equal config.
    pub fn to_file_string(&self) -> String {
        let c = &self.constants;
        let mut s = String::new();
        let _ = writeln!(s, "kernel = {}", self.kernel);
        if let Some(bw) = self.bandwidth {
            let _ = writeln!(s, "bandwidth = {bw:?}");
        }
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "f_kde = {:?}", self.f_kde);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "delta = {:?}", self.delta);
        if let Some(tau) = self.tau {
            let _ = writeln!(s, "tau = {tau:?}");
        }
        let _ = writeln!(s, "group_constant = {:?}", c.group_constant);
        let _ = writeln!(s, "repetition_constant = {:?}", c.repetition_constant);
        let _ = writeln!(s, "slack = {:?}", c.slack);
        let _ = writeln!(s, "bucket_width_factor = {:?}", c.bucket_width_factor);
        let _ = writeln!(s, "max_levels = {}", c.max_levels);
        let _ = writeln!(s, "max_repetitions = {}", c.max_repetitions);
        let _ = writeln!(s, "median_blocks = {}", c.median_blocks);
        let _ = writeln!(s, "boost_constant = {:?}", c.boost_constant);
        s
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(bw) = self.bandwidth {
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(CliError::Data(format!("bandwidth must be positive, got {bw}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Data(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.f_kde > 0.0 && self.f_kde < 1.0) {
            return Err(CliError::Data(format!("f_kde must lie in (0, 1), got {}", self.f_kde)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Data(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(CliError::Data(format!("tau must lie in (0, 1], got {tau}")));
            }
        }
        self.constants.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_form_round_trips() {
        let mut cfg = RunConfig {
            kernel: KernelKind::Exponential,
            bandwidth: Some(0.1 + 0.2),
            epsilon: 1.0 / 3.0,
            f_kde: 0.07,
            seed: u64::MAX,
            tau: Some(0.015),
            ..Default::default()
        };
        cfg.constants.group_constant = 2.5e-3;
        cfg.constants.median_blocks = 7;
        assert_eq!(RunConfig::parse_str(&cfg.to_file_string()).unwrap(), cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse_str(&d.to_file_string()).unwrap(), d);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = RunConfig::parse_str("# c\nepsilon = 0.2\nf_kde = x\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(RunConfig::parse_str("nope = 1").is_err());
        assert!(RunConfig::parse_str("epsilon").is_err());
        assert!(RunConfig::parse_str("kernel = laplace").unwrap().kernel == KernelKind::Exponential);
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig { epsilon: 1.0, ..Default::default() }.validate().is_err());
        assert!(RunConfig { bandwidth: Some(0.0), ..Default::default() }.validate().is_err());
        assert!(RunConfig::parse_str("slack = 2").unwrap().validate().is_err());
    }
}
