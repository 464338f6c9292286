//! `key = value` run configuration, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected 'key = value'", idx + 1)));
            };
            let key = key.trim().replace('_', "-");
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key '{key}'", idx + 1)));
            }
        }
        Ok(Self { values })
    }

    /// The flag value if given, else the parsed config entry.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?.ok_or_else(|| CliError::Usage(format!("missing required value --{key}")))
    }
}

/// Complex number as `re,im` or in `num_complex` notation (`1+2i`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArg(pub Complex64);

impl FromStr for ComplexArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((re, im)) = s.split_once(',') {
            let re: f64 = re.trim().parse().map_err(|_| format!("bad real part in '{s}'"))?;
            let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part in '{s}'"))?;
            return Ok(Self(Complex64::new(re, im)));
        }
        s.parse::<Complex64>().map(Self).map_err(|_| format!("cannot parse complex number '{s}'"))
    }
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ListArg(pub Vec<f64>);

impl FromStr for ListArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

/// Uniform grid `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected 'lo:hi:n', got '{s}'"));
        };
        let lo = lo.parse().map_err(|_| format!("bad grid start '{lo}'"))?;
        let hi = hi.parse().map_err(|_| format!("bad grid end '{hi}'"))?;
        let n: usize = n.parse().map_err(|_| format!("bad grid count '{n}'"))?;
        if n == 0 {
            return Err("grid needs at least one point".into());
        }
        Ok(Self { lo, hi, n })
    }
}

impl GridArg {
    pub fn points(&self) -> Vec<f64> {
        jwkb_core::scaling::linspace(self.lo, self.hi, self.n)
    }
}
