//! Physical constants for ion-trap interconnects and the plain-text config
//! format used to override them.
//!
//! Times are in microseconds, distances in ion-trap cells. The defaults are
//! the ion-trap operation times and error probabilities; everything else in
//! the crate reads its constants from a [`ParameterSet`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Operation latencies in microseconds (`t_mv` and `t_cb` are per cell).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationTimes {
    pub t_1q: f64,
    pub t_2q: f64,
    pub t_mv: f64,
    pub t_ms: f64,
    pub t_gen: f64,
    pub t_tprt: f64,
    pub t_prfy: f64,
    /// Classical bit transit per cell.
    pub t_cb: f64,
}

/// Per-operation error probabilities (`p_mv` is per cell moved).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub p_1q: f64,
    pub p_2q: f64,
    pub p_mv: f64,
    pub p_ms: f64,
}

impl ErrorRates {
    /// All four rates set to `rate`.
    pub fn uniform(rate: f64) -> Self {
        Self {
            p_1q: rate,
            p_2q: rate,
            p_mv: rate,
            p_ms: rate,
        }
    }

    pub fn zero() -> Self {
        Self::uniform(0.0)
    }
}

/// Minimum EPR fidelity admitted for data teleportation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub f_min: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            f_min: DEFAULT_F_MIN,
        }
    }
}

/// Fault-tolerance threshold on data-qubit fidelity.
pub const DEFAULT_F_MIN: f64 = 1.0 - 7.5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub times: OperationTimes,
    pub errors: ErrorRates,
    pub threshold: ThresholdPolicy,
    /// Fidelity of freshly zeroed qubits.
    pub f_zero: f64,
}

impl Default for ParameterSet {
    fn default() -> Self {
        default_ion_trap()
    }
}

/// Ion-trap operation times and error probabilities.
///
/// `t_cb` defaults to 0.002 us/cell, two orders of magnitude below `t_mv`.
pub fn default_ion_trap() -> ParameterSet {
    ParameterSet {
        times: OperationTimes {
            t_1q: 1.0,
            t_2q: 20.0,
            t_mv: 0.2,
            t_ms: 100.0,
            t_gen: 122.0,
            t_tprt: 122.0,
            t_prfy: 121.0,
            t_cb: 0.002,
        },
        errors: ErrorRates {
            p_1q: 1e-8,
            p_2q: 1e-7,
            p_mv: 1e-6,
            p_ms: 1e-8,
        },
        threshold: ThresholdPolicy::default(),
        f_zero: 1.0,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key} = {value} is out of range ({expected})")]
    Validation {
        key: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// Keys accepted by [`load_config`], in serialization order.
pub const CONFIG_KEYS: [&str; 14] = [
    "t_1q", "t_2q", "t_mv", "t_ms", "t_gen", "t_tprt", "t_prfy", "t_cb", "p_1q", "p_2q", "p_mv",
    "p_ms", "f_min", "f_zero",
];

impl ParameterSet {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "t_1q" => &mut self.times.t_1q,
            "t_2q" => &mut self.times.t_2q,
            "t_mv" => &mut self.times.t_mv,
            "t_ms" => &mut self.times.t_ms,
            "t_gen" => &mut self.times.t_gen,
            "t_tprt" => &mut self.times.t_tprt,
            "t_prfy" => &mut self.times.t_prfy,
            "t_cb" => &mut self.times.t_cb,
            "p_1q" => &mut self.errors.p_1q,
            "p_2q" => &mut self.errors.p_2q,
            "p_mv" => &mut self.errors.p_mv,
            "p_ms" => &mut self.errors.p_ms,
            "f_min" => &mut self.threshold.f_min,
            "f_zero" => &mut self.f_zero,
            _ => return None,
        })
    }

    fn get(&self, key: &str) -> f64 {
        let mut copy = *self;
        *copy.slot(key).expect("known key")
    }

    /// Checks every range constraint. Times must be non-negative here; the
    /// all-zero time set is a legitimate limiting case for latency models.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.times;
        for (key, value) in [
            ("t_1q", t.t_1q),
            ("t_2q", t.t_2q),
            ("t_mv", t.t_mv),
            ("t_ms", t.t_ms),
            ("t_gen", t.t_gen),
            ("t_tprt", t.t_tprt),
            ("t_prfy", t.t_prfy),
            ("t_cb", t.t_cb),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::Validation {
                    key,
                    value,
                    expected: "finite time >= 0",
                });
            }
        }
        let e = &self.errors;
        for (key, value) in [
            ("p_1q", e.p_1q),
            ("p_2q", e.p_2q),
            ("p_mv", e.p_mv),
            ("p_ms", e.p_ms),
        ] {
            if !(0.0..1.0).contains(&value) {
                return Err(ConfigError::Validation {
                    key,
                    value,
                    expected: "probability in [0, 1)",
                });
            }
        }
        let f_min = self.threshold.f_min;
        if !(f_min > 0.0 && f_min < 1.0) {
            return Err(ConfigError::Validation {
                key: "f_min",
                value: f_min,
                expected: "0 < f_min < 1",
            });
        }
        if !(0.0..=1.0).contains(&self.f_zero) {
            return Err(ConfigError::Validation {
                key: "f_zero",
                value: self.f_zero,
                expected: "fidelity in [0, 1]",
            });
        }
        Ok(())
    }
}

/// Parses `key = value` lines (`#` starts a comment). Omitted keys keep
/// their [`default_ion_trap`] value.
pub fn load_config(text: &str) -> Result<ParameterSet, ConfigError> {
    let mut params = default_ion_trap();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parsed: f64 = value.parse().map_err(|_| ConfigError::Parse {
            line,
            message: format!("`{value}` is not a number"),
        })?;
        let slot = params.slot(key).ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("unknown key `{key}`"),
        })?;
        *slot = parsed;
    }
    params.validate()?;
    Ok(params)
}

impl fmt::Display for ParameterSet {
    /// Writes every key in the [`load_config`] format; floats use the
    /// shortest representation that parses back to the same value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in CONFIG_KEYS {
            writeln!(f, "{key} = {:?}", self.get(key))?;
        }
        Ok(())
    }
}

impl FromStr for ParameterSet {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        load_config(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_ion_trap_tables() {
        let p = default_ion_trap();
        assert_eq!(p.times.t_1q, 1.0);
        assert_eq!(p.times.t_2q, 20.0);
        assert_eq!(p.times.t_mv, 0.2);
        assert_eq!(p.times.t_ms, 100.0);
        assert_eq!(p.times.t_gen, 122.0);
        assert_eq!(p.times.t_tprt, 122.0);
        assert_eq!(p.times.t_prfy, 121.0);
        assert_eq!(p.times.t_cb, 0.002);
        assert_eq!(p.errors.p_1q, 1e-8);
        assert_eq!(p.errors.p_2q, 1e-7);
        assert_eq!(p.errors.p_mv, 1e-6);
        assert_eq!(p.errors.p_ms, 1e-8);
        assert_eq!(p.threshold.f_min, 1.0 - 7.5e-5);
        assert_eq!(p.f_zero, 1.0);
        assert!(p.times.t_cb < p.times.t_mv / 10.0);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(load_config("").unwrap(), default_ion_trap());
        assert_eq!(
            load_config("# only a comment\n\n   \n").unwrap(),
            default_ion_trap()
        );
    }

    #[test]
    fn single_override() {
        let p = load_config("p_mv = 1e-5").unwrap();
        let mut expected = default_ion_trap();
        expected.errors.p_mv = 1e-5;
        assert_eq!(p, expected);
    }

    #[test]
    fn trailing_comment_and_whitespace() {
        let p = load_config("  t_gen=21   # projected\n").unwrap();
        assert_eq!(p.times.t_gen, 21.0);
    }

    #[test]
    fn probability_out_of_range() {
        let err = load_config("p_mv = 2.0").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { key: "p_mv", .. }));
        assert!(load_config("p_2q = -0.1").is_err());
        assert!(load_config("f_min = 1.0").is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = load_config("t_1q = 1\nnot a pair\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 2,
                message: "expected `key = value`, got `not a pair`".into()
            }
        );
        let err = load_config("\n\nbogus = 3").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }));
        let err = load_config("t_mv = fast").unwrap_err();
        assert!(err.to_string().starts_with("line 1:"));
    }

    proptest! {
        #[test]
        fn serialization_round_trips(
            t in proptest::array::uniform8(0.0f64..1e4),
            p in proptest::array::uniform4(0.0f64..0.999),
            f_min in 0.5f64..0.999_999,
            f_zero in 0.0f64..=1.0,
        ) {
            let params = ParameterSet {
                times: OperationTimes {
                    t_1q: t[0], t_2q: t[1], t_mv: t[2], t_ms: t[3],
                    t_gen: t[4], t_tprt: t[5], t_prfy: t[6], t_cb: t[7],
                },
                errors: ErrorRates { p_1q: p[0], p_2q: p[1], p_mv: p[2], p_ms: p[3] },
                threshold: ThresholdPolicy { f_min },
                f_zero,
            };
            let text = params.to_string();
            prop_assert_eq!(load_config(&text).unwrap(), params);
        }
    }
}
