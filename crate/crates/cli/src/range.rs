//! Sweep values: `min:max:steps` (inclusive) or a comma-separated list.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Range { min: f64, max: f64, steps: usize },
    List(Vec<f64>),
}

impl Values {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Values::Range { min, max, steps } => {
                let last = (*steps - 1) as f64;
                (0..*steps)
                    .map(|i| {
                        if i + 1 == *steps {
                            *max
                        } else {
                            min + (max - min) * i as f64 / last
                        }
                    })
                    .collect()
            }
            Values::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for Values {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Values::Range { min, max, steps } => write!(f, "{min}:{max}:{steps}"),
            Values::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl Serialize for Values {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn number(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !x.is_finite() {
        return Err(format!("not finite: {s:?}"));
    }
    Ok(x)
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected min:max:steps, got {s:?}"));
            }
            let min = number(parts[0])?;
            let max = number(parts[1])?;
            let steps: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("steps must be an integer, got {:?}", parts[2]))?;
            if !(min < max) {
                return Err(format!("need min < max, got {min} and {max}"));
            }
            if steps < 2 {
                return Err(format!("need at least 2 steps, got {steps}"));
            }
            return Ok(Values::Range { min, max, steps });
        }
        let list = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        if list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(format!("list must be strictly ascending: {s:?}"));
        }
        Ok(Values::List(list))
    }
}
