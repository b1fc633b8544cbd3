//! Acceptance predicates evaluated over summarized series.

use std::fmt;

use serde::Deserialize;

use crate::quantity::Record;
use crate::stats::Series;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Every record is at most `value`.
    AllAtMost,
    /// Every record is at least `value`.
    AllAtLeast,
    /// Every per-N aggregate is at most `value`.
    MeanAtMost,
    /// Every per-N aggregate is at least `value`.
    MeanAtLeast,
    /// Fitted log-log slope is at most `value`.
    SlopeAtMost,
    /// Fitted slope lies within `value ± tolerance`.
    SlopeWithin,
    /// Aggregates fall along N: `next < slack · previous` (slack defaults to 1).
    Decreasing,
    /// Aggregates do not fall by more than `slack` (default 0) between consecutive N.
    NonDecreasing,
}

impl Rule {
    pub fn needs_value(self) -> bool {
        !matches!(self, Rule::Decreasing | Rule::NonDecreasing)
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::AllAtMost => "all_at_most",
            Rule::AllAtLeast => "all_at_least",
            Rule::MeanAtMost => "mean_at_most",
            Rule::MeanAtLeast => "mean_at_least",
            Rule::SlopeAtMost => "slope_at_most",
            Rule::SlopeWithin => "slope_within",
            Rule::Decreasing => "decreasing",
            Rule::NonDecreasing => "non_decreasing",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A check on one quantity, optionally restricted to a time, time scale or chain length.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    pub quantity: String,
    pub rule: Rule,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub slack: Option<f64>,
    pub time: Option<f64>,
    pub scale: Option<f64>,
    pub n: Option<usize>,
}

impl Predicate {
    pub fn new(quantity: &str, rule: Rule) -> Self {
        Self { quantity: quantity.into(), rule, value: None, tolerance: None, slack: None, time: None, scale: None, n: None }
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn tolerance(mut self, v: f64) -> Self {
        self.tolerance = Some(v);
        self
    }

    pub fn slack(mut self, v: f64) -> Self {
        self.slack = Some(v);
        self
    }

    pub fn time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn scale(mut self, e: f64) -> Self {
        self.scale = Some(e);
        self
    }

    pub fn at_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    fn selects(&self, quantity: &str, time: Option<f64>, scale: Option<f64>) -> bool {
        quantity == self.quantity
            && self.time.is_none_or(|t| time == Some(t))
            && self.scale.is_none_or(|e| scale == Some(e))
    }

    fn describe(&self) -> String {
        let mut s = format!("{} {}", self.quantity, self.rule);
        if let Some(v) = self.value {
            s.push_str(&format!(" {v:e}"));
        }
        if let Some(t) = self.tolerance {
            s.push_str(&format!(" ±{t}"));
        }
        if let Some(k) = self.slack {
            s.push_str(&format!(" slack {k}"));
        }
        for (name, v) in [("t", self.time), ("scale", self.scale)] {
            if let Some(v) = v {
                s.push_str(&format!(" {name}={v}"));
            }
        }
        if let Some(n) = self.n {
            s.push_str(&format!(" N={n}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub description: String,
    pub passed: bool,
    pub observed: String,
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(" "))
}

pub fn evaluate(p: &Predicate, records: &[Record], series: &[Series]) -> Outcome {
    let description = p.describe();
    let chosen: Vec<&Series> = series.iter().filter(|s| p.selects(s.key.quantity, s.key.time, s.key.scale)).collect();
    if chosen.is_empty() {
        return Outcome { description, passed: false, observed: "no matching records".into() };
    }
    let value = p.value.unwrap_or(0.0);
    let mut passed = true;
    let mut observed = Vec::new();
    for s in chosen {
        let points: Vec<_> = s.points.iter().filter(|q| p.n.is_none_or(|n| q.n == n)).collect();
        let means: Vec<f64> = points.iter().map(|q| q.value).collect();
        let (ok, seen) = match p.rule {
            Rule::AllAtMost | Rule::AllAtLeast => {
                let vals: Vec<f64> = records
                    .iter()
                    .filter(|r| {
                        p.selects(r.quantity, r.time, r.scale)
                            && r.time == s.key.time
                            && r.scale == s.key.scale
                            && p.n.is_none_or(|n| r.n == n)
                    })
                    .map(|r| r.value)
                    .collect();
                if p.rule == Rule::AllAtMost {
                    let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (!vals.is_empty() && vals.iter().all(|v| *v <= value), format!("max={worst:.4e}"))
                } else {
                    let worst = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    (!vals.is_empty() && vals.iter().all(|v| *v >= value), format!("min={worst:.4e}"))
                }
            }
            Rule::MeanAtMost => (!means.is_empty() && means.iter().all(|m| *m <= value), fmt_list(&means)),
            Rule::MeanAtLeast => (!means.is_empty() && means.iter().all(|m| *m >= value), fmt_list(&means)),
            Rule::SlopeAtMost | Rule::SlopeWithin => match s.fit {
                Some(f) => {
                    let ok = if p.rule == Rule::SlopeAtMost {
                        f.slope <= value
                    } else {
                        (f.slope - value).abs() <= p.tolerance.unwrap_or(0.0)
                    };
                    (ok, format!("slope={:.3}±{:.3}", f.slope, f.slope_stderr))
                }
                None => (false, "no slope".into()),
            },
            Rule::Decreasing => {
                let k = p.slack.unwrap_or(1.0);
                (means.len() >= 2 && means.windows(2).all(|w| w[1] < k * w[0]), fmt_list(&means))
            }
            Rule::NonDecreasing => {
                let k = p.slack.unwrap_or(0.0);
                (means.len() >= 2 && means.windows(2).all(|w| w[1] >= w[0] - k), fmt_list(&means))
            }
        };
        passed &= ok;
        observed.push(match (s.key.time, s.key.scale) {
            (None, None) => seen,
            (t, e) => format!("{seen} @t={}", t.map_or("-".into(), |t| t.to_string()) + &e.map_or(String::new(), |e| format!(",s={e}"))),
        });
    }
    Outcome { description, passed, observed: observed.join("; ") }
}
