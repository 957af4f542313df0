use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SMILE_HEADER: &str = "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstrumentClass {
    Spx,
    Vix,
}

impl std::str::FromStr for InstrumentClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SPX" => Ok(InstrumentClass::Spx),
            "VIX" => Ok(InstrumentClass::Vix),
            other => Err(Error::Config(format!("unknown instrument class `{other}`"))),
        }
    }
}

impl std::fmt::Display for InstrumentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InstrumentClass::Spx => "SPX",
            InstrumentClass::Vix => "VIX",
        })
    }
}

/// One option quote in implied-vol terms. `log_moneyness` is relative to the
/// SPX spot (SPX) or to the VIX future of the same expiry (VIX).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote<T: Scalar = f64> {
    pub class: InstrumentClass,
    pub expiry: T,
    pub log_moneyness: T,
    pub bid_vol: Option<T>,
    pub ask_vol: Option<T>,
    pub mid_vol: T,
}

impl<T: Scalar> Quote<T> {
    /// Whether `vol` lies within `[bid, ask]` (both must be present).
    pub fn within_spread(&self, vol: T) -> Option<bool> {
        match (self.bid_vol, self.ask_vol) {
            (Some(b), Some(a)) => Some(vol >= b && vol <= a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmileSet<T: Scalar = f64> {
    pub quotes: Vec<Quote<T>>,
    /// Free-form valuation label, stored as a `# label = …` comment.
    pub label: String,
}

impl<T: Scalar> SmileSet<T> {
    pub fn new(quotes: Vec<Quote<T>>, label: impl Into<String>) -> Result<Self> {
        let s = SmileSet {
            quotes,
            label: label.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quotes.is_empty() {
            return Err(Error::InsufficientData("smile set has no quotes".into()));
        }
        for (i, q) in self.quotes.iter().enumerate() {
            let line = i + 2;
            let bad = |detail: String| Err(Error::Parse { line, detail });
            if !(q.expiry > T::zero()) || !q.expiry.is_finite() {
                return bad(format!("expiry {} must be positive", q.expiry));
            }
            if !q.log_moneyness.is_finite() || !(q.mid_vol >= T::zero()) || !q.mid_vol.is_finite() {
                return bad("log-moneyness and mid vol must be finite, vol non-negative".into());
            }
            if let Some(b) = q.bid_vol {
                if !(b <= q.mid_vol) {
                    return bad(format!("bid {b} above mid {}", q.mid_vol));
                }
            }
            if let Some(a) = q.ask_vol {
                if !(a >= q.mid_vol) {
                    return bad(format!("ask {a} below mid {}", q.mid_vol));
                }
            }
        }
        Ok(())
    }

    pub fn count(&self, class: InstrumentClass) -> usize {
        self.quotes.iter().filter(|q| q.class == class).count()
    }

    /// Distinct expiries of `class`, ascending.
    pub fn expiries(&self, class: InstrumentClass) -> Vec<T> {
        let mut e: Vec<T> = self
            .quotes
            .iter()
            .filter(|q| q.class == class)
            .map(|q| q.expiry)
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e.dedup();
        e
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut label = String::new();
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    if k.trim() == "label" {
                        label = v.trim().to_string();
                    }
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != SMILE_HEADER {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected header `{SMILE_HEADER}`"),
            });
        }
        let mut quotes = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let num = |i: usize| -> Result<Option<T>> {
                let f = rec.get(i).unwrap_or("");
                if f.is_empty() {
                    return Ok(None);
                }
                f.parse::<f64>().map(|x| Some(T::lit(x))).map_err(|_| Error::Parse {
                    line,
                    detail: format!("cannot parse `{f}` as a number"),
                })
            };
            let req = |i: usize, name: &str| -> Result<T> {
                num(i)?.ok_or_else(|| Error::Parse {
                    line,
                    detail: format!("missing {name}"),
                })
            };
            let class = rec[0].parse().map_err(|e: Error| Error::Parse {
                line,
                detail: e.to_string(),
            })?;
            quotes.push(Quote {
                class,
                expiry: req(1, "expiry_years")?,
                log_moneyness: req(2, "log_moneyness")?,
                bid_vol: num(3)?,
                ask_vol: num(4)?,
                mid_vol: req(5, "mid_vol")?,
            });
        }
        SmileSet::new(quotes, label)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// CSV text; `header` lines are written as `#` comments after the label.
    pub fn render(&self, header: &[String]) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(out, "# label = {}", self.label);
        }
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(out, "{SMILE_HEADER}");
        let opt = |x: Option<T>| x.map(|v| v.as_f64().to_string()).unwrap_or_default();
        for q in &self.quotes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                q.class,
                q.expiry.as_f64(),
                q.log_moneyness.as_f64(),
                opt(q.bid_vol),
                opt(q.ask_vol),
                q.mid_vol.as_f64()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# label = 2017-05-19\n\
        class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\n\
        SPX,0.0575,-0.1,0.19,0.2,0.195\n\
        # a comment\n\
        VIX,0.0822,0.2,,,0.9\n";

    #[test]
    fn parse_and_render_round_trip() {
        let s: SmileSet = SmileSet::parse(SAMPLE).unwrap();
        assert_eq!(s.label, "2017-05-19");
        assert_eq!(s.quotes.len(), 2);
        assert_eq!(s.quotes[1].bid_vol, None);
        assert_eq!(s.count(InstrumentClass::Vix), 1);
        let again: SmileSet = SmileSet::parse(&s.render(&[])).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_header = "class,expiry,log_moneyness,bid_vol,ask_vol,mid_vol\n";
        assert!(SmileSet::<f64>::parse(bad_header).is_err());
        let crossed = "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\nSPX,0.1,0,0.3,0.4,0.2\n";
        assert!(matches!(SmileSet::<f64>::parse(crossed), Err(Error::Parse { .. })));
        let neg = "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\nSPX,-0.1,0,,,0.2\n";
        assert!(SmileSet::<f64>::parse(neg).is_err());
        let class = "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\nNDX,0.1,0,,,0.2\n";
        assert!(SmileSet::<f64>::parse(class).is_err());
        let empty = "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\n";
        assert!(matches!(SmileSet::<f64>::parse(empty), Err(Error::InsufficientData(_))));
    }
}
