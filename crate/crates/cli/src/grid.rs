//! Parsers for expiry lists and log-moneyness grids.

use crate::CliError;

const DAYS_PER_YEAR: f64 = 365.0;

/// One expiry: `14d`, `2w`, `0.25y` or a bare number of years.
pub fn parse_expiry(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    // (number, days per unit); `None` means years
    let (num, days) = match s.chars().last() {
        Some('d') => (&s[..s.len() - 1], Some(1.0)),
        Some('w') => (&s[..s.len() - 1], Some(7.0)),
        Some('y') => (&s[..s.len() - 1], None),
        _ => (s, None),
    };
    let x: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("cannot read expiry `{s}`")))?;
    let t = match days {
        Some(d) => x * d / DAYS_PER_YEAR,
        None => x,
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(CliError::usage(format!("expiry `{s}` must be positive")));
    }
    Ok(t)
}

/// Comma-separated expiries, sorted and deduplicated.
pub fn parse_expiries(s: &str) -> Result<Vec<f64>, CliError> {
    let mut out = s.split(',').map(parse_expiry).collect::<Result<Vec<_>, _>>()?;
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_log_moneyness(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("cannot read log-moneyness grid `{s}`"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !a.is_finite() || !b.is_finite() || !h.is_finite() || h <= 0.0 || b < a {
                return Err(bad());
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(CliError::usage(format!("log-moneyness grid `{s}` has too many points")));
            }
            // rounding keeps `0.1` from printing as `0.10000000000000003`
            Ok((0..=n).map(|i| ((a + h * i as f64) * 1e12).round() / 1e12).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

/// Label of an expiry for file names: whole days when it is one, otherwise years.
pub fn expiry_label(t: f64) -> String {
    let days = t * DAYS_PER_YEAR;
    if (days - days.round()).abs() < 1e-9 {
        format!("{}d", days.round() as i64)
    } else {
        format!("{t}y")
    }
}
