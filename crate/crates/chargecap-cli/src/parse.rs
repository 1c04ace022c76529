//! Small numeric parsers for CLI arguments: exact fractions for budgets
//! (branch boundaries like 2/3 are rational) and multiplier grids.

use chargecap::Frac;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty value")]
    Empty,
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("value {0:?} overflows")]
    Overflow(String),
    #[error("negative value {0:?} not allowed here")]
    Negative(String),
    #[error("invalid grid {0:?}: expected start:end:step or a comma list")]
    InvalidGrid(String),
    #[error("grid {0:?} is empty")]
    EmptyGrid(String),
    #[error("grid {0:?} has more than {1} points")]
    GridTooLarge(String, usize),
}

/// Parses an exact non-negative rational: `"2/3"`, `"0.25"`, or `"2"`.
pub fn parse_fraction(text: &str) -> Result<Frac, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::Empty);
    }
    let bad = || ParseError::InvalidNumber(trimmed.to_string());
    let frac = if let Some((num, den)) = trimmed.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| bad())?;
        let d: i64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(ParseError::ZeroDenominator(trimmed.to_string()));
        }
        Frac::new(n, d)
    } else if let Some((int, dec)) = trimmed.split_once('.') {
        let int = if int.is_empty() { "0" } else { int };
        if dec.is_empty() || !dec.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if dec.len() > 12 {
            return Err(ParseError::Overflow(trimmed.to_string()));
        }
        let whole: i64 = int.parse().map_err(|_| bad())?;
        let fracpart: i64 = dec.parse().map_err(|_| bad())?;
        let scale = 10i64.pow(dec.len() as u32);
        let numer = whole
            .checked_mul(scale)
            .and_then(|w| {
                if whole < 0 {
                    w.checked_sub(fracpart)
                } else {
                    w.checked_add(fracpart)
                }
            })
            .ok_or_else(|| ParseError::Overflow(trimmed.to_string()))?;
        Frac::new(numer, scale)
    } else {
        let n: i64 = trimmed.parse().map_err(|_| bad())?;
        Frac::from_integer(n)
    };
    if frac < Frac::from_integer(0) {
        return Err(ParseError::Negative(trimmed.to_string()));
    }
    Ok(frac)
}

const GRID_CAP: usize = 100_000;

/// Parses a multiplier grid: either `start:end:step` (inclusive of the end
/// within half a step) or a comma-separated list. Values must be
/// non-negative and sorted ascending.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::EmptyGrid(text.to_string()));
    }
    let invalid = || ParseError::InvalidGrid(text.to_string());
    let values: Vec<f64> = if trimmed.contains(':') {
        let parts: Vec<&str> = trimmed.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| invalid())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| invalid())?;
        let step: f64 = parts[2].trim().parse().map_err(|_| invalid())?;
        if !start.is_finite() || !end.is_finite() || !step.is_finite() {
            return Err(invalid());
        }
        if step <= 0.0 || end < start {
            return Err(invalid());
        }
        let count = ((end - start) / step).floor() as usize + 1;
        if count > GRID_CAP {
            return Err(ParseError::GridTooLarge(text.to_string(), GRID_CAP));
        }
        let mut grid: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
        if let Some(&last) = grid.last() {
            if end - last > step * 0.5 {
                grid.push(end);
            }
        }
        grid
    } else {
        let mut grid = Vec::new();
        for item in trimmed.split(',') {
            let v: f64 = item.trim().parse().map_err(|_| invalid())?;
            if !v.is_finite() {
                return Err(invalid());
            }
            grid.push(v);
        }
        if grid.len() > GRID_CAP {
            return Err(ParseError::GridTooLarge(text.to_string(), GRID_CAP));
        }
        grid
    };
    if values.is_empty() {
        return Err(ParseError::EmptyGrid(text.to_string()));
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(ParseError::Negative(text.to_string()));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse_exactly() {
        assert_eq!(parse_fraction("2/3").unwrap(), Frac::new(2, 3));
        assert_eq!(parse_fraction("0.25").unwrap(), Frac::new(1, 4));
        assert_eq!(parse_fraction("2").unwrap(), Frac::from_integer(2));
        assert_eq!(parse_fraction(" 10/9 ").unwrap(), Frac::new(10, 9));
        assert_eq!(parse_fraction(".5").unwrap(), Frac::new(1, 2));
    }

    #[test]
    fn fraction_errors() {
        assert!(matches!(parse_fraction(""), Err(ParseError::Empty)));
        assert!(matches!(
            parse_fraction("1/0"),
            Err(ParseError::ZeroDenominator(_))
        ));
        assert!(matches!(
            parse_fraction("-1/2"),
            Err(ParseError::Negative(_))
        ));
        assert!(matches!(
            parse_fraction("a/b"),
            Err(ParseError::InvalidNumber(_))
        ));
        assert!(matches!(
            parse_fraction("1.2.3"),
            Err(ParseError::InvalidNumber(_))
        ));
    }

    #[test]
    fn colon_grid_includes_endpoint() {
        let grid = parse_grid("0:4:0.5").unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid[0], 0.0);
        assert_eq!(*grid.last().unwrap(), 4.0);
    }

    #[test]
    fn comma_grid() {
        assert_eq!(parse_grid("0, 0.5, 1").unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(parse_grid(""), Err(ParseError::EmptyGrid(_))));
        assert!(matches!(parse_grid("1:0:0.1"), Err(ParseError::InvalidGrid(_))));
        assert!(matches!(parse_grid("0:1:0"), Err(ParseError::InvalidGrid(_))));
        assert!(matches!(parse_grid("1,0"), Err(ParseError::InvalidGrid(_))));
        assert!(matches!(parse_grid("-1,0"), Err(ParseError::Negative(_))));
        assert!(matches!(
            parse_grid("0:1e9:0.0001"),
            Err(ParseError::GridTooLarge(..))
        ));
    }
}
