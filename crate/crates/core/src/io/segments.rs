//! One segment per line, `x1 y1 x2 y2` as decimal reals; `#` starts a comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::priors::LineSegment;

pub fn parse_segments(text: &str) -> Result<Vec<LineSegment>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("segments line {}: {e}", lineno + 1)))?;
        let [x1, y1, x2, y2] = nums[..] else {
            return Err(Error::Format(format!(
                "segments line {}: expected 4 numbers, found {}",
                lineno + 1,
                nums.len()
            )));
        };
        let seg = LineSegment::new(x1, y1, x2, y2)
            .map_err(|e| Error::Format(format!("segments line {}: {e}", lineno + 1)))?;
        out.push(seg);
    }
    Ok(out)
}

pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<LineSegment>> {
    let path = path.as_ref();
    parse_segments(&fs::read_to_string(path).map_err(|e| Error::file(path, e))?)
}

/// Shortest round-tripping decimal form of every coordinate.
pub fn format_segments(segs: &[LineSegment]) -> String {
    let mut out = String::new();
    for s in segs {
        let _ = writeln!(out, "{} {} {} {}", s.x1, s.y1, s.x2, s.y2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let segs = parse_segments("# header\n1 2 3 4\n\n 0.5 0.25 8 9 # tail\n").unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[1].x1, segs[1].y2), (0.5, 9.0));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_segments("1 2 3").is_err());
        assert!(parse_segments("1 2 x 4").is_err());
        assert!(parse_segments("1 2 1 2").is_err());
    }

    #[test]
    fn format_round_trips() {
        let segs = parse_segments("0.1 2 3.333333333333 4\n").unwrap();
        assert_eq!(parse_segments(&format_segments(&segs)).unwrap(), segs);
    }
}
