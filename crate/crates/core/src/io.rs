//! Text formats read from the command line and from files.
//!
//! Every parser takes untrusted input and either returns a validated value
//! or an [`Error::Input`]; none of them panic.

use std::io::Write;

use crate::cf::{Alphabet, CfWord, Fraction};
use crate::enumerate::MultiplicityTable;
use crate::error::{Error, Result};
use crate::qmc::PointSet2D;

/// Largest letter accepted in an alphabet.
pub const MAX_LETTER: u32 = 1_000_000;
/// Largest denominator accepted in a multiplicity file.
pub const MAX_TABLE_BOUND: u64 = 1 << 32;

fn parse_u64(tok: &str, what: &str) -> Result<u64> {
    tok.trim()
        .parse::<u64>()
        .map_err(|e| Error::input(format!("bad {what} {tok:?}: {e}")))
}

/// `"1,2,3"`, or a range `"1..5"` (inclusive).
pub fn parse_alphabet(s: &str) -> Result<Alphabet> {
    let s = s.trim();
    let letters: Vec<u32> = if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_u64(lo, "letter")?;
        let hi = parse_u64(hi, "letter")?;
        if lo > hi || hi > MAX_LETTER as u64 {
            return Err(Error::input(format!("bad range {s:?}")));
        }
        (lo as u32..=hi as u32).collect()
    } else {
        s.split(',')
            .map(|t| {
                let v = parse_u64(t, "letter")?;
                if v > MAX_LETTER as u64 {
                    return Err(Error::input(format!("letter {v} above {MAX_LETTER}")));
                }
                Ok(v as u32)
            })
            .collect::<Result<_>>()?
    };
    Alphabet::new(letters)
}

/// `"[1,3,2]"` or `"1,3,2"`.
pub fn parse_word(s: &str) -> Result<CfWord> {
    let s = s.trim();
    let inner = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(s);
    let q = inner
        .split(',')
        .map(|t| {
            let v = parse_u64(t, "partial quotient")?;
            u32::try_from(v).map_err(|_| Error::input(format!("partial quotient {v} too large")))
        })
        .collect::<Result<Vec<u32>>>()?;
    CfWord::new(q)
}

/// `"b/d"`, reduced, `d > 0`.
pub fn parse_fraction(s: &str) -> Result<Fraction> {
    let (b, d) = s
        .trim()
        .split_once('/')
        .ok_or_else(|| Error::input(format!("expected b/d, got {s:?}")))?;
    Fraction::new(parse_u64(b, "numerator")?, parse_u64(d, "denominator")?)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

/// Rows of two fields; a first row whose fields are not numbers is a header.
fn two_column_rows(text: &str) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    for (i, rec) in reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::input(format!("csv: {e}")))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::input(format!(
                "row {}: expected 2 fields, got {}",
                i + 1,
                rec.len()
            )));
        }
        rows.push((rec[0].to_string(), rec[1].to_string()));
    }
    if let Some((a, _)) = rows.first() {
        if a.parse::<f64>().is_err() {
            rows.remove(0);
        }
    }
    Ok(rows)
}

/// `x,y` rows with coordinates in `[0, 1)`; `#` lines and an optional
/// header are skipped.
pub fn read_points_csv(text: &str) -> Result<PointSet2D> {
    let pts = two_column_rows(text)?
        .into_iter()
        .map(|(x, y)| {
            let p = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Error::input(format!("bad coordinate {t:?}: {e}")))
            };
            Ok((p(&x)?, p(&y)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PointSet2D::new(pts)
}

/// `d,count` rows; the table bound is one more than the largest `d`.
pub fn read_multiplicity_csv(text: &str) -> Result<MultiplicityTable> {
    let rows = two_column_rows(text)?
        .into_iter()
        .map(|(d, c)| Ok((parse_u64(&d, "denominator")?, parse_u64(&c, "count")?)))
        .collect::<Result<Vec<_>>>()?;
    let bound = rows.iter().map(|r| r.0).max().map_or(1, |m| m + 1);
    if bound > MAX_TABLE_BOUND {
        return Err(Error::input(format!("denominator {} too large", bound - 1)));
    }
    if rows.iter().any(|r| r.1 > u32::MAX as u64) {
        return Err(Error::input("count above 2^32"));
    }
    MultiplicityTable::from_counts(bound, rows)
}

/// Writes `x,y` with 17 significant digits.
pub fn write_points_csv<W: Write>(out: &mut W, ps: &PointSet2D) -> std::io::Result<()> {
    writeln!(out, "x,y")?;
    for (x, y) in &ps.points {
        writeln!(out, "{x:.16e},{y:.16e}")?;
    }
    Ok(())
}

pub fn write_multiplicity_csv<W: Write>(out: &mut W, t: &MultiplicityTable) -> std::io::Result<()> {
    writeln!(out, "d,count")?;
    for (d, c) in t.iter() {
        writeln!(out, "{d},{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alphabets() {
        assert_eq!(parse_alphabet("1,2").unwrap().letters(), &[1, 2]);
        assert_eq!(parse_alphabet(" 3, 1 ,2").unwrap().letters(), &[1, 2, 3]);
        assert_eq!(parse_alphabet("1..5").unwrap().len(), 5);
        for bad in ["", "0,1", "1,1", "a", "5..1", "1,,2", "-1", "1..2000000"] {
            assert!(parse_alphabet(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn words_and_fractions() {
        assert_eq!(parse_word("[1,3,2]").unwrap().quotients(), &[1, 3, 2]);
        assert_eq!(parse_word("4").unwrap().quotients(), &[4]);
        assert!(parse_word("[]").is_err() && parse_word("[0]").is_err());
        let f = parse_fraction("3523/4547").unwrap();
        assert_eq!((f.numer(), f.denom()), (3523, 4547));
        for bad in ["3/6", "1/0", "1", "/", "x/2"] {
            assert!(parse_fraction(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn points_roundtrip() {
        let ps = crate::qmc::zn_points(5, 12, false).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &ps).unwrap();
        let text = format!("# header comment\n{}", String::from_utf8(buf).unwrap());
        let back = read_points_csv(&text).unwrap();
        assert_eq!(back.points, ps.points);
        assert!(read_points_csv("x,y\n0.5,1.5\n").is_err());
        assert!(read_points_csv("0.5\n").is_err());
    }

    #[test]
    fn multiplicities_roundtrip() {
        let t = MultiplicityTable::from_values(20, [3, 5, 5, 19]).unwrap();
        let mut buf = Vec::new();
        write_multiplicity_csv(&mut buf, &t).unwrap();
        let back = read_multiplicity_csv(&String::from_utf8(buf).unwrap()).unwrap();
        assert!(back.iter().eq(t.iter()));
        assert!(read_multiplicity_csv("1,-2\n").is_err());
        assert!(read_multiplicity_csv("99999999999999,1\n").is_err());
    }

    proptest! {
        #[test]
        fn parsers_never_panic(s in "\\PC{0,40}") {
            let _ = parse_alphabet(&s);
            let _ = parse_word(&s);
            let _ = parse_fraction(&s);
            let _ = read_points_csv(&s);
            let _ = read_multiplicity_csv(&s);
        }

        #[test]
        fn alphabet_display_roundtrips(mut v in prop::collection::btree_set(1u32..500, 1..8)) {
            let a = Alphabet::new(std::mem::take(&mut v).into_iter().collect()).unwrap();
            prop_assert_eq!(parse_alphabet(&a.to_string()).unwrap(), a);
        }
    }
}
