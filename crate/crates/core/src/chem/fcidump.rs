//! FCIDUMP reader and writer.
//!
//! Layout: a namelist header opened by `&FCI` carrying `NORB`, `NELEC` and `MS2`,
//! closed by `&END` (or `/`), followed by `value i j k l` records with 1-based indices in
//! chemists' notation. `i j 0 0` is a one-body element, `0 0 0 0` the core energy;
//! `i 0 0 0` orbital energies are accepted and ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::integrals::{eri_index, IntegralSet};
use crate::error::{Error, Result};

const WRITE_CUTOFF: f64 = 1e-15;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header_value(header: &str, key: &str) -> Option<String> {
    let upper = header.to_ascii_uppercase();
    let mut search = 0;
    while let Some(pos) = upper[search..].find(key) {
        let at = search + pos;
        let boundary = at == 0 || !upper.as_bytes()[at - 1].is_ascii_alphanumeric();
        let rest = upper[at + key.len()..].trim_start();
        if boundary {
            if let Some(v) = rest.strip_prefix('=') {
                let v = v.trim_start();
                let end = v.find([',', ' ', '\n', '/', '&']).unwrap_or(v.len());
                return Some(v[..end].to_string());
            }
        }
        search = at + key.len();
    }
    None
}

pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| !l.trim().is_empty()).ok_or_else(|| perr(1, "empty file"))?;
    if !lines[first].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(perr(first + 1, "missing &FCI header"));
    }
    let mut header = String::new();
    let mut body_start = None;
    for (i, l) in lines.iter().enumerate().skip(first) {
        let t = l.trim();
        let u = t.to_ascii_uppercase();
        if i > first && (u.starts_with("&END") || u == "/") {
            body_start = Some(i + 1);
            break;
        }
        header.push_str(t);
        header.push('\n');
        if i == first && (u.ends_with("&END") || u.ends_with('/')) {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or_else(|| perr(first + 1, "unterminated &FCI header"))?;

    let int_key = |key: &str| -> Result<Option<i64>> {
        match header_value(&header, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<i64>()
                .map(Some)
                .map_err(|_| perr(first + 1, format!("bad {key} value {v:?}"))),
        }
    };
    let norb = int_key("NORB")?.ok_or_else(|| perr(first + 1, "header lacks NORB"))?;
    if norb <= 0 {
        return Err(perr(first + 1, format!("NORB must be positive, got {norb}")));
    }
    let n = norb as usize;
    let nelec = int_key("NELEC")?.unwrap_or(0).max(0) as usize;
    let ms2 = int_key("MS2")?.unwrap_or(0) as i32;

    let mut one_body = DMatrix::zeros(n, n);
    let mut two_body = vec![0.0; n * n * n * n];
    let mut core_energy = 0.0;

    for (i, l) in lines.iter().enumerate().skip(body_start) {
        let lineno = i + 1;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(perr(lineno, format!("expected `value i j k l`, got {:?}", l.trim())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| perr(lineno, format!("non-numeric value {:?}", fields[0])))?;
        let mut idx = [0usize; 4];
        for k in 0..4 {
            let v: i64 = fields[k + 1]
                .parse()
                .map_err(|_| perr(lineno, format!("non-numeric index {:?}", fields[k + 1])))?;
            if v < 0 || v > norb {
                return Err(perr(lineno, format!("index {v} out of range 0..={norb}")));
            }
            idx[k] = v as usize;
        }
        match idx {
            [0, 0, 0, 0] => core_energy = value,
            [_, 0, 0, 0] => {}
            [p, q, 0, 0] if p > 0 && q > 0 => {
                one_body[(p - 1, q - 1)] = value;
                one_body[(q - 1, p - 1)] = value;
            }
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                let (p, q, r, s) = (p - 1, q - 1, r - 1, s - 1);
                for (a, b, c, d) in [
                    (p, q, r, s),
                    (q, p, r, s),
                    (p, q, s, r),
                    (q, p, s, r),
                    (r, s, p, q),
                    (s, r, p, q),
                    (r, s, q, p),
                    (s, r, q, p),
                ] {
                    two_body[eri_index(n, a, b, c, d)] = value;
                }
            }
            _ => return Err(perr(lineno, format!("invalid index pattern {idx:?}"))),
        }
    }

    Ok(IntegralSet {
        n_orbitals: n,
        n_electrons: nelec,
        ms2,
        core_energy,
        overlap: DMatrix::identity(n, n),
        one_body,
        two_body,
    })
}

pub fn format_fcidump(ints: &IntegralSet) -> String {
    let n = ints.n_orbitals;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(
        out,
        " &FCI NORB={n},NELEC={},MS2={},\n  ORBSYM={orbsym},\n  ISYM=1,\n &END",
        ints.n_electrons, ints.ms2
    );
    let mut record = |v: f64, i: usize, j: usize, k: usize, l: usize| {
        if v.abs() >= WRITE_CUTOFF {
            let _ = writeln!(out, "{v:>24.16E} {i:>4} {j:>4} {k:>4} {l:>4}");
        }
    };
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    record(ints.eri(p, q, r, s), p + 1, q + 1, r + 1, s + 1);
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            record(ints.one_body[(p, q)], p + 1, q + 1, 0, 0);
        }
    }
    // Core energy is always written, even when zero.
    let _ = writeln!(out, "{:>24.16E} {:>4} {:>4} {:>4} {:>4}", ints.core_energy, 0, 0, 0, 0);
    out
}

pub fn fcidump_read(path: impl AsRef<Path>) -> Result<IntegralSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

pub fn fcidump_write(ints: &IntegralSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_fcidump(ints)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ORBITAL: &str = " &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  0.6744   1 1 1 1
  0.1812   2 1 2 1
  0.6636   2 2 1 1
  0.6975   2 2 2 2
 -1.2525   1 1 0 0
 -0.4759   2 2 0 0
  0.7137   0 0 0 0
";

    #[test]
    fn reads_two_orbital_file() {
        let ints = parse_fcidump(TWO_ORBITAL).unwrap();
        assert_eq!(ints.n_orbitals, 2);
        assert_eq!(ints.n_electrons, 2);
        assert_eq!(ints.core_energy, 0.7137);
        assert_eq!(ints.eri(0, 1, 0, 1), 0.1812);
        assert_eq!(ints.eri(1, 0, 0, 1), 0.1812);
        assert_eq!(ints.eri(0, 0, 1, 1), 0.6636);
        assert_eq!(ints.one_body[(1, 1)], -0.4759);
        assert!(ints.symmetry_violation() == 0.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let ints = parse_fcidump(TWO_ORBITAL).unwrap();
        let back = parse_fcidump(&format_fcidump(&ints)).unwrap();
        assert_eq!(back, ints);
    }

    #[test]
    fn core_energy_record() {
        let text = "&FCI NORB=1,NELEC=1,MS2=1,&END\n 1.146553 0 0 0 0\n";
        let ints = parse_fcidump(text).unwrap();
        assert_eq!(ints.core_energy, 1.146553);
        assert_eq!(ints.ms2, 1);
    }

    #[test]
    fn errors_name_lines() {
        let missing = "NORB=2\n 1.0 1 1 1 1\n";
        match parse_fcidump(missing) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let out_of_range = TWO_ORBITAL.replace("0.6975   2 2 2 2", "0.6975   3 2 2 2");
        match parse_fcidump(&out_of_range) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
        let bad_value = TWO_ORBITAL.replace("-0.4759", "abc");
        match parse_fcidump(&bad_value) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
        assert!(parse_fcidump("&FCI NELEC=2,\n&END\n").is_err());
    }

    #[test]
    fn fortran_exponents_accepted() {
        let text = "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n 1.5D-01 1 1 0 0\n";
        assert_eq!(parse_fcidump(text).unwrap().one_body[(0, 0)], 0.15);
    }
}
