use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::units::ANGSTROM_TO_BOHR;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Element {
    H,
    He,
    Li,
    Be,
    B,
    C,
    N,
    O,
    F,
    Ne,
}

impl Element {
    pub fn nuclear_charge(self) -> u32 {
        match self {
            Element::H => 1,
            Element::He => 2,
            Element::Li => 3,
            Element::Be => 4,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Ne => 10,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::He => "He",
            Element::Li => "Li",
            Element::Be => "Be",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Ne => "Ne",
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let e = match s.to_ascii_lowercase().as_str() {
            "h" => Element::H,
            "he" => Element::He,
            "li" => Element::Li,
            "be" => Element::Be,
            "b" => Element::B,
            "c" => Element::C,
            "n" => Element::N,
            "o" => Element::O,
            "f" => Element::F,
            "ne" => Element::Ne,
            _ => return Err(Error::Unsupported(format!("element {s:?}"))),
        };
        Ok(e)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LengthUnit {
    Angstrom,
    Bohr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub position: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub atoms: Vec<Atom>,
    pub units: LengthUnit,
}

impl Geometry {
    pub fn new(atoms: Vec<Atom>, units: LengthUnit) -> Result<Self> {
        let g = Geometry { atoms, units };
        for i in 0..g.atoms.len() {
            for j in 0..i {
                if g.distance(i, j) <= 0.0 {
                    return Err(Error::invalid(format!("atoms {j} and {i} coincide")));
                }
            }
        }
        Ok(g)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.atoms[i].position, &self.atoms[j].position);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Positions in bohr.
    pub fn positions_bohr(&self) -> Vec<[f64; 3]> {
        let f = match self.units {
            LengthUnit::Angstrom => ANGSTROM_TO_BOHR,
            LengthUnit::Bohr => 1.0,
        };
        self.atoms
            .iter()
            .map(|a| a.position.map(|c| c * f))
            .collect()
    }

    pub fn n_electrons(&self) -> usize {
        self.atoms
            .iter()
            .map(|a| a.element.nuclear_charge() as usize)
            .sum()
    }

    /// Nuclear repulsion `Σ Z_i Z_j / r_ij` in hartree.
    pub fn nuclear_repulsion(&self) -> f64 {
        let pos = self.positions_bohr();
        let mut e = 0.0;
        for i in 0..pos.len() {
            for j in 0..i {
                let r = ((pos[i][0] - pos[j][0]).powi(2)
                    + (pos[i][1] - pos[j][1]).powi(2)
                    + (pos[i][2] - pos[j][2]).powi(2))
                .sqrt();
                e += (self.atoms[i].element.nuclear_charge()
                    * self.atoms[j].element.nuclear_charge()) as f64
                    / r;
            }
        }
        e
    }

    /// Parse `element x y z` lines in Å. A leading atom-count line followed by a
    /// comment line (plain XYZ files) is accepted too.
    pub fn parse_xyz(text: &str) -> Result<Self> {
        let mut lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .collect();
        if let Some((_, first)) = lines.first() {
            if first.parse::<usize>().is_ok() {
                let n_skip = 2.min(lines.len());
                lines.drain(..n_skip);
            }
        }
        let mut atoms = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected `element x y z`, got {line:?}"),
                });
            }
            let element: Element = fields[0].parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let mut position = [0.0; 3];
            for (k, f) in fields[1..].iter().enumerate() {
                position[k] = f.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad coordinate {f:?}"),
                })?;
            }
            atoms.push(Atom { element, position });
        }
        if atoms.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "no atoms".into(),
            });
        }
        Geometry::new(atoms, LengthUnit::Angstrom)
    }

    pub fn to_xyz(&self) -> String {
        let f = match self.units {
            LengthUnit::Angstrom => 1.0,
            LengthUnit::Bohr => 1.0 / ANGSTROM_TO_BOHR,
        };
        let mut out = String::new();
        for a in &self.atoms {
            out += &format!(
                "{} {:.10} {:.10} {:.10}\n",
                a.element,
                a.position[0] * f,
                a.position[1] * f,
                a.position[2] * f
            );
        }
        out
    }
}

/// Linear hydrogen chain along z, first atom at the origin, spacings in Å.
pub fn build_h_chain(spacings: &[f64]) -> Result<Geometry> {
    let mut z = 0.0;
    let mut atoms = vec![Atom {
        element: Element::H,
        position: [0.0, 0.0, 0.0],
    }];
    for &s in spacings {
        if !(s > 0.0 && s < 100.0) {
            return Err(Error::invalid(format!(
                "spacing {s} Å outside (0, 100)"
            )));
        }
        z += s;
        atoms.push(Atom {
            element: Element::H,
            position: [0.0, 0.0, z],
        });
    }
    Geometry::new(atoms, LengthUnit::Angstrom)
}
