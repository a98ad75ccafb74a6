//! Lamplighter groups `Z_m wr Z^d` and finitary permutation groups
//! `Sym_*(Z^d)`, optionally extended by the translations of `Z^d`.
//!
//! Lamplighter: `(f, b)(f', b') = (f + f'(. - b), b + b')`. The subgroup is
//! `K = {(f, 0) : f(0) = 0}`; its conjugates are `K_c = {(f, 0) : f(c) = 0}`,
//! indexed by base points with `c.h = c - base(h)`.
//!
//! Permutations: an element `(pi, s)` is the map `y -> pi(y + s)`, and the
//! product is composition, `(g h)(y) = g(h(y))`. The subgroup is the
//! stabilizer of `0`; its conjugates are point stabilizers, indexed by points
//! with `x.h = h^{-1}(x)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::freegroup::FiniteDistribution;
use crate::group::{add, sub, Group, Point};
use crate::irs::{ConjugacyFamily, MhoResult, Norm};

const AXES: [char; 3] = ['x', 'y', 'z'];

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("dimension {dim} not in 1..=3")))
    }
}

fn unit(axis: usize, sign: i64) -> Point {
    let mut p = [0; 3];
    p[axis] = sign;
    p
}

fn neg(p: &Point) -> Point {
    [-p[0], -p[1], -p[2]]
}

fn parse_axis(s: &str, dim: usize) -> Result<usize> {
    let axis = AXES
        .iter()
        .position(|c| s.len() == 1 && s.starts_with(*c))
        .ok_or_else(|| Error::Parse(format!("unknown axis {s:?}")))?;
    if axis >= dim {
        return Err(Error::Invalid(format!("axis {s} needs dimension > {axis}")));
    }
    Ok(axis)
}

/// `Z_m wr Z^d` with `m >= 2`, `1 <= d <= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lamplighter {
    pub lamp_order: u8,
    pub dim: usize,
}

/// A finitely supported lamp configuration and a base position.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampElement {
    /// Nonzero lamp values only.
    pub lamps: BTreeMap<Point, u8>,
    pub base: Point,
}

impl fmt::Debug for LampElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.lamps, self.base)
    }
}

impl Lamplighter {
    pub fn new(lamp_order: u8, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if lamp_order < 2 {
            return Err(Error::Invalid(format!(
                "lamp group Z_{lamp_order} is trivial"
            )));
        }
        Ok(Lamplighter { lamp_order, dim })
    }

    pub fn element(
        &self,
        lamps: impl IntoIterator<Item = (Point, i64)>,
        base: Point,
    ) -> LampElement {
        let m = self.lamp_order as i64;
        let mut out = BTreeMap::new();
        for (z, v) in lamps {
            let v = v.rem_euclid(m) as u8;
            let e: &mut u8 = out.entry(z).or_insert(0);
            *e = ((*e as u16 + v as u16) % m as u16) as u8;
        }
        out.retain(|_, v| *v != 0);
        LampElement { lamps: out, base }
    }

    pub fn shift(&self, b: Point) -> LampElement {
        LampElement {
            lamps: BTreeMap::new(),
            base: b,
        }
    }

    /// Lamp `+1` at the origin.
    pub fn flip(&self) -> LampElement {
        self.element([([0; 3], 1)], [0; 3])
    }

    pub fn wreath_norm(&self, g: &LampElement) -> Norm {
        if g.base != [0; 3] {
            Norm::Infinite
        } else {
            Norm::Finite(g.lamps.len())
        }
    }

    /// `(f|_Theta, base)`; equal iff same `Core_Theta`-coset.
    pub fn core_coset_key(&self, theta: &BTreeSet<Point>, g: &LampElement) -> (Vec<u8>, Point) {
        (
            theta
                .iter()
                .map(|c| g.lamps.get(c).copied().unwrap_or(0))
                .collect(),
            g.base,
        )
    }

    /// Atoms `+x`, `-y`, `flip`, and `*`-products such as `flip*+x`.
    pub fn parse_atom(&self, s: &str) -> Result<LampElement> {
        let mut g = self.identity();
        for part in s.split('*') {
            let part = part.trim();
            let x = match part {
                "flip" => self.flip(),
                "e" | "id" => self.identity(),
                _ => {
                    let (sign, axis) = signed_axis(part, self.dim)?;
                    self.shift(unit(axis, sign))
                }
            };
            g = self.mul(&g, &x);
        }
        Ok(g)
    }

    /// Uniform on the `2d` unit shifts and `flip`.
    pub fn standard_measure(&self) -> FiniteDistribution<LampElement> {
        let mut atoms: Vec<LampElement> = (0..self.dim)
            .flat_map(|i| [self.shift(unit(i, 1)), self.shift(unit(i, -1))])
            .collect();
        atoms.push(self.flip());
        uniform(atoms)
    }

    pub fn name(&self) -> String {
        format!("lamplighter(z{}, z{})", self.lamp_order, self.dim)
    }
}

fn signed_axis(part: &str, dim: usize) -> Result<(i64, usize)> {
    let (sign, rest) = match part.chars().next() {
        Some('+') => (1, &part[1..]),
        Some('-') => (-1, &part[1..]),
        _ => return Err(Error::Parse(format!("unknown atom {part:?}"))),
    };
    Ok((sign, parse_axis(rest, dim)?))
}

fn uniform<K: Ord + Clone>(atoms: Vec<K>) -> FiniteDistribution<K> {
    FiniteDistribution::from_weights(atoms.into_iter().map(|a| (a, 1.0)))
        .expect("nonempty atom list")
}

impl Group for Lamplighter {
    type Element = LampElement;

    fn identity(&self) -> LampElement {
        LampElement {
            lamps: BTreeMap::new(),
            base: [0; 3],
        }
    }

    fn mul(&self, g: &LampElement, h: &LampElement) -> LampElement {
        let m = self.lamp_order as u16;
        let mut lamps = g.lamps.clone();
        for (z, v) in &h.lamps {
            let e = lamps.entry(add(z, &g.base)).or_insert(0);
            *e = ((*e as u16 + *v as u16) % m) as u8;
        }
        lamps.retain(|_, v| *v != 0);
        LampElement {
            lamps,
            base: add(&g.base, &h.base),
        }
    }

    fn inv(&self, g: &LampElement) -> LampElement {
        let m = self.lamp_order;
        LampElement {
            lamps: g
                .lamps
                .iter()
                .map(|(z, v)| (sub(z, &g.base), m - v))
                .collect(),
            base: neg(&g.base),
        }
    }
}

impl ConjugacyFamily for Lamplighter {
    type Index = Point;
    type Coset = (u8, Point);
    type ClassKey = Point;

    fn mho(&self, g: &LampElement) -> Result<MhoResult<Point>> {
        if g.base != [0; 3] {
            return Ok(MhoResult::Infinite(format!(
                "base coordinate {:?} is not the identity",
                g.base
            )));
        }
        Ok(MhoResult::Finite(g.lamps.keys().copied().collect()))
    }

    fn act_index(&self, c: &Point, h: &LampElement) -> Point {
        sub(c, &h.base)
    }

    fn coset_of(&self, c: &Point, g: &LampElement) -> (u8, Point) {
        (g.lamps.get(c).copied().unwrap_or(0), g.base)
    }

    fn finite_norm_key(&self, g: &LampElement) -> Point {
        g.base
    }
}

/// `Sym_*(Z^d)`, extended by the translations of `Z^d` when `shift` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FinPerm {
    pub dim: usize,
    pub shift: bool,
}

/// The map `y -> perm(y + shift)`, with `perm` stored on its support.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinPermElement {
    pub perm: BTreeMap<Point, Point>,
    pub shift: Point,
}

impl fmt::Debug for FinPermElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.perm, self.shift)
    }
}

impl FinPermElement {
    fn pi(&self, z: &Point) -> Point {
        self.perm.get(z).copied().unwrap_or(*z)
    }

    /// `g(y)`.
    pub fn apply(&self, y: &Point) -> Point {
        self.pi(&add(y, &self.shift))
    }
}

impl FinPerm {
    pub fn new(dim: usize, shift: bool) -> Result<Self> {
        check_dim(dim)?;
        Ok(FinPerm { dim, shift })
    }

    /// A permutation from its values on a finite set; must be a bijection there.
    pub fn permutation(
        &self,
        map: impl IntoIterator<Item = (Point, Point)>,
        shift: Point,
    ) -> Result<FinPermElement> {
        let mut perm: BTreeMap<Point, Point> = map.into_iter().collect();
        let domain: BTreeSet<Point> = perm.keys().copied().collect();
        let image: BTreeSet<Point> = perm.values().copied().collect();
        if domain != image {
            return Err(Error::Invalid(
                "permutation map is not a bijection of its domain".into(),
            ));
        }
        if !self.shift && shift != [0; 3] {
            return Err(Error::Invalid(
                "this permutation group has no shift coordinate".into(),
            ));
        }
        perm.retain(|k, v| k != v);
        Ok(FinPermElement { perm, shift })
    }

    pub fn transposition(&self, x: Point, y: Point) -> FinPermElement {
        self.permutation([(x, y), (y, x)], [0; 3])
            .expect("transpositions are bijections")
    }

    pub fn translation(&self, s: Point) -> Result<FinPermElement> {
        self.permutation([], s)
    }

    pub fn perm_norm(&self, g: &FinPermElement) -> Norm {
        if g.shift != [0; 3] {
            Norm::Infinite
        } else {
            Norm::Finite(g.perm.len())
        }
    }

    /// `(x -> g^{-1}(x) for x in Theta, shift)`; equal iff same `Core_Theta`-coset.
    pub fn core_coset_key(
        &self,
        theta: &BTreeSet<Point>,
        g: &FinPermElement,
    ) -> (Vec<Point>, Point) {
        let gi = self.inv(g);
        (theta.iter().map(|x| gi.apply(x)).collect(), g.shift)
    }

    /// Atoms `+x`, `-z` (translations), `swap-x` (the transposition of `0`
    /// and `e_x`), and `*`-products.
    pub fn parse_atom(&self, s: &str) -> Result<FinPermElement> {
        let mut g = self.identity();
        for part in s.split('*') {
            let part = part.trim();
            let x = if let Some(ax) = part.strip_prefix("swap-") {
                self.transposition([0; 3], unit(parse_axis(ax, self.dim)?, 1))
            } else if part == "e" || part == "id" {
                self.identity()
            } else {
                let (sign, axis) = signed_axis(part, self.dim)?;
                self.translation(unit(axis, sign))?
            };
            g = self.mul(&g, &x);
        }
        Ok(g)
    }

    /// Uniform on the transpositions `(0 e_i)`, plus the unit shifts when extended.
    pub fn standard_measure(&self) -> FiniteDistribution<FinPermElement> {
        let mut atoms: Vec<FinPermElement> = (0..self.dim)
            .map(|i| self.transposition([0; 3], unit(i, 1)))
            .collect();
        if self.shift {
            for i in 0..self.dim {
                atoms.push(self.translation(unit(i, 1)).expect("shift allowed"));
                atoms.push(self.translation(unit(i, -1)).expect("shift allowed"));
            }
        }
        uniform(atoms)
    }

    pub fn name(&self) -> String {
        format!("finperm(z{}, shift = {})", self.dim, self.shift)
    }
}

impl Group for FinPerm {
    type Element = FinPermElement;

    fn identity(&self) -> FinPermElement {
        FinPermElement {
            perm: BTreeMap::new(),
            shift: [0; 3],
        }
    }

    /// Composition: `(g h)(y) = g(h(y))`.
    fn mul(&self, g: &FinPermElement, h: &FinPermElement) -> FinPermElement {
        // with z = y + s_g + s_h: pi(z) = pi_g(pi_h(z - s_g) + s_g)
        let candidates: BTreeSet<Point> = g
            .perm
            .keys()
            .copied()
            .chain(h.perm.keys().map(|z| add(z, &g.shift)))
            .collect();
        let mut perm = BTreeMap::new();
        for z in candidates {
            let v = g.pi(&add(&h.pi(&sub(&z, &g.shift)), &g.shift));
            if v != z {
                perm.insert(z, v);
            }
        }
        FinPermElement {
            perm,
            shift: add(&g.shift, &h.shift),
        }
    }

    fn inv(&self, g: &FinPermElement) -> FinPermElement {
        // g^{-1}(y) = pi^{-1}(y) - s = pi'(y - s) with pi'(z) = pi^{-1}(z + s) - s
        let s = g.shift;
        FinPermElement {
            perm: g
                .perm
                .iter()
                .map(|(x, y)| (sub(y, &s), sub(x, &s)))
                .collect(),
            shift: neg(&s),
        }
    }
}

impl ConjugacyFamily for FinPerm {
    type Index = Point;
    type Coset = Point;
    type ClassKey = Point;

    fn mho(&self, g: &FinPermElement) -> Result<MhoResult<Point>> {
        if g.shift != [0; 3] {
            return Ok(MhoResult::Infinite(format!(
                "shift coordinate {:?} is not the identity",
                g.shift
            )));
        }
        Ok(MhoResult::Finite(g.perm.keys().copied().collect()))
    }

    fn act_index(&self, x: &Point, h: &FinPermElement) -> Point {
        self.inv(h).apply(x)
    }

    fn coset_of(&self, x: &Point, g: &FinPermElement) -> Point {
        self.inv(g).apply(x)
    }

    fn finite_norm_key(&self, g: &FinPermElement) -> Point {
        g.shift
    }
}

/// Parse `atom weight` lines with a group's atom parser; weights are normalised.
pub fn parse_measure<E: Ord + Clone>(
    text: &str,
    parse_atom: impl Fn(&str) -> Result<E>,
) -> Result<FiniteDistribution<E>> {
    let mut weights = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let [atom, w] = f.as_slice() else {
            return Err(Error::Parse(format!(
                "line {}: expected `atom weight`, got {raw:?}",
                lineno + 1
            )));
        };
        let w: f64 = w
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad weight {w:?}", lineno + 1)))?;
        weights.push((parse_atom(atom)?, w));
    }
    FiniteDistribution::from_weights(weights)
}
