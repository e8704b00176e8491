//! SMILES reading and writing.
//!
//! Supports the organic subset, aromatic lowercase atoms, bracket atoms with
//! isotope, hydrogen count, charge and atom class, explicit bonds, branches,
//! ring closures (`1` to `9`, `%nn`) and dot-separated fragments. Stereo marks
//! are accepted and dropped. Aromaticity is taken as written.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elements::{default_valences, is_element, AROMATIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Contribution to the bonding sum used for implicit hydrogens; aromatic
    /// bonds count one, with the extra electron charged to the atom.
    fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    /// Capitalised element symbol.
    pub element: String,
    pub aromatic: bool,
    pub charge: i8,
    pub isotope: Option<u16>,
    /// Hydrogen count written inside brackets.
    pub explicit_h: Option<u8>,
    pub bracket: bool,
    /// Attached hydrogens, explicit or implied by valence.
    pub hydrogens: u8,
    pub in_ring: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl Molecule {
    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbour, bond index)` lists per atom, in bond order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
        }
        adj
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.bonds
            .iter()
            .find(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

struct RawBond {
    a: usize,
    b: usize,
    order: BondOrder,
    implicit: bool,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<RawBond>,
    prev: Option<usize>,
    pending: Option<(BondOrder, usize)>,
    branches: Vec<(usize, usize)>,
    rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)>,
}

impl Parser<'_> {
    fn peek(&self, k: usize) -> Option<u8> {
        self.s.get(self.pos + k).copied()
    }

    fn add_bond(&mut self, a: usize, b: usize, order: Option<BondOrder>, offset: usize) -> Result<(), ParseError> {
        if self
            .bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return err(offset, "duplicate bond");
        }
        let both_aromatic = self.atoms[a].aromatic && self.atoms[b].aromatic;
        if order == Some(BondOrder::Aromatic) && !both_aromatic {
            return err(offset, "aromatic bond between non-aromatic atoms");
        }
        let implicit = order.is_none();
        let order = order.unwrap_or(if both_aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        });
        self.bonds.push(RawBond { a, b, order, implicit });
        Ok(())
    }

    fn push_atom(&mut self, atom: Atom, offset: usize) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(p) = self.prev {
            let order = self.pending.take().map(|(o, _)| o);
            self.add_bond(p, idx, order, offset)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let c = self.s[self.pos];
        let (symbol, aromatic, len) = match (c, self.peek(1)) {
            (b'C', Some(b'l')) => ("Cl", false, 2),
            (b'B', Some(b'r')) => ("Br", false, 2),
            (b'B', _) => ("B", false, 1),
            (b'C', _) => ("C", false, 1),
            (b'N', _) => ("N", false, 1),
            (b'O', _) => ("O", false, 1),
            (b'P', _) => ("P", false, 1),
            (b'S', _) => ("S", false, 1),
            (b'F', _) => ("F", false, 1),
            (b'I', _) => ("I", false, 1),
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            (c, _) if c.is_ascii_alphabetic() || c == b'*' => {
                return err(start, format!("unknown element {:?} outside brackets", c as char))
            }
            (c, _) => return err(start, format!("unexpected character {:?}", c as char)),
        };
        self.pos += len;
        self.push_atom(
            Atom {
                element: symbol.to_string(),
                aromatic,
                charge: 0,
                isotope: None,
                explicit_h: None,
                bracket: false,
                hydrogens: 0,
                in_ring: false,
            },
            start,
        )
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok().or(Some(u32::MAX))
    }

    fn bracket_atom(&mut self) -> Result<(), ParseError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = match self.digits() {
            Some(v) if v <= u32::from(u16::MAX) => Some(v as u16),
            Some(_) => return err(open + 1, "isotope out of range"),
            None => None,
        };
        let sym_at = self.pos;
        let (element, aromatic) = match self.peek(0) {
            Some(c) if c.is_ascii_lowercase() => {
                let two = self.peek(1).filter(u8::is_ascii_lowercase).map(|d| {
                    let mut s = (c as char).to_ascii_uppercase().to_string();
                    s.push(d as char);
                    s
                });
                let one = (c as char).to_ascii_uppercase().to_string();
                match two {
                    Some(t) if AROMATIC.contains(&t.as_str()) => {
                        self.pos += 2;
                        (t, true)
                    }
                    _ if AROMATIC.contains(&one.as_str()) => {
                        self.pos += 1;
                        (one, true)
                    }
                    _ => return err(sym_at, "unknown aromatic element"),
                }
            }
            Some(c) if c.is_ascii_uppercase() => {
                let one = (c as char).to_string();
                let two = self
                    .peek(1)
                    .filter(u8::is_ascii_lowercase)
                    .map(|d| format!("{one}{}", d as char));
                match two {
                    Some(t) if is_element(&t) => {
                        self.pos += 2;
                        (t, false)
                    }
                    _ if is_element(&one) => {
                        self.pos += 1;
                        (one, false)
                    }
                    _ => return err(sym_at, "unknown element"),
                }
            }
            None => return err(open, "unclosed bracket atom"),
            _ => return err(sym_at, "unknown element"),
        };
        if self.peek(0) == Some(b'@') {
            self.pos += 1;
            if self.peek(0) == Some(b'@') {
                self.pos += 1;
            } else if self.peek(0).is_some_and(|c| c.is_ascii_uppercase())
                && self.peek(1).is_some_and(|c| c.is_ascii_uppercase())
            {
                self.pos += 2;
                self.digits();
            }
        }
        let explicit_h = if self.peek(0) == Some(b'H') {
            self.pos += 1;
            match self.digits() {
                Some(v) if v <= 9 => v as u8,
                Some(_) => return err(self.pos, "hydrogen count out of range"),
                None => 1,
            }
        } else {
            0
        };
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek(0) {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            charge = match self.digits() {
                Some(v) if v <= 15 => unit * v as i32,
                Some(_) => return err(self.pos, "charge out of range"),
                None => {
                    let mut c = unit;
                    while self.peek(0) == Some(sign) {
                        self.pos += 1;
                        c += unit;
                    }
                    c
                }
            };
            if charge.abs() > 15 {
                return err(self.pos, "charge out of range");
            }
        }
        if self.peek(0) == Some(b':') {
            self.pos += 1;
            if self.digits().is_none() {
                return err(self.pos, "atom class needs digits");
            }
        }
        match self.peek(0) {
            Some(b']') => self.pos += 1,
            None => return err(open, "unclosed bracket atom"),
            Some(_) => return err(self.pos, "malformed bracket atom"),
        }
        self.push_atom(
            Atom {
                element,
                aromatic,
                charge: charge as i8,
                isotope,
                explicit_h: Some(explicit_h),
                bracket: true,
                hydrogens: explicit_h,
                in_ring: false,
            },
            open,
        )
    }

    fn ring_bond(&mut self) -> Result<(), ParseError> {
        let at = self.pos;
        let n = if self.s[self.pos] == b'%' {
            match (self.peek(1), self.peek(2)) {
                (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    u32::from(a - b'0') * 10 + u32::from(b - b'0')
                }
                _ => return err(at, "'%' must be followed by two digits"),
            }
        } else {
            self.pos += 1;
            u32::from(self.s[at] - b'0')
        };
        let cur = match self.prev {
            Some(c) => c,
            None => return err(at, "ring bond without a preceding atom"),
        };
        let pending = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&n) {
            Some((other, opened, _)) => {
                if other == cur {
                    return err(at, format!("ring bond {n} closes on its own atom"));
                }
                let order = match (opened, pending) {
                    (Some(a), Some(b)) if a != b => return err(at, format!("conflicting orders for ring bond {n}")),
                    (Some(a), _) | (None, Some(a)) => Some(a),
                    (None, None) => None,
                };
                self.add_bond(other, cur, order, at)
            }
            None => {
                self.rings.insert(n, (cur, pending, at));
                Ok(())
            }
        }
    }

    fn run(mut self) -> Result<Molecule, ParseError> {
        if self.s.is_empty() {
            return err(0, "empty SMILES");
        }
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            match c {
                b'(' => {
                    let p = match self.prev {
                        Some(p) => p,
                        None => return err(self.pos, "branch without a preceding atom"),
                    };
                    if let Some((_, off)) = self.pending {
                        return err(off, "bond symbol before a branch");
                    }
                    self.branches.push((p, self.pos));
                    self.pos += 1;
                }
                b')' => {
                    let (p, _) = match self.branches.pop() {
                        Some(b) => b,
                        None => return err(self.pos, "unmatched ')'"),
                    };
                    if self.s[self.pos - 1] == b'(' {
                        return err(self.pos, "empty branch");
                    }
                    if let Some((_, off)) = self.pending {
                        return err(off, "bond symbol without a following atom");
                    }
                    self.prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, off)) = self.pending {
                        return err(off, "bond symbol without a following atom");
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return err(self.pos, "consecutive bond symbols");
                    }
                    if self.prev.is_none() {
                        return err(self.pos, "bond symbol without a preceding atom");
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, self.pos));
                    self.pos += 1;
                }
                b'$' => return err(self.pos, "quadruple bonds are not supported"),
                b'0'..=b'9' | b'%' => self.ring_bond()?,
                b'[' => self.bracket_atom()?,
                _ => self.organic_atom()?,
            }
        }
        if let Some((_, off)) = self.pending {
            return err(off, "bond symbol without a following atom");
        }
        if let Some(&(_, off)) = self.branches.last() {
            return err(off, "unclosed branch");
        }
        if let Some((n, &(_, _, off))) = self.rings.iter().min_by_key(|(_, v)| v.2) {
            return err(off, format!("unclosed ring bond {n}"));
        }
        if self.atoms.is_empty() {
            return err(0, "no atoms");
        }
        Ok(finish(self.atoms, self.bonds))
    }
}

/// Marks ring bonds (non-bridges), demotes implicit aromatic bonds outside
/// rings to single, and fills in implicit hydrogens.
fn finish(mut atoms: Vec<Atom>, raw: Vec<RawBond>) -> Molecule {
    let n = atoms.len();
    let mut adj = vec![Vec::new(); n];
    for (i, b) in raw.iter().enumerate() {
        adj[b.a].push((b.b, i));
        adj[b.b].push((b.a, i));
    }
    let bridge = bridges(n, &adj, raw.len());
    let bonds: Vec<Bond> = raw
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let in_ring = !bridge[i];
            let order = if b.implicit && b.order == BondOrder::Aromatic && !in_ring {
                BondOrder::Single
            } else {
                b.order
            };
            Bond { a: b.a, b: b.b, order, in_ring }
        })
        .collect();
    for b in &bonds {
        if b.in_ring {
            atoms[b.a].in_ring = true;
            atoms[b.b].in_ring = true;
        }
    }
    let mut sums = vec![0u8; n];
    for b in &bonds {
        sums[b.a] = sums[b.a].saturating_add(b.order.valence());
        sums[b.b] = sums[b.b].saturating_add(b.order.valence());
    }
    for (i, a) in atoms.iter_mut().enumerate() {
        if !a.bracket {
            let s = sums[i] + u8::from(a.aromatic);
            a.hydrogens = default_valences(&a.element)
                .iter()
                .find(|&&v| v >= s)
                .map_or(0, |&v| v - s);
        }
    }
    Molecule { atoms, bonds }
}

fn bridges(n: usize, adj: &[Vec<(usize, usize)>], n_bonds: usize) -> Vec<bool> {
    fn dfs(
        v: usize,
        parent_bond: Option<usize>,
        adj: &[Vec<(usize, usize)>],
        timer: &mut usize,
        disc: &mut [usize],
        low: &mut [usize],
        bridge: &mut [bool],
    ) {
        *timer += 1;
        disc[v] = *timer;
        low[v] = *timer;
        for &(w, e) in &adj[v] {
            if Some(e) == parent_bond {
                continue;
            }
            if disc[w] == 0 {
                dfs(w, Some(e), adj, timer, disc, low, bridge);
                low[v] = low[v].min(low[w]);
                if low[w] > disc[v] {
                    bridge[e] = true;
                }
            } else {
                low[v] = low[v].min(disc[w]);
            }
        }
    }
    let mut disc = vec![0; n];
    let mut low = vec![0; n];
    let mut bridge = vec![false; n_bonds];
    let mut timer = 0;
    for v in 0..n {
        if disc[v] == 0 {
            dfs(v, None, adj, &mut timer, &mut disc, &mut low, &mut bridge);
        }
    }
    bridge
}

pub fn parse_smiles(s: &str) -> Result<Molecule, ParseError> {
    Parser {
        s: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    }
    .run()
}

fn atom_text(a: &Atom) -> String {
    let symbol = if a.aromatic {
        a.element.to_ascii_lowercase()
    } else {
        a.element.clone()
    };
    if !a.bracket {
        return symbol;
    }
    let mut s = String::from("[");
    if let Some(i) = a.isotope {
        s.push_str(&i.to_string());
    }
    s.push_str(&symbol);
    match a.explicit_h.unwrap_or(0) {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn bond_text(m: &Molecule, b: &Bond) -> &'static str {
    let both_aromatic = m.atoms[b.a].aromatic && m.atoms[b.b].aromatic;
    match b.order {
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if b.in_ring => "",
        BondOrder::Aromatic => ":",
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
    }
}

/// Writes `m` as SMILES, starting each fragment at its lowest-ranked atom
/// and visiting neighbours by ascending `rank`. Returns the text and the
/// atoms in the order they were written, which is the atom order a parser
/// will assign.
pub fn write_smiles(m: &Molecule, rank: &[usize]) -> (String, Vec<usize>) {
    let n = m.n_atoms();
    assert_eq!(rank.len(), n, "one rank per atom");
    let mut adj = m.adjacency();
    for list in &mut adj {
        list.sort_by_key(|&(w, _)| rank[w]);
    }
    let mut visited = vec![false; n];
    let mut used = vec![false; m.bonds.len()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // ring-closure bond ids touching each atom, in discovery order
    let mut rings_at: Vec<Vec<usize>> = vec![Vec::new(); n];

    fn explore(
        v: usize,
        adj: &[Vec<(usize, usize)>],
        visited: &mut [bool],
        used: &mut [bool],
        children: &mut [Vec<(usize, usize)>],
        rings_at: &mut [Vec<usize>],
    ) {
        visited[v] = true;
        for &(w, e) in &adj[v] {
            if used[e] {
                continue;
            }
            used[e] = true;
            if visited[w] {
                rings_at[v].push(e);
                rings_at[w].push(e);
            } else {
                children[v].push((w, e));
                explore(w, adj, visited, used, children, rings_at);
            }
        }
    }

    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by_key(|&v| rank[v]);
    let mut starts = Vec::new();
    for &r in &roots {
        if !visited[r] {
            starts.push(r);
            explore(r, &adj, &mut visited, &mut used, &mut children, &mut rings_at);
        }
    }

    struct Emit<'a> {
        m: &'a Molecule,
        children: &'a [Vec<(usize, usize)>],
        rings_at: &'a [Vec<usize>],
        digit_of: Vec<Option<u32>>,
        free: std::collections::BTreeSet<u32>,
        out: String,
        order: Vec<usize>,
    }
    impl Emit<'_> {
        fn atom(&mut self, v: usize) {
            self.order.push(v);
            self.out.push_str(&atom_text(&self.m.atoms[v]));
            for &e in &self.rings_at[v] {
                match self.digit_of[e] {
                    Some(d) => {
                        self.out.push_str(&digit_text(d));
                        self.free.insert(d);
                    }
                    None => {
                        let d = *self.free.iter().next().expect("digits available");
                        self.free.remove(&d);
                        self.digit_of[e] = Some(d);
                        self.out.push_str(bond_text(self.m, &self.m.bonds[e]));
                        self.out.push_str(&digit_text(d));
                    }
                }
            }
            let kids = &self.children[v];
            for (i, &(w, e)) in kids.iter().enumerate() {
                let last = i + 1 == kids.len();
                if !last {
                    self.out.push('(');
                }
                self.out.push_str(bond_text(self.m, &self.m.bonds[e]));
                self.atom(w);
                if !last {
                    self.out.push(')');
                }
            }
        }
    }
    fn digit_text(d: u32) -> String {
        if d < 10 {
            d.to_string()
        } else {
            format!("%{d}")
        }
    }

    let mut emit = Emit {
        m,
        children: &children,
        rings_at: &rings_at,
        digit_of: vec![None; m.bonds.len()],
        free: (1..100).collect(),
        out: String::new(),
        order: Vec::with_capacity(n),
    };
    for (i, &s) in starts.iter().enumerate() {
        if i > 0 {
            emit.out.push('.');
        }
        emit.atom(s);
    }
    (emit.out, emit.order)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct AtomKey {
    element: String,
    aromatic: bool,
    charge: i8,
    isotope: Option<u16>,
    hydrogens: u8,
    degree: usize,
    in_ring: bool,
    bracket: bool,
}

fn relabel<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut distinct: Vec<K> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    keys.iter()
        .map(|k| distinct.binary_search(k).expect("present"))
        .collect()
}

fn count_classes(c: &[usize]) -> usize {
    c.iter().max().map_or(0, |m| m + 1)
}

/// Canonical atom ranks: classes by atom invariants, refined by neighbour
/// classes until stable, with remaining ties broken one atom at a time.
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.n_atoms();
    let adj = m.adjacency();
    let keys: Vec<AtomKey> = m
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| AtomKey {
            element: a.element.clone(),
            aromatic: a.aromatic,
            charge: a.charge,
            isotope: a.isotope,
            hydrogens: a.hydrogens,
            degree: adj[i].len(),
            in_ring: a.in_ring,
            bracket: a.bracket,
        })
        .collect();
    let refine = |mut class: Vec<usize>| -> Vec<usize> {
        loop {
            let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<(u8, usize)> = adj[v]
                        .iter()
                        .map(|&(w, e)| (m.bonds[e].order.code(), class[w]))
                        .collect();
                    nb.sort_unstable();
                    (class[v], nb)
                })
                .collect();
            let next = relabel(&keys);
            if count_classes(&next) == count_classes(&class) {
                return next;
            }
            class = next;
        }
    };
    let mut class = refine(relabel(&keys));
    while count_classes(&class) < n {
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in class.iter().enumerate() {
            members.entry(c).or_default().push(v);
        }
        let (&c, vs) = members.iter().find(|(_, v)| v.len() > 1).expect("a tie remains");
        let chosen = vs[0];
        let split: Vec<(usize, bool)> = (0..n).map(|v| (class[v], !(class[v] == c && v == chosen))).collect();
        class = refine(relabel(&split));
    }
    class
}

pub fn canonical_smiles(m: &Molecule) -> String {
    write_smiles(m, &canonical_ranks(m)).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        let els: Vec<&str> = m.atoms.iter().map(|a| a.element.as_str()).collect();
        assert_eq!(els, vec!["C", "C", "O"]);
        assert_eq!(m.bonds.len(), 2);
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Single && !b.in_ring));
        let h: Vec<u8> = m.atoms.iter().map(|a| a.hydrogens).collect();
        assert_eq!(h, vec![3, 2, 1]);
    }

    #[test]
    fn benzene() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.atoms.len(), 6);
        assert!(m.atoms.iter().all(|a| a.aromatic && a.in_ring && a.hydrogens == 1));
        assert_eq!(m.bonds.len(), 6);
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Aromatic && b.in_ring));
    }

    #[test]
    fn salt() {
        let m = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert!(m.bonds.is_empty());
        assert_eq!((m.atoms[0].charge, m.atoms[1].charge), (1, -1));
        assert_eq!(m.atoms[0].element, "Na");
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.message, "unclosed ring bond 1");
        assert_eq!(e.offset, 1);
        assert_eq!(parse_smiles("CC(C").unwrap_err().offset, 2);
        assert_eq!(parse_smiles("CC)").unwrap_err().message, "unmatched ')'");
        assert_eq!(parse_smiles("C[Xx]").unwrap_err().offset, 2);
        assert_eq!(parse_smiles("C[C").unwrap_err().message, "unclosed bracket atom");
        assert!(parse_smiles("CQ").is_err());
        assert!(parse_smiles("").is_err());
        assert!(parse_smiles("C=").is_err());
        assert!(parse_smiles("C11").is_err());
        assert!(parse_smiles("C12CC12").is_err());
        assert!(parse_smiles("C:C").is_err());
        assert!(parse_smiles("C()C").is_err());
    }

    #[test]
    fn brackets_and_stereo() {
        let m = parse_smiles("[13CH3][C@@H](N)C(=O)[O-]").unwrap();
        assert_eq!(m.atoms[0].isotope, Some(13));
        assert_eq!(m.atoms[0].hydrogens, 3);
        assert_eq!(m.atoms[1].hydrogens, 1);
        assert_eq!(m.atoms[5].charge, -1);
        assert_eq!(m.atoms[2].hydrogens, 2);
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bonds[1].order, BondOrder::Double);
        let m = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(m.atoms[3].hydrogens, 1);
        assert_eq!(parse_smiles("[Fe++]").unwrap().atoms[0].charge, 2);
        assert_eq!(parse_smiles("[NH4+:3]").unwrap().atoms[0].hydrogens, 4);
        assert_eq!(parse_smiles("C%12CC%12").unwrap().bonds.len(), 3);
    }

    #[test]
    fn implicit_hydrogens() {
        let m = parse_smiles("CS(=O)(=O)C").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
        let m = parse_smiles("C#N").unwrap();
        assert_eq!((m.atoms[0].hydrogens, m.atoms[1].hydrogens), (1, 0));
        let m = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(m.atoms[3].hydrogens, 0);
    }

    #[test]
    fn biaryl_link_is_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bond_between(5, 6).unwrap();
        assert_eq!(link.order, BondOrder::Single);
        assert!(!link.in_ring);
        assert_eq!(m.atoms[5].hydrogens, 0);
    }

    #[test]
    fn canonical_is_order_free() {
        for (a, b) in [("CCO", "OCC"), ("c1ccccc1O", "Oc1ccccc1"), ("CC(=O)Nc1ccc(O)cc1", "c1cc(NC(C)=O)ccc1O")] {
            let ca = canonical_smiles(&parse_smiles(a).unwrap());
            let cb = canonical_smiles(&parse_smiles(b).unwrap());
            assert_eq!(ca, cb);
            assert_eq!(canonical_smiles(&parse_smiles(&ca).unwrap()), ca);
        }
    }
}
