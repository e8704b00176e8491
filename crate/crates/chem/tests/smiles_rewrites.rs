use timesplit_chem::fingerprint::{morgan_fingerprint, DEFAULT_BITS, DEFAULT_RADIUS};
use timesplit_chem::smiles::{canonical_smiles, parse_smiles, write_smiles, Molecule};
use timesplit_core::rng::SeededRng;

fn corpus() -> Vec<String> {
    include_str!("data/molecules.smi")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

/// `b` is `a` relabelled so that atom `i` of `b` is atom `order[i]` of `a`.
fn same_under_map(a: &Molecule, b: &Molecule, order: &[usize]) -> bool {
    if a.atoms.len() != b.atoms.len() || a.bonds.len() != b.bonds.len() {
        return false;
    }
    let mut position = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let atoms_match = order.iter().enumerate().all(|(i, &v)| {
        let (x, y) = (&a.atoms[v], &b.atoms[i]);
        x.element == y.element
            && x.aromatic == y.aromatic
            && x.charge == y.charge
            && x.isotope == y.isotope
            && x.hydrogens == y.hydrogens
            && x.in_ring == y.in_ring
    });
    atoms_match
        && a.bonds.iter().all(|e| {
            b.bond_between(position[e.a], position[e.b])
                .is_some_and(|f| f.order == e.order && f.in_ring == e.in_ring)
        })
}

#[test]
fn corpus_parses() {
    let c = corpus();
    assert!(c.len() >= 50);
    for s in &c {
        parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
    }
}

#[test]
fn random_rewrites_preserve_graph_and_fingerprint() {
    let mut rng = SeededRng::new(2024);
    for s in corpus() {
        let m = parse_smiles(&s).unwrap();
        let fp = morgan_fingerprint(&m, DEFAULT_RADIUS, DEFAULT_BITS);
        let canon = canonical_smiles(&m);
        for _ in 0..100 {
            let mut rank: Vec<usize> = (0..m.n_atoms()).collect();
            rng.shuffle(&mut rank);
            let (text, order) = write_smiles(&m, &rank);
            let back = parse_smiles(&text).unwrap_or_else(|e| panic!("{s} -> {text}: {e}"));
            assert!(same_under_map(&m, &back, &order), "{s} -> {text}");
            assert_eq!(morgan_fingerprint(&back, DEFAULT_RADIUS, DEFAULT_BITS), fp, "{s} -> {text}");
            assert_eq!(canonical_smiles(&back), canon, "{s} -> {text}");
        }
    }
}

#[test]
fn canonical_form_is_a_fixed_point() {
    for s in corpus() {
        let c = canonical_smiles(&parse_smiles(&s).unwrap());
        let again = canonical_smiles(&parse_smiles(&c).unwrap());
        assert_eq!(c, again, "{s}");
    }
}

#[test]
fn distinct_molecules_get_distinct_fingerprints() {
    let fps: Vec<_> = ["CCO", "CCN", "CCC", "c1ccccc1", "c1ccncc1", "CC(=O)O"]
        .iter()
        .map(|s| morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 2048))
        .collect();
    for i in 0..fps.len() {
        for j in (i + 1)..fps.len() {
            assert_ne!(fps[i], fps[j]);
        }
    }
}
