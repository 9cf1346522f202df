mod common;

use std::collections::HashSet;

use molbench::fingerprints::{
    atom_pair_identifiers, ecfp_identifiers, fingerprint, fingerprint_matrix, torsion_identifiers,
    FingerprintConfig, FingerprintKind,
};
use molbench::molgraph::parse_smiles;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KINDS: [FingerprintKind; 3] = [
    FingerprintKind::Ecfp,
    FingerprintKind::AtomPair,
    FingerprintKind::TopologicalTorsion,
];

#[test]
fn reversed_ethanol_gives_identical_vectors() {
    let a = parse_smiles("OCC").unwrap();
    let b = parse_smiles("CCO").unwrap();
    for kind in KINDS {
        for counted in [true, false] {
            let cfg = FingerprintConfig::new(kind).with_counted(counted);
            assert_eq!(
                fingerprint(&a, &cfg).unwrap(),
                fingerprint(&b, &cfg).unwrap()
            );
        }
    }
}

#[test]
fn permuted_corpus_gives_identical_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (smi, m) in common::corpus() {
        let text = common::random_smiles(&m, &mut rng);
        let p = parse_smiles(&text).unwrap();
        for kind in KINDS {
            let cfg = FingerprintConfig::new(kind).with_radius(3);
            assert_eq!(
                fingerprint(&m, &cfg).unwrap(),
                fingerprint(&p, &cfg).unwrap(),
                "{kind}: {smi} vs {text}"
            );
        }
    }
}

#[test]
fn ecfp_identifier_sets_grow_with_radius() {
    for (smi, m) in common::corpus() {
        for r in 0..4 {
            let small: HashSet<u64> = ecfp_identifiers(&m, r).into_iter().collect();
            let large: HashSet<u64> = ecfp_identifiers(&m, r + 1).into_iter().collect();
            assert!(small.is_subset(&large), "{smi} radius {r}");
        }
    }
}

#[test]
fn binarized_counts_equal_binary_vectors() {
    for (_, m) in common::corpus() {
        for kind in KINDS {
            let counted = fingerprint(&m, &FingerprintConfig::new(kind)).unwrap();
            let binary =
                fingerprint(&m, &FingerprintConfig::new(kind).with_counted(false)).unwrap();
            assert_eq!(counted.binarized(), binary.values);
            assert!(binary.values.iter().all(|&v| v <= 1));
        }
    }
}

#[test]
fn count_sums_match_brute_force() {
    let mut checked = 0;
    for (smi, m) in common::corpus() {
        if m.atom_count() > 12 {
            continue;
        }
        checked += 1;
        let pairs = fingerprint(&m, &FingerprintConfig::new(FingerprintKind::AtomPair)).unwrap();
        assert_eq!(
            pairs.total() as usize,
            common::brute_force_pair_count(&m, 30),
            "{smi}"
        );
        let torsions = fingerprint(
            &m,
            &FingerprintConfig::new(FingerprintKind::TopologicalTorsion),
        )
        .unwrap();
        assert_eq!(
            torsions.total() as usize,
            common::brute_force_path_count(&m, 4),
            "{smi}"
        );
        assert_eq!(atom_pair_identifiers(&m).len() as u64, pairs.total());
        assert_eq!(torsion_identifiers(&m).len() as u64, torsions.total());
    }
    assert!(checked >= 50, "only {checked} small molecules");
}

#[test]
fn emissions_bound_the_vector_total() {
    for (_, m) in common::corpus() {
        let cfg = FingerprintConfig::default().with_length(64);
        let fp = fingerprint(&m, &cfg).unwrap();
        assert_eq!(fp.total(), ecfp_identifiers(&m, 2).len() as u64);
        let binary = fingerprint(&m, &cfg.clone().with_counted(false)).unwrap();
        assert!(binary.total() <= fp.total());
    }
}

#[test]
fn matrix_rows_follow_molecule_order() {
    let mols: Vec<_> = ["CCO", "c1ccccc1", "CC(=O)O"]
        .iter()
        .map(|s| parse_smiles(s).unwrap())
        .collect();
    let cfg = FingerprintConfig::default();
    let x = fingerprint_matrix(&mols, &cfg).unwrap();
    assert_eq!((x.rows(), x.cols()), (3, 2048));
    for (i, m) in mols.iter().enumerate() {
        let fp = fingerprint(m, &cfg).unwrap();
        let row: Vec<u32> = x.row(i).iter().map(|&v| v as u32).collect();
        assert_eq!(row, fp.values);
    }
}

#[test]
fn benzene_spellings_share_fingerprints() {
    let a = parse_smiles("C1=CC=CC=C1").unwrap();
    let b = parse_smiles("c1ccccc1").unwrap();
    for kind in KINDS {
        let cfg = FingerprintConfig::new(kind);
        assert_eq!(
            fingerprint(&a, &cfg).unwrap(),
            fingerprint(&b, &cfg).unwrap()
        );
    }
}
