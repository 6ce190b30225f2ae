//! Regenerates the golden files for the superspace verifier.

use acomplex_core::susy::{self, FormalStructure, Relations};
use std::fs;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    fs::create_dir_all(&dir).unwrap();
    let fs2 = FormalStructure::new(2).unwrap();
    let mut out = String::new();
    for m in 1..=2u16 {
        out.push_str(&format!("delta~ X^{m} = {}\n", susy::tilde_delta(&fs2, 1, m)));
    }
    fs::write(dir.join("tilde_delta_d2.txt"), out).unwrap();
    for dim in [2usize, 4] {
        let fs = FormalStructure::new(dim).unwrap();
        let report = susy::commutator(
            &fs,
            Relations {
                square: true,
                integrability: true,
            },
        );
        fs::write(dir.join(format!("commutator_d{dim}.txt")), report.render()).unwrap();
    }
    println!("golden files written to {}", dir.display());
}
