use molphase_core::numkit::eig_hermitian;
use molphase_core::{Error, VibronicSystem};

fn load(name: &str) -> VibronicSystem {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn e_cross_e_file_matches_builtin() {
    let from_file = load("e_cross_e.model");
    let builtin = VibronicSystem::e_cross_e();
    assert_eq!(from_file.order(), 2);
    assert_eq!(from_file.mode_labels(), builtin.mode_labels());
    for q in [[0.3, -1.2], [2.0, 0.0], [-0.7, 0.7]] {
        assert_eq!(from_file.secular(&q).unwrap(), builtin.secular(&q).unwrap());
        let k = f64::hypot(q[0], q[1]);
        let levels = from_file.split_levels(&q).unwrap();
        assert!((levels[0] + k).abs() < 1e-12 && (levels[1] - k).abs() < 1e-12);
    }
}

#[test]
fn complex_triplet_levels_scale_linearly() {
    let sys = load("triplet.model");
    let unit = sys.split_levels(&[1.0]).unwrap();
    let reference = eig_hermitian(&sys.couplings()[0]).unwrap().eigenvalues;
    for (a, b) in unit.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12);
    }
    let scaled = sys.split_levels(&[-2.5]).unwrap();
    let mut expected: Vec<f64> = unit.iter().map(|e| -2.5 * e).collect();
    expected.sort_by(f64::total_cmp);
    for (a, b) in scaled.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-11, "{scaled:?} vs {expected:?}");
    }
    let trace: f64 = unit.iter().sum();
    assert!(trace.abs() < 1e-12);
    assert!(sys.couplings()[0].is_hermitian(1e-15));
}

#[test]
fn malformed_files_report_lines() {
    let cases = [
        ("", 1),
        ("m 2\nQx\n1,0 0,0\n", 2),
        ("m 2\nQx\n1,0 0,0\n0,0 x\n", 4),
        ("m 2\nQx\n1,0 0,1\n0,0 -1,0\n", 2),
        ("n 2\n", 1),
    ];
    for (text, line) in cases {
        match text.parse::<VibronicSystem>() {
            Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}
