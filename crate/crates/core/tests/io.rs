use std::f64::consts::PI;

use dirac::eigen::{SpectralData, SpectralDatum};
use dirac::halfaxis::{Addition, Rescaling, SurgeryPlan};
use dirac::io::*;
use dirac::isospectral::TSequence;
use dirac::{Error, Grid, GridFunction, PotentialMatrix};
use proptest::prelude::*;

#[test]
fn spectral_round_trip_21_items() {
    let mut s = SpectralData::lattice(0.3, -0.2, -10, 10);
    s.items.get_mut(&3).unwrap().b = Some(2.5);
    let text = emit_spectral_json(&s);
    let back = parse_spectral_json(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(emit_spectral_json(&back), text);
}

#[test]
fn spectral_rejects_unsorted_and_unknown() {
    let unsorted = r#"{"alpha":0,"beta":0,"items":[{"n":1,"lambda":1},{"n":0,"lambda":0}]}"#;
    let e = parse_spectral_json(unsorted).unwrap_err();
    assert!(matches!(&e, Error::Parse(m) if m.contains("items[1].n")), "{e}");
    let decreasing = r#"{"alpha":0,"beta":0,"items":[{"n":0,"lambda":1},{"n":1,"lambda":0}]}"#;
    assert!(matches!(parse_spectral_json(decreasing), Err(Error::Parse(_))));
    let extra = r#"{"alpha":0,"beta":0,"items":[],"gamma":1}"#;
    assert!(matches!(parse_spectral_json(extra), Err(Error::Parse(m)) if m.contains("gamma")));
    let neg = r#"{"alpha":0,"beta":0,"items":[{"n":0,"lambda":0,"a":-1}]}"#;
    assert!(matches!(parse_spectral_json(neg), Err(Error::Parse(_))));
    let broken = "{\n  \"alpha\": 0,\n  \"beta\": ,\n}";
    let e = parse_spectral_json(broken).unwrap_err();
    assert!(matches!(&e, Error::Parse(m) if m.starts_with("line 3")), "{e}");
}

#[test]
fn potential_csv_round_trip_is_bit_exact() {
    let g = Grid::new(0.0, PI, 257).unwrap();
    let pot = PotentialMatrix::custom("mix", 0.0, PI, |x: f64| (x.cos() / 3.0, (7.0 * x).sin().exp()));
    let text = emit_potential_csv(&pot, &g).unwrap();
    let back = parse_potential_csv(&text).unwrap();
    let (p0, q0) = pot.sample(&g).unwrap();
    let (p1, q1) = back.sample(&g).unwrap();
    assert_eq!(p0, p1);
    assert_eq!(q0, q1);
    assert_eq!(emit_potential_csv(&back, &g).unwrap(), text);
}

#[test]
fn potential_csv_errors_carry_lines() {
    let bad_header = "x,q,p\n0,0,0\n";
    assert!(matches!(parse_potential_csv(bad_header), Err(Error::Parse(m)) if m.starts_with("line 1")));
    let bad_cell = "x,p,q\n0,0,0\n1,zz,0\n2,0,0\n3,0,0\n";
    assert!(matches!(parse_potential_csv(bad_cell), Err(Error::Parse(m)) if m.starts_with("line 3 column 2")));
    let uneven = "x,p,q\n0,0,0\n1,0,0\n2.5,0,0\n3,0,0\n";
    assert!(matches!(parse_potential_csv(uneven), Err(Error::Parse(m)) if m.starts_with("line 4")));
    let short = "x,p,q\n0,0,0\n1,0\n";
    assert!(matches!(parse_potential_csv(short), Err(Error::Parse(_))));
    assert!(matches!(parse_potential_csv("x,p,q\n0,0,0\n1,0,0\n"), Err(Error::Parse(_))));
    assert!(matches!(parse_potential_csv("x,p,q\n0,0,NaN\n1,0,0\n2,0,0\n3,0,0\n"), Err(Error::Parse(_))));
}

#[test]
fn tsequence_and_plan_round_trip() {
    let t = TSequence::new([(0, 0.5), (-2, -1.25)]).unwrap();
    let text = emit_tsequence_json(&t);
    assert_eq!(parse_tsequence_json(&text).unwrap(), t);
    assert!(parse_tsequence_json(r#"{"entries":[{"n":1,"t":1},{"n":1,"t":2}]}"#).is_err());
    let plan = SurgeryPlan {
        remove: vec![0],
        add: vec![Addition { mu: 1.1, c: 0.5 }],
        rescale: vec![Rescaling { n: 2, b: 3.0 }],
    };
    assert_eq!(parse_plan_json(&emit_plan_json(&plan)).unwrap(), plan);
    assert_eq!(parse_plan_json(r#"{"remove":[1]}"#).unwrap().remove, vec![1]);
    assert!(matches!(parse_plan_json(r#"{"add":[{"mu":1,"c":-1}]}"#), Err(Error::Parse(_))));
    assert!(matches!(parse_plan_json(r#"{"drop":[1]}"#), Err(Error::Parse(_))));
}

#[test]
fn grid_function_round_trip() {
    let f = GridFunction::from_fn(Grid::new(-1.0, 2.0, 30).unwrap(), |x| x.powi(3) - 1.0 / 3.0);
    assert_eq!(parse_grid_function_csv(&emit_grid_function_csv(&f)).unwrap(), f);
}

proptest! {
    #[test]
    fn spectral_round_trip(vals in prop::collection::vec((-1e6f64..1e6, 1e-6f64..1e6), 1..40), al in -1.5f64..1.5) {
        let mut lam: Vec<f64> = vals.iter().map(|v| v.0).collect();
        lam.sort_by(|a, b| a.total_cmp(b));
        lam.dedup();
        let s = SpectralData::from_items(al, 0.0, lam.iter().zip(&vals).enumerate()
            .map(|(i, (l, v))| SpectralDatum::with_a(i as i64 - 5, *l, v.1)));
        prop_assert_eq!(parse_spectral_json(&emit_spectral_json(&s)).unwrap(), s);
    }

    #[test]
    fn potential_round_trip(p in prop::collection::vec(-1e3f64..1e3, 5..60), a in -5.0f64..5.0, len in 0.1f64..10.0) {
        let g = Grid::new(a, a + len, p.len() - 1).unwrap();
        let q: Vec<f64> = p.iter().map(|v| v.sin() / 7.0).collect();
        let pot = PotentialMatrix::sampled(g, p.clone(), q.clone()).unwrap();
        let back = parse_potential_csv(&emit_potential_csv(&pot, &g).unwrap()).unwrap();
        let (p1, q1) = back.sample(&g).unwrap();
        prop_assert_eq!(p1, p);
        prop_assert_eq!(q1, q);
    }

    #[test]
    fn parsers_never_panic(s in ".{0,200}") {
        let _ = parse_spectral_json(&s);
        let _ = parse_potential_csv(&s);
        let _ = parse_tsequence_json(&s);
        let _ = parse_plan_json(&s);
    }
}
