#![allow(dead_code)]

use conformal_core::field::{make_field, BubbleParams, FieldKind, FieldSpec, ScalarField};
use conformal_core::linalg::{dist, norm};
use conformal_core::mobius::{Atom, MobiusMap};
use rand::Rng;

pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in &rows {
            let d: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= d * b);
        }
        let nv = norm(&v);
        if nv > 1e-3 {
            rows.push(v.iter().map(|x| x / nv).collect());
        }
    }
    rows
}

pub fn random_bubble_params<R: Rng>(rng: &mut R, n: usize) -> BubbleParams {
    let a = rng.gen_range(0.5..3.0);
    let b = rng.gen_range(0.2..3.0);
    let xbar = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    BubbleParams::new(a, b, xbar).unwrap()
}

pub fn bubble_field(p: &BubbleParams) -> ScalarField {
    make_field(&FieldSpec::bubble(p)).unwrap()
}

/// Bubble or log-power field, with the singular point of the latter if any.
pub fn random_field<R: Rng>(rng: &mut R, n: usize) -> (ScalarField, Option<Vec<f64>>) {
    if rng.gen_bool(0.5) {
        (bubble_field(&random_bubble_params(rng, n)), None)
    } else {
        let alpha = rng.gen_range(0.2..2.0);
        let spec = FieldSpec::new(n, FieldKind::LogPower { alpha });
        (make_field(&spec).unwrap(), Some(vec![0.0; n]))
    }
}

pub fn random_atom<R: Rng>(rng: &mut R, n: usize) -> Atom {
    match rng.gen_range(0..4) {
        0 => Atom::Translation((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()),
        1 => Atom::Dilation(rng.gen_range(0.5..2.0)),
        2 => Atom::Orthogonal(random_orthogonal(rng, n)),
        _ => Atom::Inversion {
            center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            radius: rng.gen_range(0.5..2.0),
        },
    }
}

pub fn random_map<R: Rng>(rng: &mut R, n: usize) -> MobiusMap {
    let k = rng.gen_range(1..=3);
    MobiusMap::new((0..k).map(|_| random_atom(rng, n)).collect()).unwrap()
}

/// A point whose path through the atoms stays 0.3 away from inversion centers and whose image
/// lies in `0.3 <= |image - singular| <= 10`.
pub fn safe_point<R: Rng>(
    rng: &mut R,
    map: &MobiusMap,
    singular: Option<&[f64]>,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = map.dim()?;
    'outer: for _ in 0..1000 {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut p = y.clone();
        for a in map.atoms() {
            if let Atom::Inversion { center, .. } = a {
                if dist(&p, center) < 0.3 {
                    continue 'outer;
                }
            }
            p = MobiusMap::new(vec![a.clone()])
                .unwrap()
                .apply_finite(&p)
                .ok()?;
        }
        let far = norm(&p) > 10.0;
        let near = singular.is_some_and(|s| dist(&p, s) < 0.3);
        if !far && !near {
            return Some((y, p));
        }
    }
    None
}
