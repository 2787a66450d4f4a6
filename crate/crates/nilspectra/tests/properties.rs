//! Randomized invariant suites: structural identities that must hold for
//! every input, exercised over generated algebras, lattices, and quadratic
//! forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use nilspectra::exactlat::{
    dual_lattice, enumerate_quadratic, hnf, pfaffian, IntMatrix, LatticeBasis, RationalMatrix,
};
use nilspectra::isocheck::{invariant_vector, is_isospectral};
use nilspectra::nilalg::{
    bracket, group_mul, GammaData, GroupElement, JMap, MetricTwoStepAlgebra,
};
use nilspectra::skewlin::{skew_spectrum, SkewOperator};
use nilspectra::spectra::{coadjoint_enumerate, full_spectrum, torus_spectrum};
use nilspectra::{Mat, Real};

fn big(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// Skew 4x4 float matrix from its 6 upper entries.
fn skew4(e: &[f64; 6]) -> Mat<Real> {
    let mut m = Mat::zeros(4, 4);
    let mut t = 0;
    for i in 0..4 {
        for l in (i + 1)..4 {
            m[(i, l)] = e[t];
            m[(l, i)] = -e[t];
            t += 1;
        }
    }
    m
}

fn skew4_exact(e: &[i64; 6]) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(4, 4);
    let mut t = 0;
    for i in 0..4 {
        for l in (i + 1)..4 {
            m.set(i, l, big(e[t]));
            m.set(l, i, big(-e[t]));
            t += 1;
        }
    }
    m
}

/// Orthogonal matrix from a random symmetric seed: eigenvectors of
/// sym + symᵀ.
fn orthogonal_from(seed: &[f64; 16]) -> Mat<Real> {
    let raw = Mat::new(4, 4, seed.to_vec());
    let sym = raw.add(&raw.transpose());
    let (_, q) = nilspectra::eig::sym_eig(&sym);
    q
}

fn independent_pair(e1: &[f64; 6], e2: &[f64; 6]) -> Option<JMap<Real>> {
    JMap::new(vec![
        SkewOperator::new(skew4(e1)).ok()?,
        SkewOperator::new(skew4(e2)).ok()?,
    ])
    .ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Conjugating every j(z) by a fixed orthogonal map preserves the
    /// trace-power invariants, each frequency multiset, and the pointwise
    /// spectral comparison.
    #[test]
    fn conjugation_invariance(
        e1 in prop::array::uniform6(-3.0f64..3.0),
        e2 in prop::array::uniform6(-3.0f64..3.0),
        seed in prop::array::uniform16(-1.0f64..1.0),
    ) {
        let Some(j) = independent_pair(&e1, &e2) else { return Ok(()) };
        let q = orthogonal_from(&seed);
        let conj: Vec<SkewOperator<Real>> = j
            .mats()
            .iter()
            .map(|s| SkewOperator::new(q.matmul(s.entries()).matmul(&q.transpose())).unwrap())
            .collect();
        let jp = JMap::new(conj).unwrap();
        let a = invariant_vector(&j).unwrap();
        let b = invariant_vector(&jp).unwrap();
        prop_assert!(a.close_to(&b, 1e-6), "diff {:?}", a.first_difference(&b, 1e-6));
        for (s, sp) in j.mats().iter().zip(jp.mats()) {
            let f = skew_spectrum(s);
            let fp = skew_spectrum(sp);
            prop_assert!(f.close_to(&fp));
        }
        prop_assert!(is_isospectral(&j, &jp, 1e-6).unwrap());
    }

    /// Rotating the center argument moves spectra pointwise: the spectrum of
    /// the rotated map at z equals the original spectrum at Cᵀz.
    #[test]
    fn center_rotation_moves_spectra_pointwise(
        e1 in prop::array::uniform6(-3.0f64..3.0),
        e2 in prop::array::uniform6(-3.0f64..3.0),
        angle in 0.1f64..3.0,
        z in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let Some(j) = independent_pair(&e1, &e2) else { return Ok(()) };
        let (c, s) = (angle.cos(), angle.sin());
        // j′_k = j(Cᵀ e_k) so that j′(z) = j(Cᵀ z).
        let m1 = j.mats()[0].entries().scale(c).add(&j.mats()[1].entries().scale(s));
        let m2 = j.mats()[0].entries().scale(-s).add(&j.mats()[1].entries().scale(c));
        let jp = JMap::new(vec![
            SkewOperator::new(m1).unwrap(),
            SkewOperator::new(m2).unwrap(),
        ])
        .unwrap();
        let zt = [c * z[0] - s * z[1], s * z[0] + c * z[1]];
        let lhs = skew_spectrum(&jp.j_at(&z));
        let rhs = skew_spectrum(&j.j_at(&zt));
        prop_assert!(lhs.close_to(&rhs));
    }

    /// The bracket table on basis vectors reconstructs every j-matrix
    /// entry: ⟨j(e_k)e_p, e_q⟩ = [e_p, e_q]_k, exactly on rational data.
    #[test]
    fn bracket_j_roundtrip_exact(
        e1 in prop::array::uniform6(-5i64..=5),
        e2 in prop::array::uniform6(-5i64..=5),
    ) {
        let m1 = skew4_exact(&e1);
        let m2 = skew4_exact(&e2);
        let Ok(alg) = MetricTwoStepAlgebra::<Real>::from_exact(4, vec![m1.clone(), m2.clone()])
        else {
            return Ok(());
        };
        let stored = alg.exact_mats().unwrap();
        for (k, jk) in [&m1, &m2].into_iter().enumerate() {
            for p in 0..4 {
                let ep: Vec<BigRational> = (0..4).map(|i| big((i == p) as i64)).collect();
                let col = jk.matvec(&ep);
                for q in 0..4 {
                    // Rebuilt entry ⟨j(e_k)e_p, e_q⟩ against the stored matrix.
                    assert_eq!(col[q], *stored[k].get(q, p));
                }
            }
        }
        // Bilinearity and antisymmetry of the float bracket.
        let x = [1.5, -0.5, 2.0, 0.25];
        let y = [0.5, 1.0, -1.0, 3.0];
        let bxy = bracket(&alg, &x, &y).unwrap();
        let byx = bracket(&alg, &y, &x).unwrap();
        for (u, v) in bxy.iter().zip(&byx) {
            prop_assert!((u + v).abs() < 1e-9);
        }
    }

    /// Group law: identity, inverses, and associativity of
    /// (x,z)(x′,z′) = (x+x′, z+z′+½[x,x′]).
    #[test]
    fn group_law_axioms(
        e1 in prop::array::uniform6(-3.0f64..3.0),
        e2 in prop::array::uniform6(-3.0f64..3.0),
        g1x in prop::array::uniform4(-2.0f64..2.0),
        g2x in prop::array::uniform4(-2.0f64..2.0),
        g3x in prop::array::uniform4(-2.0f64..2.0),
        zs in prop::array::uniform6(-2.0f64..2.0),
    ) {
        let Some(j) = independent_pair(&e1, &e2) else { return Ok(()) };
        let alg = MetricTwoStepAlgebra::from_float(j);
        let g1 = GroupElement::new(g1x.to_vec(), zs[0..2].to_vec());
        let g2 = GroupElement::new(g2x.to_vec(), zs[2..4].to_vec());
        let g3 = GroupElement::new(g3x.to_vec(), zs[4..6].to_vec());
        let id = GroupElement::identity(4, 2);
        let close = |a: &GroupElement<Real>, b: &GroupElement<Real>| {
            a.x.iter().zip(&b.x).all(|(p, q)| (p - q).abs() < 1e-9)
                && a.z.iter().zip(&b.z).all(|(p, q)| (p - q).abs() < 1e-9)
        };
        prop_assert!(close(&group_mul(&alg, &g1, &id).unwrap(), &g1));
        prop_assert!(close(&group_mul(&alg, &id, &g1).unwrap(), &g1));
        prop_assert!(close(&group_mul(&alg, &g1, &g1.inverse()).unwrap(), &id));
        let left = group_mul(&alg, &group_mul(&alg, &g1, &g2).unwrap(), &g3).unwrap();
        let right = group_mul(&alg, &g1, &group_mul(&alg, &g2, &g3).unwrap()).unwrap();
        prop_assert!(close(&left, &right));
    }

    /// dual(dual(L)) = L, and the dual pairing is exactly unimodular.
    #[test]
    fn dual_lattice_involution(entries in prop::array::uniform9(-3i64..=3)) {
        let rows: Vec<Vec<i64>> = entries.chunks(3).map(|c| c.to_vec()).collect();
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        let b = RationalMatrix::from_i64_rows(&refs);
        if b.determinant().is_zero() {
            return Ok(());
        }
        let lat = LatticeBasis::from_generators(3, &b);
        let gram = RationalMatrix::identity(3);
        let dual = dual_lattice(&lat, &gram).unwrap();
        let double = dual_lattice(&dual, &gram).unwrap();
        prop_assert_eq!(double.basis(), lat.basis(), "canonical bases agree");
        // Pairing matrix D·Bᵀ is integral with |det| = 1.
        let pairing = dual.basis().matmul(&lat.basis().transpose());
        let as_int = pairing.to_int_exact().expect("dual pairing is integral");
        let det = as_int.to_rational().determinant();
        prop_assert_eq!(det.abs(), BigRational::one());
    }

    /// Pf(A)² = det(A) for skew rational matrices.
    #[test]
    fn pfaffian_squares_to_determinant(e in prop::array::uniform6(-6i64..=6)) {
        let m = skew4_exact(&e);
        let pf = pfaffian(&m).unwrap();
        prop_assert_eq!(&pf * &pf, m.determinant());
    }

    /// HNF: H = U·M with unimodular U and staircase shape.
    #[test]
    fn hnf_shape_and_transform(entries in prop::array::uniform12(-7i64..=7)) {
        let rows: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = IntMatrix::from_i64_rows(&refs);
        let (h, u) = hnf(&m);
        assert_eq!(u.matmul(&m).to_rational().entries(), h.to_rational().entries());
        let udet = u.to_rational().determinant();
        prop_assert_eq!(udet.abs(), BigRational::one());
        // Pivots move strictly right; below-pivot entries vanish.
        let mut last = None;
        for i in 0..h.rows() {
            let piv = (0..h.cols()).find(|&c| !h.get(i, c).is_zero());
            if let Some(p) = piv {
                if let Some(lp) = last {
                    prop_assert!(p > lp);
                }
                prop_assert!(h.get(i, p).is_positive());
                for below in (i + 1)..h.rows() {
                    prop_assert!(h.get(below, p).is_zero());
                }
                last = Some(p);
            } else {
                for rest in i..h.rows() {
                    for c in 0..h.cols() {
                        prop_assert!(h.get(rest, c).is_zero());
                    }
                }
                break;
            }
        }
    }

    /// Ellipsoid enumeration is complete: the point set below bound b is
    /// exactly the filtered point set below 2b.
    #[test]
    fn enumeration_complete_under_doubling(
        l in prop::array::uniform6(-2i64..=2),
        offr in prop::array::uniform3(-5i64..=5),
        bound_num in 1i64..=18,
    ) {
        // A = LLᵀ + I is positive definite with integer entries.
        let mut lm = RationalMatrix::zeros(3, 3);
        let mut t = 0;
        for i in 0..3 {
            for c in 0..=i {
                lm.set(i, c, big(l[t]));
                t += 1;
            }
        }
        let a = lm
            .matmul(&lm.transpose())
            .add(&RationalMatrix::identity(3));
        let off: Vec<BigRational> = offr.iter().map(|&n| big(n) / big(3)).collect();
        let bound = big(bound_num);
        let small = enumerate_quadratic(&a, &off, &bound, 1_000_000).unwrap();
        let large = enumerate_quadratic(&a, &off, &(big(2) * &bound), 1_000_000).unwrap();
        let q = |p: &Vec<BigInt>| {
            let shifted: Vec<BigRational> = p
                .iter()
                .zip(&off)
                .map(|(n, o)| BigRational::from(n.clone()) + o)
                .collect();
            let av = a.matvec(&shifted);
            shifted
                .iter()
                .zip(&av)
                .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
        };
        let mut filtered: Vec<Vec<BigInt>> =
            large.into_iter().filter(|p| q(p) <= bound).collect();
        let mut small_sorted = small;
        small_sorted.sort();
        filtered.sort();
        prop_assert_eq!(small_sorted, filtered);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Every sector multiplicity of an integer algebra is a positive
    /// integer (the Pfaffian check never trips), and doubling the cutoff
    /// only extends the spectrum.
    #[test]
    fn multiplicity_integrality_and_spectrum_prefix(
        e in prop::array::uniform6(-3i64..=3),
    ) {
        let m = skew4_exact(&e);
        if m.determinant().is_zero() {
            return Ok(());
        }
        let alg = MetricTwoStepAlgebra::<Real>::from_exact(4, vec![m]).unwrap();
        let gamma = GammaData::standard(4, 1);
        let cutoff = 180.0;
        let data = coadjoint_enumerate(&alg, &gamma, cutoff).unwrap();
        for d in &data {
            prop_assert!(d.mult >= 1);
        }
        let small = full_spectrum(&alg, &gamma, cutoff).unwrap();
        let big_spec = full_spectrum(&alg, &gamma, 2.0 * cutoff).unwrap().truncate(cutoff);
        prop_assert_eq!(small.entries().len(), big_spec.entries().len());
        for (x, y) in small.entries().iter().zip(big_spec.entries()) {
            prop_assert!((x.0 - y.0).abs() < 1e-12);
            prop_assert_eq!(x.1, y.1);
        }
    }

    /// Torus spectra respect truncation and have even multiplicities above
    /// zero (μ and −μ pair up).
    #[test]
    fn torus_truncation_and_symmetry(entries in prop::array::uniform4(-3i64..=3)) {
        let rows: Vec<Vec<i64>> = entries.chunks(2).map(|c| c.to_vec()).collect();
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        let b = RationalMatrix::from_i64_rows(&refs);
        if b.determinant().is_zero() {
            return Ok(());
        }
        let lat = LatticeBasis::from_generators(2, &b);
        let s = torus_spectrum::<Real>(&lat, None, 400.0).unwrap();
        let t = torus_spectrum::<Real>(&lat, None, 800.0).unwrap().truncate(400.0);
        prop_assert_eq!(s.entries().len(), t.entries().len());
        for (x, y) in s.entries().iter().zip(t.entries()) {
            prop_assert!((x.0 - y.0).abs() < 1e-12);
            prop_assert_eq!(x.1, y.1);
        }
        prop_assert_eq!(s.entries()[0], (0.0, 1));
        for &(v, c) in &s.entries()[1..] {
            prop_assert!(v > 0.0);
            prop_assert_eq!(c % 2, 0);
        }
    }
}
