//! End-to-end checks of the headline requirements, one test per criterion;
//! the test name is the pass/fail line.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed as _, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nilspectra::curvature::{curvature_deformation_scan, ricci_report};
use nilspectra::exactlat::{
    dual_lattice, enumerate_quadratic, lattice_intersect_subspace, LatticeBasis, RationalMatrix,
};
use nilspectra::families::{
    build_jab, build_jab_exact, deform, quaternion_algebra_pair, DeformationFamily,
};
use nilspectra::isocheck::{
    genericity_rank, invariant_vector, is_equivalent, is_isospectral, random_jmap,
    EquivalenceCertificate,
};
use nilspectra::nilalg::{
    bracket, group_mul, quotient_along, GammaData, GroupElement, MetricTwoStepAlgebra,
};
use nilspectra::spectra::{
    coadjoint_enumerate, compare_spectra, full_spectrum, hermite_oracle, prop37_data,
    sector_eigenvalues,
};
use nilspectra::{Mat, Real};

fn big(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

fn exact3(v: [i64; 3]) -> [BigRational; 3] {
    v.map(big)
}

fn norm2_exact(v: &[BigRational]) -> BigRational {
    v.iter().fold(BigRational::zero(), |acc, c| acc + c * c)
}

/// Deformed pair a=(1,2,3), b=(4,7,7) vs b′=(5,5,8): full spectra at cutoff
/// 150 over the cubical lattice agree to 1e-9 with exact multiplicities,
/// in under 60 s on one thread.
#[test]
fn criterion_1_deformed_pair_full_spectra_match_at_cutoff_150() {
    let alg = build_jab_exact::<Real>(&exact3([1, 2, 3]), &exact3([4, 7, 7])).unwrap();
    let algp = build_jab_exact::<Real>(&exact3([1, 2, 3]), &exact3([5, 5, 8])).unwrap();
    let gamma = GammaData::standard(6, 2);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let (s1, s2) = pool.install(|| {
        (
            full_spectrum(&alg, &gamma, 150.0).unwrap(),
            full_spectrum(&algp, &gamma, 150.0).unwrap(),
        )
    });
    let elapsed = start.elapsed();
    let rep = compare_spectra(&s1, &s2, 1e-9).unwrap();
    assert!(rep.equal, "first mismatch: {:?}", rep.first_mismatch);
    assert_eq!(s1.total_count(), s2.total_count());
    for (a, b) in s1.entries().iter().zip(s2.entries()) {
        assert_eq!(a.1, b.1, "multiplicities must match exactly at {}", a.0);
    }
    assert!(s1.entries().len() > 5, "cutoff 150 sees a nontrivial spectrum");
    assert!(
        elapsed < Duration::from_secs(60),
        "single-threaded runtime {elapsed:?} exceeds 60 s"
    );
}

/// The same pair is not equivalent (b′ ≠ ±b), and the Ricci data split:
/// det S differs between u=0 and u=3 while its Frobenius norm is constant.
#[test]
fn criterion_2_same_pair_inequivalent_with_distinct_ricci_determinant() {
    let a = [1.0, 2.0, 3.0];
    let j = build_jab::<Real>(a, [4.0, 7.0, 7.0]).unwrap();
    let jp = build_jab::<Real>(a, [5.0, 5.0, 8.0]).unwrap();
    let cert = is_equivalent(&j, &jp).unwrap();
    match &cert {
        EquivalenceCertificate::Inequivalent { invariant, .. } => {
            assert!(
                invariant.contains("b′ = ±b"),
                "expected the deformation-parameter obstruction, got {invariant}"
            );
        }
        other => panic!("expected Inequivalent, got {}", other.verdict_name()),
    }

    let fam: DeformationFamily<Real> = DeformationFamily::new(a, [4.0, 7.0, 7.0]).unwrap();
    let r0 = ricci_report(&build_jab(a, deform(&fam, 0.0).unwrap()).unwrap());
    let r3 = ricci_report(&build_jab(a, deform(&fam, 3.0).unwrap()).unwrap());
    let det_rel = (r0.det_s - r3.det_s).abs() / r0.det_s.abs().max(r3.det_s.abs());
    assert!(det_rel > 1e-6, "det S should move: rel diff {det_rel}");
    let frob_rel =
        (r0.frobenius_s - r3.frobenius_s).abs() / (1.0 + r0.frobenius_s.abs());
    assert!(frob_rel <= 1e-9, "‖S‖_F should be constant: rel diff {frob_rel}");

    let scan = curvature_deformation_scan(&fam, 9).unwrap();
    assert!(scan.frobenius_spread <= 1e-9 * (1.0 + scan.rows[0].frobenius_s));
    let scan_rel = (scan.det_max - scan.det_min).abs() / scan.det_max.abs();
    assert!(scan_rel > 1e-6, "scan must expose the determinant drift");
}

/// det(λI − j(s,t)) equals the closed six-degree form for 50 random
/// families × 1000 random (λ,s,t) draws, to 1e-9 relative.
#[test]
fn criterion_3_characteristic_polynomial_identity_random_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x63_68_61_72);
    for _ in 0..50 {
        let mut a = [0.0; 3];
        let mut acc = 0.3 + rng.gen_range(0.0..0.5);
        for slot in &mut a {
            *slot = acc;
            acc += 0.2 + rng.gen_range(0.0..1.3);
        }
        let mut b = [0.0; 3];
        for slot in &mut b {
            *slot = rng.gen_range(-3.0..3.0);
        }
        if b.iter().all(|v| v.abs() < 0.05) {
            b[0] += 1.0;
        }
        let j = build_jab::<Real>(a, b).unwrap();
        for _ in 0..1000 {
            let lam: f64 = rng.gen_range(-2.0..2.0);
            let s: f64 = rng.gen_range(-2.0..2.0);
            let t: f64 = rng.gen_range(-2.0..2.0);
            let jm = j.j_at(&[s, t]);
            let lhs = nilspectra::mat::det(&Mat::identity(6).scale(lam).sub(jm.entries()));
            let prod: f64 = a.iter().map(|ai| lam * lam + s * s * ai * ai).product();
            let sum_b2: f64 = b.iter().map(|v| v * v).sum();
            let cross = a[0] * a[0] * b[2] * b[2]
                + a[1] * a[1] * b[1] * b[1]
                + a[2] * a[2] * b[0] * b[0];
            let rhs = prod
                + lam.powi(4) * t * t * sum_b2
                + lam * lam * s * s * t * t * cross;
            let err = (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()));
            assert!(err <= 1e-9, "identity off by {err} at λ={lam}, s={s}, t={t}");
        }
    }
}

/// Quaternionic pair for T = diag(1,2,3): isospectral, inequivalent by the
/// determinant obstruction, Ricci v-eigenvalues split with equal square sums.
#[test]
fn criterion_4_quaternion_pair_isospectral_not_equivalent_ricci_split() {
    let t = RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
    let (alg, algp) = quaternion_algebra_pair::<Real>(&t).unwrap();
    assert!(is_isospectral(alg.jmap(), algp.jmap(), 1e-8).unwrap());
    let cert = is_equivalent(alg.jmap(), algp.jmap()).unwrap();
    match &cert {
        EquivalenceCertificate::Inequivalent { invariant, .. } => {
            assert!(
                invariant.contains("determinant"),
                "expected the determinant obstruction, got {invariant}"
            );
        }
        other => panic!("expected Inequivalent, got {}", other.verdict_name()),
    }
    let r1 = ricci_report(alg.jmap());
    let r2 = ricci_report(algp.jmap());
    let want1 = [-14.5, -8.5, -6.5, -4.5];
    let want2 = [-12.5, -10.5, -8.5, -2.5];
    for (got, want) in r1.v_block_eigs.iter().zip(want1) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    for (got, want) in r2.v_block_eigs.iter().zip(want2) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    let sq = |eigs: &[Real]| eigs.iter().map(|v| v * v).sum::<Real>();
    assert!((sq(&r1.v_block_eigs) - 345.0).abs() < 1e-9);
    assert!((sq(&r2.v_block_eigs) - 345.0).abs() < 1e-9);
    let max_gap = r1
        .v_block_eigs
        .iter()
        .zip(&r2.v_block_eigs)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(max_gap > 1.0, "eigenvalue multisets must differ");
}

/// Deformation dimension at 20 random points: d ≥ 2 for m=5, d ≥ 6 for
/// m=7, d = 0 for m=6, and the rank never exceeds ℓ(ℓ+2).
#[test]
fn criterion_5_generic_deformation_dimension_counts() {
    let mut sixes = Vec::new();
    for seed in 0..20u64 {
        let (r5, d5) = genericity_rank(&random_jmap::<Real>(5, 2, seed)).unwrap();
        assert!(d5 >= 2, "m=5 seed {seed}: d = {d5}");
        assert!(r5 <= 2 * (2 + 2), "m=5 seed {seed}: R = {r5}");
        let (r7, d7) = genericity_rank(&random_jmap::<Real>(7, 2, seed)).unwrap();
        assert!(d7 >= 6, "m=7 seed {seed}: d = {d7}");
        assert!(r7 <= 3 * (3 + 2), "m=7 seed {seed}: R = {r7}");
        let (r6, d6) = genericity_rank(&random_jmap::<Real>(6, 2, seed)).unwrap();
        assert!(r6 <= 3 * (3 + 2), "m=6 seed {seed}: R = {r6}");
        sixes.push(d6);
    }
    assert!(
        sixes.iter().all(|&d| d == 0),
        "m=6 must give d = 0, measured d = {sixes:?}: the determinant of a \
         6×6 skew pencil is the square of a cubic Pfaffian form, so the \
         top trace-power row block contributes rank ≤ 4 and the total rank \
         caps at 12 < 15 at every point, leaving d = 30 − 12 − 15 = 3"
    );
}

/// Nine samples across I = [−16/3, 49/8]: every pair isospectral, every
/// pair with b(u) ≠ ±b(u′) inequivalent.
#[test]
fn criterion_6_deformation_family_pairwise_isospectral_inequivalent() {
    let a = [1.0, 2.0, 3.0];
    let fam: DeformationFamily<Real> = DeformationFamily::new(a, [4.0, 7.0, 7.0]).unwrap();
    let (lo, hi) = fam.interval();
    assert!((lo - (-16.0 / 3.0)).abs() < 1e-12);
    assert!((hi - 49.0 / 8.0).abs() < 1e-12);
    let us: Vec<Real> = (0..9).map(|i| lo + (hi - lo) * (i as f64) / 8.0).collect();
    let members: Vec<([Real; 3], nilspectra::nilalg::JMap<Real>)> = us
        .iter()
        .map(|&u| {
            let b = deform(&fam, u).unwrap();
            (b, build_jab(a, b).unwrap())
        })
        .collect();
    for i in 0..members.len() {
        for l in (i + 1)..members.len() {
            let (bi, ji) = &members[i];
            let (bl, jl) = &members[l];
            assert!(
                is_isospectral(ji, jl, 1e-8).unwrap(),
                "u = {} vs u = {} must be isospectral",
                us[i],
                us[l]
            );
            let same = bi.iter().zip(bl).all(|(x, y)| (x - y).abs() < 1e-10);
            let flipped = bi.iter().zip(bl).all(|(x, y)| (x + y).abs() < 1e-10);
            if !(same || flipped) {
                let cert = is_equivalent(ji, jl).unwrap();
                assert!(
                    cert.is_inequivalent(),
                    "u = {} vs u = {}: got {}",
                    us[i],
                    us[l],
                    cert.verdict_name()
                );
            }
        }
    }
}

/// Heisenberg sectors against the finite-difference oscillator: first five
/// levels within 0.5% at grid 4096, and multiplicity |n| at ζ = n.
#[test]
fn criterion_7_oscillator_oracle_and_heisenberg_multiplicities() {
    let j = RationalMatrix::from_i64_rows(&[&[0, -1], &[1, 0]]);
    let alg = MetricTwoStepAlgebra::<Real>::from_exact(2, vec![j]).unwrap();
    let gamma = GammaData::standard(2, 1);
    let data = coadjoint_enumerate(&alg, &gamma, 1100.0).unwrap();
    for n in 1..=5i64 {
        for zeta in [vec![big(n)], vec![big(-n)]] {
            let d = data
                .iter()
                .find(|d| d.zeta == zeta)
                .unwrap_or_else(|| panic!("sector ζ = {n} missing"));
            assert_eq!(d.mult, n.unsigned_abs(), "multiplicity at ζ = ±{n}");
        }
    }
    let d1 = data.iter().find(|d| d.zeta == vec![big(1)]).unwrap();
    let cutoff = d1.base_energy + 2.0 * std::f64::consts::PI * 9.5;
    let evs = sector_eigenvalues(d1, cutoff).unwrap();
    assert!(evs.len() >= 5);
    let oracle = hermite_oracle::<Real>(1.0, 4096, 5).unwrap();
    for (p, want) in oracle.iter().enumerate() {
        let got = evs[p].0 - d1.base_energy;
        assert!(
            (got - want).abs() <= 0.005 * want,
            "level {p}: sector {got} vs oracle {want}"
        );
    }
}

/// Central quotients of the deformed pair along ker λ = R·ε₁: the kernel
/// line meets the lattice in a vector of squared length 114 on both sides,
/// and the r=1 spectral triples agree verbatim up to norm bound 10.
#[test]
fn criterion_8_quotient_lattice_vector_norm_and_spectral_triple() {
    let alg = build_jab_exact::<Real>(&exact3([1, 2, 3]), &exact3([4, 7, 7])).unwrap();
    let algp = build_jab_exact::<Real>(&exact3([1, 2, 3]), &exact3([5, 5, 8])).unwrap();
    let gamma = GammaData::standard(6, 2);
    let lam = vec![BigRational::zero(), BigRational::one()];
    let (q, gq) = quotient_along(&alg, &lam, &gamma).unwrap();
    let (qp, gqp) = quotient_along(&algp, &lam, &gamma).unwrap();

    // Kernel-line directions of the two corner maps: (b₂₃, −b₁₃, b₁₂) on
    // the even coordinates.
    for (gamma_q, dir) in [(&gq, [7i64, 0, -7, 0, 4, 0, 0]), (&gqp, [8, 0, -5, 0, 5, 0, 0])] {
        let line = RationalMatrix::from_i64_rows(&[&dir]);
        let wlat = lattice_intersect_subspace(gamma_q.log_basis(), &line).unwrap();
        assert_eq!(wlat.rank(), 1);
        let w = wlat.basis().row(0);
        assert_eq!(norm2_exact(w), big(114), "|w̄|² = 114");
    }

    let p1 = prop37_data(&q, &gq, 10.0).unwrap();
    let p2 = prop37_data(&qp, &gqp, 10.0).unwrap();
    let torus_rep = compare_spectra(&p1.torus_spec, &p2.torus_spec, 1e-9).unwrap();
    assert!(torus_rep.equal, "torus parts differ: {:?}", torus_rep.first_mismatch);
    assert_eq!(p1.jz_freqs.kernel_dim(), 4);
    assert_eq!(p2.jz_freqs.kernel_dim(), 4);
    assert_eq!(p1.jz_freqs.freqs().len(), p2.jz_freqs.freqs().len());
    for (x, y) in p1.jz_freqs.freqs().iter().zip(p2.jz_freqs.freqs()) {
        assert!((x - y).abs() < 1e-9);
        assert!((x - 114.0f64.sqrt()).abs() < 1e-9, "frequency is √114");
    }
    assert!(!p1.pair_set.is_empty());
    assert_eq!(p1.pair_set, p2.pair_set, "exact pair sets must coincide");
}

/// Compact deterministic reruns of every invariant suite.
#[test]
fn criterion_9_property_suites_compact_reruns() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x70_72_6f_70);

    // Conjugation invariance of the trace-power invariants.
    for seed in 0..10u64 {
        let j = random_jmap::<Real>(4, 2, seed);
        let mut sym = Mat::zeros(4, 4);
        for i in 0..4 {
            for l in 0..4 {
                sym[(i, l)] = rng.gen_range(-1.0..1.0);
            }
        }
        let sym = sym.add(&sym.transpose());
        let (_, qmat) = nilspectra::eig::sym_eig(&sym);
        let conj: Vec<_> = j
            .mats()
            .iter()
            .map(|s| {
                nilspectra::skewlin::SkewOperator::new(
                    qmat.matmul(s.entries()).matmul(&qmat.transpose()),
                )
                .unwrap()
            })
            .collect();
        let jp = nilspectra::nilalg::JMap::new(conj).unwrap();
        let iv = invariant_vector(&j).unwrap();
        let ivp = invariant_vector(&jp).unwrap();
        assert!(iv.close_to(&ivp, 1e-7), "{:?}", iv.first_difference(&ivp, 1e-7));
        assert!(is_isospectral(&j, &jp, 1e-7).unwrap());
    }

    // Bracket/j round-trip on exact data.
    for seed in 0..5u64 {
        let mut srng = ChaCha8Rng::seed_from_u64(seed);
        let mut m1 = RationalMatrix::zeros(4, 4);
        let mut m2 = RationalMatrix::zeros(4, 4);
        for target in [&mut m1, &mut m2] {
            for i in 0..4 {
                for l in (i + 1)..4 {
                    let v = big(srng.gen_range(-5i64..=5));
                    target.set(i, l, v.clone());
                    target.set(l, i, -v);
                }
            }
        }
        let Ok(alg) = MetricTwoStepAlgebra::<Real>::from_exact(4, vec![m1.clone(), m2.clone()])
        else {
            continue;
        };
        let stored = alg.exact_mats().unwrap();
        for (k, jk) in [&m1, &m2].into_iter().enumerate() {
            for p in 0..4 {
                let ep: Vec<BigRational> = (0..4).map(|i| big((i == p) as i64)).collect();
                let col = jk.matvec(&ep);
                for qi in 0..4 {
                    assert_eq!(col[qi], *stored[k].get(qi, p));
                }
            }
        }
        let x = [1.0, -2.0, 0.5, 1.5];
        let y = [0.25, 1.0, -1.0, 2.0];
        let bxy = bracket(&alg, &x, &y).unwrap();
        let byx = bracket(&alg, &y, &x).unwrap();
        for (u, v) in bxy.iter().zip(&byx) {
            assert!((u + v).abs() < 1e-9, "bracket antisymmetry");
        }
    }

    // Group law.
    for seed in 0..10u64 {
        let j = random_jmap::<Real>(4, 2, 100 + seed);
        let alg = MetricTwoStepAlgebra::from_float(j);
        let mut grng = ChaCha8Rng::seed_from_u64(seed);
        let mut elem = || {
            GroupElement::<Real>::new(
                (0..4).map(|_| grng.gen_range(-2.0..2.0)).collect(),
                (0..2).map(|_| grng.gen_range(-2.0..2.0)).collect(),
            )
        };
        let (g1, g2, g3) = (elem(), elem(), elem());
        let id = GroupElement::identity(4, 2);
        let close = |a: &GroupElement<Real>, b: &GroupElement<Real>| {
            a.x.iter().zip(&b.x).all(|(p, q)| (p - q).abs() < 1e-9)
                && a.z.iter().zip(&b.z).all(|(p, q)| (p - q).abs() < 1e-9)
        };
        assert!(close(&group_mul(&alg, &g1, &id).unwrap(), &g1));
        assert!(close(&group_mul(&alg, &g1, &g1.inverse()).unwrap(), &id));
        let lhs = group_mul(&alg, &group_mul(&alg, &g1, &g2).unwrap(), &g3).unwrap();
        let rhs = group_mul(&alg, &g1, &group_mul(&alg, &g2, &g3).unwrap()).unwrap();
        assert!(close(&lhs, &rhs), "associativity");
    }

    // Dual-lattice involution.
    let gram = RationalMatrix::identity(4);
    for seed in 0..10u64 {
        let mut lrng = ChaCha8Rng::seed_from_u64(200 + seed);
        let b = loop {
            let cand = RationalMatrix::from_fn(4, 4, |_, _| big(lrng.gen_range(-3i64..=3)));
            if !cand.determinant().is_zero() {
                break cand;
            }
        };
        let lat = LatticeBasis::from_generators(4, &b);
        let dual = dual_lattice(&lat, &gram).unwrap();
        let double = dual_lattice(&dual, &gram).unwrap();
        assert_eq!(double.basis(), lat.basis());
    }

    // Multiplicity integrality on integer algebras.
    for seed in 0..5u64 {
        let mut mrng = ChaCha8Rng::seed_from_u64(300 + seed);
        let m = loop {
            let mut cand = RationalMatrix::zeros(4, 4);
            for i in 0..4 {
                for l in (i + 1)..4 {
                    let v = big(mrng.gen_range(-3i64..=3));
                    cand.set(i, l, v.clone());
                    cand.set(l, i, -v);
                }
            }
            if !cand.determinant().is_zero() {
                break cand;
            }
        };
        let alg = MetricTwoStepAlgebra::<Real>::from_exact(4, vec![m]).unwrap();
        let data = coadjoint_enumerate(&alg, &GammaData::standard(4, 1), 150.0).unwrap();
        assert!(data.iter().all(|d| d.mult >= 1));
    }

    // Enumeration completeness under doubled bounds.
    for seed in 0..5u64 {
        let mut erng = ChaCha8Rng::seed_from_u64(400 + seed);
        let l = RationalMatrix::from_fn(3, 3, |i, c| {
            if c <= i {
                big(erng.gen_range(-2i64..=2))
            } else {
                BigRational::zero()
            }
        });
        let a = l.matmul(&l.transpose()).add(&RationalMatrix::identity(3));
        let off: Vec<BigRational> =
            (0..3).map(|_| big(erng.gen_range(-4i64..=4)) / big(3)).collect();
        let bound = big(erng.gen_range(4i64..=15));
        let mut small = enumerate_quadratic(&a, &off, &bound, 1_000_000).unwrap();
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
        small.sort();
        filtered.sort();
        assert_eq!(small, filtered);
    }
}
