use proptest::prelude::*;
use skewstable::excursion::*;
use skewstable::potential::{laplace_hitting, BoundedTestFunction};
use skewstable::quad::QuadratureSpec;
use skewstable::rng::{map_streams, SeedTree};
use skewstable::stable::{HittingRule, StableLaw};
use skewstable::stats::Moments;
use skewstable::Error;

fn law() -> StableLaw {
    StableLaw::new(1.5).unwrap()
}

fn theta(eps: f64) -> ThetaMeasure {
    ThetaMeasure::new(&law(), 0.25, 0.5, 0.5, eps).unwrap()
}

fn rule(dt: f64) -> HittingRule {
    HittingRule::corrected(&law(), dt, 1.0)
}

fn path(eps: f64, horizon: f64, dt: f64, seed: u64) -> SkewPath {
    let th = theta(eps);
    synthesize(&th, &MixtureSpec::pure_jump(&th), horizon, &law(), dt, &rule(dt), SeedTree::new(seed)).unwrap()
}

#[test]
fn phi_hand_example() {
    let s = [1.0, 2.0];
    let tau_after = [1.0, 3.0];
    assert_eq!(phi_at(&s, &tau_after, 0.5), 1.0);
    assert_eq!(phi_at(&s, &tau_after, 1.0), 2.0);
    assert_eq!(phi_at(&s, &tau_after, 1.5), 2.0);
    assert_eq!(phi_at(&s, &tau_after, 3.0), 2.0);
}

#[test]
fn theta_validation_and_mass() {
    assert!(ThetaMeasure::new(&law(), 0.5, 0.5, 0.5, 0.1).is_err());
    assert!(ThetaMeasure::new(&law(), 0.25, 0.5, 0.5, 0.0).is_err());
    let a = theta(0.1);
    let b = a.with_eps(0.2);
    assert!((b.mass() / a.mass() - 2f64.powf(-0.25)).abs() < 1e-12);
    assert!(a.c() > 0.0);
}

#[test]
fn atom_marks() {
    let th = theta(0.1);
    let mut rng = SeedTree::new(1).stream(0);
    assert!(sample_atom_marks(&th, 0.0, &mut rng).is_empty());
    let mut count = Moments::new();
    let mut beyond = 0usize;
    let mut total = 0usize;
    for _ in 0..4000 {
        let marks = sample_atom_marks(&th, 0.5, &mut rng);
        assert!(marks.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(marks.iter().all(|&(s, x)| (0.0..=0.5).contains(&s) && x.abs() > 0.1));
        count.push(marks.len() as f64);
        total += marks.len();
        beyond += marks.iter().filter(|m| m.1.abs() > 0.2).count();
    }
    let mean = th.mass() * 0.5;
    assert!((count.mean() - mean).abs() < 4.0 * count.stderr(), "{} vs {mean}", count.mean());
    let ratio = beyond as f64 / total as f64;
    let se = (ratio * (1.0 - ratio) / total as f64).sqrt();
    assert!((ratio - 2f64.powf(-0.25)).abs() < 4.0 * se);
}

#[test]
fn degenerate_excursion_is_an_error() {
    let r = rule(0.01);
    let mut rng = SeedTree::new(0).stream(0);
    match sample_excursion_from(0.5 * r.h, &law(), 0.01, &r, &mut rng) {
        Err(Error::DegenerateExcursion { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn excursion_bookkeeping() {
    let r = rule(0.01);
    let mut rng = SeedTree::new(2).stream(0);
    for _ in 0..200 {
        let e = sample_excursion_from(1.0, &law(), 0.01, &r, &mut rng).unwrap();
        assert_eq!(e.values[0], 1.0);
        if e.censored {
            assert_eq!(e.sigma, r.t_cap);
        } else {
            assert!(e.values.last().unwrap().abs() <= r.h);
            assert!(e.values[..e.values.len() - 1].iter().all(|x| x.abs() > r.h));
            assert!((e.sigma - (e.values.len() - 1) as f64 * 0.01).abs() < 1e-9);
        }
    }
}

#[test]
fn excursion_laplace_transform() {
    let dt = 0.01;
    let r = rule(dt);
    let l = law();
    let v = map_streams(SeedTree::new(3), 20_000, |_, rng| {
        let e = sample_excursion_from(1.0, &l, dt, &r, rng).unwrap();
        if e.censored {
            1.0
        } else {
            1.0 - (-e.sigma).exp()
        }
    });
    let m: Moments = v.into_iter().collect();
    let want = 1.0 - laplace_hitting(1.0, 1.0, &l, &QuadratureSpec::default()).unwrap();
    assert!((m.mean() - want).abs() < 4.0 * m.stderr() + 0.01, "{} ± {} vs {want}", m.mean(), m.stderr());
}

#[test]
fn synthesis_rejects_bad_inputs() {
    let dt = 0.01;
    let r = rule(dt);
    let l = law();
    let small = theta(0.5 * r.h);
    assert!(synthesize(&small, &MixtureSpec::pure_jump(&small), 1.0, &l, dt, &r, SeedTree::new(0)).is_err());
    let th = theta(0.1);
    let mix = MixtureSpec::pure_jump(&th);
    assert!(synthesize(&th, &mix, 0.0, &l, dt, &r, SeedTree::new(0)).is_err());
    assert!(synthesize_nested(&th, &[0.05], &mix, 1.0, &l, dt, &r, SeedTree::new(0)).is_err());
    let none = MixtureSpec { p: 0.0, delta: 0.01, q_eps: 0.0 };
    assert!(synthesize(&th, &none, 1.0, &l, dt, &r, SeedTree::new(0)).is_err());
    let bad_delta = MixtureSpec { p: 0.5, delta: 0.5 * r.h, q_eps: 1.0 };
    assert!(synthesize(&th, &bad_delta, 1.0, &l, dt, &r, SeedTree::new(0)).is_err());
    assert!(MixtureSpec { p: 1.5, delta: 0.01, q_eps: 0.0 }.validate().is_err());
}

fn check_invariants(p: &SkewPath) {
    let n = p.values.len();
    assert_eq!(p.times.len(), n);
    assert_eq!(p.phi.len(), n);
    assert_eq!(p.s_at_phi.len(), n);
    assert!(p.phi.windows(2).all(|w| w[0] <= w[1]));
    assert!(p.atoms.windows(2).all(|w| w[0].s < w[1].s));
    assert!(p.jump_marks().all(|x| x.abs() > p.eps));
    let tau = p.tau_after();
    for (k, a) in p.atoms.iter().enumerate() {
        let before = if k == 0 { 0.0 } else { tau[k - 1] };
        assert!((a.tau_before - before).abs() < 1e-9);
        let i = p.index_at(a.tau_before);
        assert_eq!(p.values[i], a.x0);
        assert_eq!(p.phi[i], a.s);
        assert!((p.tau(a.s) - tau[k]).abs() < 1e-9);
        if k + 1 < p.atoms.len() {
            assert!(!a.open && !a.censored);
        }
    }
    if !p.censored {
        assert!((p.horizon - (n - 1) as f64 * p.dt).abs() < 1e-9);
        assert!((tau.last().unwrap() - p.horizon).abs() < 1e-9);
    }
    let mut sum = 0.0;
    for (a, &sub) in p.atoms.iter().zip(&p.sub_values) {
        if a.kind == AtomKind::Jump {
            sum += a.x0;
        }
        assert!((sub - sum).abs() < 1e-12);
    }
}

#[test]
fn synthesized_path_invariants() {
    for seed in 0..20 {
        let p = path(0.1, 1.0, 1e-3, seed);
        check_invariants(&p);
        if p.atoms[0].kind == AtomKind::Jump {
            assert_eq!(p.residual()[0], 0.0);
        }
        for (x, phi) in p.values.iter().zip(&p.phi) {
            assert!(x.is_finite() && *phi > 0.0);
        }
    }
}

#[test]
fn nested_levels_share_atoms() {
    let th = theta(0.05);
    let mix = MixtureSpec::pure_jump(&th);
    let dt = 1e-3;
    let levels = synthesize_nested(&th, &[0.05, 0.1, 0.4], &mix, 1.0, &law(), dt, &rule(dt), SeedTree::new(9)).unwrap();
    for p in &levels {
        check_invariants(p);
    }
    let fine = &levels[0];
    for coarse in &levels[1..] {
        let kept: Vec<_> = fine.atoms.iter().filter(|a| a.x0.abs() > coarse.eps).map(|a| (a.s, a.x0)).collect();
        let got: Vec<_> = coarse.atoms.iter().map(|a| (a.s, a.x0)).collect();
        let k = kept.len().min(got.len());
        assert!(k > 0);
        assert_eq!(&kept[..k], &got[..k]);
    }
    let single = synthesize(&th, &mix, 1.0, &law(), dt, &rule(dt), SeedTree::new(9)).unwrap();
    assert_eq!(&single, fine);
}

#[test]
fn no_jumps_means_no_subordinator() {
    let th = theta(0.1);
    let mix = MixtureSpec::calibrated(&th, 0.0, 0.01, &law(), &QuadratureSpec::default()).unwrap();
    assert!(mix.q_eps > 0.0);
    let dt = 1e-3;
    let p = synthesize(&th, &mix, 0.5, &law(), dt, &rule(dt), SeedTree::new(4)).unwrap();
    assert!(p.s_at_phi.iter().all(|&s| s == 0.0));
    assert!(p.atoms.iter().all(|a| a.kind == AtomKind::Continuous && a.x0.abs() == 0.01));
    assert_eq!(p.residual(), p.values);
}

#[test]
fn sojourn_fraction_is_monotone() {
    let p = path(0.1, 1.0, 1e-3, 5);
    let f: Vec<f64> = [0.0, 0.01, 0.05, 0.1, 1e9].iter().map(|&h| zero_sojourn_fraction(&p, h)).collect();
    assert!(f.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(f[4], 1.0);
    assert!(f[0] >= 0.0);
    assert_eq!(local_time(&p), &p.phi[..]);
}

#[test]
fn export_writes_csv_and_sidecar() {
    let p = path(0.1, 0.2, 1e-3, 6);
    let dir = tempfile::tempdir().unwrap();
    let side = SkewPathSidecar::describe(&p, 1.5, &theta(0.1).eta, 6);
    export_skew_path(&p, &side, dir.path(), "path_000").unwrap();
    let csv = std::fs::read_to_string(dir.path().join("path_000.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,X,phi,S_at_phi");
    assert_eq!(lines.len(), p.values.len() + 1);
    assert!(lines[1].starts_with("0.000000000,"));
    assert!(!csv.contains('\r'));
    let json: SkewPathSidecar = serde_json::from_str(&std::fs::read_to_string(dir.path().join("path_000.json")).unwrap()).unwrap();
    assert_eq!(json, side);
    assert_eq!(json.n_atoms, p.atoms.len());
}

#[test]
fn synthesis_is_reproducible_across_thread_counts() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| path(0.1, 1.0, 1e-3, 11))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn local_time_at_horizon_is_stable_across_seeds() {
    let mean_phi = |base: u64| -> Moments {
        (0..300).map(|i| *path(0.1, 1.0, 1e-3, base + i).phi.last().unwrap()).collect()
    };
    let a = mean_phi(1000);
    let b = mean_phi(5000);
    let se = a.stderr().hypot(b.stderr());
    assert!((a.mean() - b.mean()).abs() < 4.0 * se, "{} vs {}", a.mean(), b.mean());
}

#[test]
fn resolvent_identity_and_trajectory() {
    let q = QuadratureSpec::default();
    let th = theta(0.1);
    let budget = SynthesisBudget { paths: 300, dt: 0.01 };
    let one = resolvent_at_zero_from_excursions(&BoundedTestFunction::one(), 1.0, &th, &law(), &budget, &q, SeedTree::new(0)).unwrap();
    assert_eq!(one.formula.value, 1.0);
    assert!((one.trajectory.value - 1.0).abs() < 1e-3);
    let g = resolvent_at_zero_from_excursions(&BoundedTestFunction::GaussianBump, 1.0, &th, &law(), &budget, &q, SeedTree::new(12)).unwrap();
    assert!((g.formula.value - 0.162_34).abs() < 1e-4);
    assert!((g.untruncated.value - 0.275_875).abs() < 1e-5);
    let t = &g.trajectory;
    assert!((t.value - g.formula.value).abs() < 4.0 * t.stderr, "{} ± {}", t.value, t.stderr);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn invariants_hold_for_any_seed(seed in any::<u64>(), eps in 0.05f64..0.5) {
        let p = path(eps, 0.5, 2e-3, seed);
        check_invariants(&p);
    }
}
