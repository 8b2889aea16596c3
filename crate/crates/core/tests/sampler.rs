use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refwhy_core::refactoring::{RefactoringInstance, RefactoringType};
use refwhy_core::sampler::{
    cochran_n, draw_sample, phase1_greedy, phase2_reservoir, write_manifest, SamplePlan, Stratum,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn cochran_finite_population() {
    // z for 95% to full double precision, evaluated independently
    let z: f64 = 1.959_963_984_540_054;
    let n0 = z * z * 0.25 / 0.0025;
    assert_eq!(cochran_n(0.95, 0.05, None).unwrap(), n0.ceil() as u64);
    let corrected = n0 / (1.0 + (n0 - 1.0) / 758.0);
    assert!((corrected - 255.166).abs() < 1e-3);
    assert_eq!(cochran_n(0.95, 0.05, Some(758)).unwrap(), 256);
}

fn population(spec: &[(u8, u8)]) -> Vec<(String, RefactoringType)> {
    spec.iter()
        .map(|&(p, t)| (format!("proj{}", p % 7), RefactoringType::all().nth(t as usize % 15).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn phase1_meets_every_satisfiable_minimum(
        spec in prop::collection::vec((any::<u8>(), any::<u8>()), 1..300),
        min_p in 1usize..5,
        min_t in 1usize..5,
        seed in any::<u64>(),
    ) {
        let pop = population(&spec);
        let p1 = phase1_greedy(&pop, min_p, min_t, seed);
        let uniq: BTreeSet<_> = p1.selected.iter().collect();
        prop_assert_eq!(uniq.len(), p1.selected.len());

        let mut avail_p: BTreeMap<&str, usize> = BTreeMap::new();
        let mut avail_t: BTreeMap<RefactoringType, usize> = BTreeMap::new();
        for u in &pop {
            *avail_p.entry(&u.0).or_default() += 1;
            *avail_t.entry(u.1).or_default() += 1;
        }
        let mut got_p: BTreeMap<&str, usize> = BTreeMap::new();
        let mut got_t: BTreeMap<RefactoringType, usize> = BTreeMap::new();
        for &i in &p1.selected {
            *got_p.entry(&pop[i].0).or_default() += 1;
            *got_t.entry(pop[i].1).or_default() += 1;
        }
        for (p, n) in &avail_p {
            let got = got_p.get(p).copied().unwrap_or(0);
            prop_assert!(got >= min_p.min(*n));
            let reported = p1.shortfalls.iter().any(|s| s.stratum == Stratum::Project(p.to_string()));
            prop_assert_eq!(reported, *n < min_p);
        }
        for (t, n) in &avail_t {
            prop_assert!(got_t.get(t).copied().unwrap_or(0) >= min_t.min(*n));
            let reported = p1.shortfalls.iter().any(|s| s.stratum == Stratum::Type(*t));
            prop_assert_eq!(reported, *n < min_t);
        }
        prop_assert_eq!(phase1_greedy(&pop, min_p, min_t, seed), p1);
    }
}

#[test]
fn reservoir_is_uniform() {
    let (k, n, trials) = (2usize, 5usize, 100_000u64);
    let mut hits = [0u64; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..trials {
        for i in phase2_reservoir(0..n, k, &mut rng) {
            hits[i] += 1;
        }
    }
    let expected = trials as f64 * k as f64 / n as f64;
    for h in hits {
        let f = h as f64 / trials as f64;
        assert!((0.38..=0.42).contains(&f), "frequency {f}");
    }
    let chi2: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
    let p = ChiSquared::new((n - 1) as f64).unwrap().sf(chi2);
    assert!(p > 0.001, "chi2 {chi2} p {p}");
}

pub fn synthetic_instances(n: usize) -> Vec<RefactoringInstance> {
    (0..n)
        .map(|i| {
            let commit = format!("{:040x}", i / 3);
            RefactoringInstance {
                id: format!("proj{}:{commit}:{}", i % 4, i % 3),
                project: format!("proj{}", i % 4),
                commit_id: commit,
                refactoring_type: RefactoringType::all().nth((i * 7) % 12).unwrap(),
                description: String::new(),
                left: vec![],
                right: vec![],
            }
        })
        .collect()
}

#[test]
fn three_phases_fill_target_exactly() {
    let pop = synthetic_instances(120);
    let plan = SamplePlan { target_n: Some(50), seed: 7, ..Default::default() };
    let s = draw_sample(&pop, &plan).unwrap();
    assert_eq!(s.selected.len(), 50);
    let uniq: BTreeSet<_> = s.selected.iter().map(|(i, _)| i).collect();
    assert_eq!(uniq.len(), 50);
    assert!(s.phase_count(1) > 0 && s.phase_count(3) > 0);
    assert_eq!(s.phase_count(1) + s.phase_count(2) + s.phase_count(3), 50);

    let render = |seed| {
        let s = draw_sample(&pop, &SamplePlan { seed, ..plan.clone() }).unwrap();
        let mut buf = Vec::new();
        write_manifest(&mut buf, &pop, &s).unwrap();
        buf
    };
    assert_eq!(render(7), render(7));
    assert_ne!(render(7), render(8));
}

#[test]
fn reservoir_tops_up_projects_with_leftovers() {
    // One project holds a single instance of a type covered elsewhere; phase 1
    // fills it from its own pool, so any phase-2 draw stays inside the project.
    let mut pop = synthetic_instances(60);
    pop.retain(|i| i.project != "proj3");
    let s = draw_sample(&pop, &SamplePlan { target_n: Some(30), seed: 3, ..Default::default() }).unwrap();
    for &(i, phase) in &s.selected {
        if phase == 2 {
            assert!(s.shortfalls.iter().any(|sf| sf.stratum == Stratum::Project(pop[i].project.clone())));
        }
    }
    assert_eq!(s.selected.len(), 30);
}
