use brc_core::legit::{check_legit, gap_stats, sample_legit};
use brc_core::mu::MuCode;
use brc_core::params::{Params, BETA};

fn setup(m: u64) -> (Params, MuCode) {
    let p = Params::derive(m, 2, 3).unwrap();
    let code = MuCode::new(p.l()).unwrap();
    (p, code)
}

fn rejection_rate(m: u64, seeds: u64) -> f64 {
    let (p, code) = setup(m);
    let draws: u64 = (0..seeds).map(|s| sample_legit(&p, &code, s).unwrap().1 as u64).sum();
    (draws - seeds) as f64 / draws as f64
}

#[test]
fn rejection_rate_does_not_grow_with_m() {
    let rates: Vec<f64> = [10, 12, 14, 16].iter().map(|&k| rejection_rate(1 << k, 100)).collect();
    for pair in rates.windows(2) {
        assert!(pair[1] <= pair[0], "rates {rates:?}");
    }
}

#[test]
fn few_attempts_at_large_m() {
    let (p, code) = setup(1 << 16);
    let attempts: u32 = (0..100).map(|s| sample_legit(&p, &code, s).unwrap().1).sum();
    assert!(attempts as f64 / 100.0 <= 1.12, "{attempts} attempts over 100 seeds");
}

#[test]
fn samples_are_legit() {
    let (p, code) = setup(256);
    for seed in 0..1000 {
        let (z, attempts) = sample_legit(&p, &code, seed).unwrap();
        assert!(attempts >= 1);
        assert!(check_legit(&z, &p, &code).unwrap().is_ok(), "seed {seed}");
    }
}

#[test]
fn gaps_stay_well_below_the_bound() {
    let (p, code) = setup(1 << 14);
    let bound = (2 * BETA * p.c * p.log_m * p.log_m) as usize;
    let mut total = 0usize;
    let mut mass_below_tenth = 0usize;
    for seed in 0..20 {
        let (z, _) = sample_legit(&p, &code, seed).unwrap();
        let stats = gap_stats(&z, &p, &code);
        assert!(stats.max_gap < bound);
        for (&gap, &count) in &stats.histogram {
            total += count;
            if gap < bound / 10 {
                mass_below_tenth += count;
            }
        }
    }
    assert!(mass_below_tenth as f64 >= 0.99 * total as f64);
}
