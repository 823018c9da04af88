//! Monte Carlo checks that reported uncertainties match the scatter of the
//! estimates over seeded replicates.

use trapkit::dynamics::{noisy_trace, one_body_decay, one_body_loading, NoiseSpec};
use trapkit::estimation::{
    extract_sigma_p, fit_decay, fit_loading, BackgroundRate, SigmaPRun, SigmaPSetup,
};
use trapkit::photoionization::{
    photoionization_loss, IonizationChannel, LightField, TransitionSpec,
};
use trapkit::trace::ValueKind;
use trapkit::units::intensity_to_si;

const REPLICATES: u64 = 100;

fn noise(seed: u64) -> NoiseSpec {
    NoiseSpec {
        relative_sigma: 0.05,
        additive_sigma: 0.0,
        seed,
    }
}

fn loading_replicate(seed: u64) -> trapkit::estimation::FitResult {
    let times: Vec<f64> = (0..200).map(|i| 40.0 * i as f64 / 199.0).collect();
    let clean: Vec<f64> = times
        .iter()
        .map(|&t| one_body_loading(2.6e4, 1.0 / 9.0, 0.0, t).unwrap())
        .collect();
    fit_loading(&noisy_trace(times, &clean, ValueKind::AtomNumber, &noise(seed)).unwrap()).unwrap()
}

fn covered(value: f64, sigma: f64, truth: f64, k: f64) -> bool {
    (value - truth).abs() <= k * sigma
}

#[test]
fn loading_three_sigma_coverage() {
    let mut hits = 0;
    for seed in 0..REPLICATES {
        let fit = loading_replicate(seed);
        let l = fit.get("loading_rate").unwrap();
        let g = fit.get("gamma").unwrap();
        hits += (covered(l.value, l.uncertainty, 2.6e4, 3.0)
            && covered(g.value, g.uncertainty, 1.0 / 9.0, 3.0)) as u64;
    }
    assert!(hits >= 95, "{hits}/{REPLICATES}");
}

#[test]
fn loading_two_sigma_coverage() {
    let mut hits = [0; 2];
    for seed in 0..REPLICATES {
        let fit = loading_replicate(1000 + seed);
        let l = fit.get("loading_rate").unwrap();
        let g = fit.get("gamma").unwrap();
        hits[0] += covered(l.value, l.uncertainty, 2.6e4, 2.0) as u64;
        hits[1] += covered(g.value, g.uncertainty, 1.0 / 9.0, 2.0) as u64;
    }
    assert!(hits.iter().all(|&h| h >= 90), "{hits:?}");
}

#[test]
fn decay_two_sigma_coverage() {
    let times: Vec<f64> = (0..150).map(|i| 30.0 * i as f64 / 149.0).collect();
    let clean: Vec<f64> = times
        .iter()
        .map(|&t| one_body_decay(0.1, 5e7, t).unwrap())
        .collect();
    let mut hits = 0;
    for seed in 0..REPLICATES {
        let trace =
            noisy_trace(times.clone(), &clean, ValueKind::AtomNumber, &noise(seed)).unwrap();
        let g = fit_decay(&trace).unwrap();
        let g = g.get("gamma").unwrap();
        hits += covered(g.value, g.uncertainty, 0.1, 2.0) as u64;
    }
    assert!(hits >= 90, "{hits}/{REPLICATES}");
}

#[test]
fn sigma_p_two_sigma_coverage() {
    let setup = SigmaPSetup {
        transition: TransitionSpec::rb87_d2(),
        detuning_linewidths: 2.25,
        ionizing_wavelength: 426e-9,
    };
    let channel = IonizationChannel::new(1.1e-21, 426e-9).unwrap();
    let mut grid = Vec::new();
    for i_rb in [20.0, 60.0, 100.0, 160.0] {
        for i_p in [0.0, 100.0, 200.0, 400.0, 600.0] {
            let (i_rb, i_p) = (
                intensity_to_si(i_rb).unwrap(),
                intensity_to_si(i_p).unwrap(),
            );
            let field = LightField::detuned(i_rb, 2.25, &setup.transition).unwrap();
            grid.push((
                i_rb,
                i_p,
                0.11 + photoionization_loss(&field, &setup.transition, &channel, i_p).unwrap(),
            ));
        }
    }
    let mut hits = 0;
    for seed in 0..REPLICATES {
        let runs: Vec<SigmaPRun> = grid
            .iter()
            .enumerate()
            .map(|(k, &(i_rb, i_p, gamma))| {
                let duration = 6.0 / gamma;
                let times: Vec<f64> = (0..200).map(|i| duration * i as f64 / 199.0).collect();
                let clean: Vec<f64> = times
                    .iter()
                    .map(|&t| one_body_loading(2.6e4, gamma, 0.0, t).unwrap())
                    .collect();
                let trace = noisy_trace(
                    times,
                    &clean,
                    ValueKind::AtomNumber,
                    &noise(7000 + 100 * seed + k as u64),
                )
                .unwrap();
                let g = fit_loading(&trace).unwrap();
                let g = g.get("gamma").unwrap();
                SigmaPRun {
                    rb_intensity: i_rb,
                    ionizing_intensity: i_p,
                    gamma_tot: g.value,
                    gamma_tot_sigma: Some(g.uncertainty),
                }
            })
            .collect();
        let est = extract_sigma_p(&runs, &setup, BackgroundRate::Pooled).unwrap();
        let p = est.result.get("sigma_p").unwrap();
        hits += covered(p.value, p.uncertainty, 1.1e-21, 2.0) as u64;
    }
    assert!(hits >= 90, "{hits}/{REPLICATES}");
}
