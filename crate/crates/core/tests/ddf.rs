mod common;

use rand::seq::SliceRandom;
use rand::Rng;

use common::two_room_walks;
use ddf_curriculum::ddf::{
    build_pair_dataset, train_ddf, BinSpec, DdfModel, DdfTrainConfig, LabeledPair,
};
use ddf_curriculum::envs::GridNavEnv;
use ddf_curriculum::rng::RngHandle;

fn dataset(rng: &mut RngHandle, pairs: usize) -> Vec<LabeledPair> {
    let walks = two_room_walks(pairs / 50, rng);
    let mut data = build_pair_dataset(&walks, 50, &BinSpec::new(50, 5).unwrap(), rng).unwrap();
    data.shuffle(rng);
    data
}

fn trained(seed: u64) -> (DdfModel, Vec<LabeledPair>) {
    let mut rng = RngHandle::new(seed, 0);
    let data = dataset(&mut rng, 10_000);
    let (test, train) = data.split_at(1_000);
    let config = DdfTrainConfig {
        epochs: 10,
        ..DdfTrainConfig::default()
    };
    let (model, _) = train_ddf(
        2,
        &[128, 128],
        BinSpec::new(50, 5).unwrap(),
        train,
        &config,
        &mut rng,
    )
    .unwrap();
    (model, test.to_vec())
}

#[test]
fn identity_pairs_land_in_bin_one() {
    let (model, _) = trained(31);
    let env = GridNavEnv::default_two_rooms();
    let hits = env
        .free_cells()
        .iter()
        .filter(|c| {
            let s = env.encode(**c);
            model.predict_bin(&s, &s).unwrap().0 == 1
        })
        .count();
    let share = hits as f64 / env.free_cells().len() as f64;
    assert!(share >= 0.95, "{share}");
}

#[test]
fn near_cells_never_predicted_further_than_far_cells() {
    let (model, _) = trained(32);
    let env = GridNavEnv::default_two_rooms();
    let mut rng = RngHandle::new(33, 0);
    let free = env.free_cells().to_vec();
    let mut ok = 0;
    let mut total = 0;
    while total < 200 {
        let origin = free[rng.gen_range(0..free.len())];
        let dist = env.distances_from(origin).unwrap();
        let at = |d: usize| -> Vec<_> {
            free.iter()
                .copied()
                .filter(|c| dist[c.y * env.width() + c.x] == Some(d))
                .collect()
        };
        let near = at(1);
        // the furthest ring at or below 40 steps
        let Some(far) = (25..=40).rev().map(at).find(|r| !r.is_empty()) else {
            continue;
        };
        let s0 = env.encode(origin);
        let n = env.encode(*near.choose(&mut rng).unwrap());
        let f = env.encode(*far.choose(&mut rng).unwrap());
        total += 1;
        if model.predict_bin(&s0, &n).unwrap().0 <= model.predict_bin(&s0, &f).unwrap().0 {
            ok += 1;
        }
    }
    assert!(ok as f64 / total as f64 >= 0.9, "{ok}/{total}");
}

#[test]
fn short_pairs_separate_from_long_pairs() {
    let (model, test) = trained(34);
    let spec = BinSpec::new(50, 5).unwrap();
    let u = spec.upper_bounds();
    let mean_pred = |keep: &dyn Fn(usize) -> bool| {
        let preds: Vec<f64> = test
            .iter()
            .filter(|p| keep(p.pair.steps))
            .map(|p| model.predict_bin(&p.pair.first, &p.pair.second).unwrap().0 as f64)
            .collect();
        preds.iter().sum::<f64>() / preds.len() as f64
    };
    let short = mean_pred(&|d| d <= u[0]);
    let long = mean_pred(&|d| d > u[3]);
    assert!(short < long, "{short} vs {long}");
}

#[test]
fn shuffled_labels_give_chance_accuracy() {
    let mut rng = RngHandle::new(35, 0);
    let mut data = dataset(&mut rng, 6_000);
    let mut labels: Vec<usize> = data.iter().map(|p| p.bin).collect();
    labels.shuffle(&mut rng);
    for (p, l) in data.iter_mut().zip(labels) {
        p.bin = l;
    }
    let (test, train) = data.split_at(1_000);
    let (model, _) = train_ddf(
        2,
        &[64, 64],
        BinSpec::new(50, 5).unwrap(),
        train,
        &DdfTrainConfig::default(),
        &mut rng,
    )
    .unwrap();
    let acc = model.accuracy(test, 0).unwrap();
    assert!((acc - 0.2).abs() < 0.06, "{acc}");
}

#[test]
fn retraining_is_reproducible() {
    let mut rng = RngHandle::new(36, 0);
    let data = dataset(&mut rng, 1_000);
    let spec = BinSpec::new(50, 5).unwrap();
    let run = || {
        let mut r = RngHandle::new(37, 0);
        train_ddf(
            2,
            &[16],
            spec.clone(),
            &data,
            &DdfTrainConfig::default(),
            &mut r,
        )
        .unwrap()
        .0
    };
    assert_eq!(run().net().params(), run().net().params());
}
