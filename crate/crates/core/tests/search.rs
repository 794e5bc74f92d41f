use std::collections::BTreeSet;

use kingpeps::gen::{king_ising, random_potts, Distribution};
use kingpeps::oracle::{exact_spectrum, DEFAULT_LIMIT};
use kingpeps::search::Droplet;
use kingpeps::{
    low_energy_spectrum, unpack_droplets, ClusterTopology, ContractionParams, DropletMode, DropletParams,
    LatticeTransform, PottsHamiltonian, SearchParams, Solution,
};

fn solve(h: &PottsHamiltonian, cp: ContractionParams, sp: SearchParams) -> Solution {
    low_energy_spectrum::<f64>(h, LatticeTransform::IDENTITY, &cp, &sp, None).unwrap()
}

#[test]
fn exact_regime_returns_full_spectrum() {
    for (d, chi) in [(2, 16), (3, 27), (4, 64)] {
        let h = random_potts(3, 3, d, 1.0, 40 + d as u64);
        let exact = exact_spectrum(&h, DEFAULT_LIMIT).unwrap();
        let total = exact.len();
        let sp = SearchParams { max_states: total, cut_off_prob: 0.0, merge: false };
        let sol = solve(&h, ContractionParams::new(chi, 1, 1.0).unwrap(), sp);
        assert_eq!(sol.len(), total);
        for (a, b) in sol.energies.iter().zip(&exact.energies) {
            assert!((a - b).abs() < 1e-9);
        }
        let got: BTreeSet<_> = sol.states.iter().cloned().collect();
        let want: BTreeSet<_> = exact.states.iter().cloned().collect();
        assert_eq!(got, want);
    }
}

#[test]
fn probabilities_match_boltzmann_weights() {
    let h = random_potts(3, 3, 2, 1.0, 77);
    let beta = 1.5;
    let exact = exact_spectrum(&h, DEFAULT_LIMIT).unwrap();
    let log_z = exact.log_partition_function(beta);
    let sp = SearchParams { max_states: 512, cut_off_prob: 0.0, merge: false };
    let sol = solve(&h, ContractionParams::new(16, 1, beta).unwrap(), sp);
    for (lp, e) in sol.log_probabilities.iter().zip(&sol.energies) {
        let want = -beta * e - log_z;
        assert!((lp - want).exp_m1().abs() < 1e-6, "{lp} vs {want}");
    }
}

#[test]
fn best_energy_non_increasing_in_max_states() {
    for seed in 0..4 {
        let topo = ClusterTopology::new(4, 4, 1);
        let g = king_ising(topo, Distribution::Uniform { low: -1.0, high: 1.0 }, None, 90 + seed);
        let h = PottsHamiltonian::cluster(&g, topo).unwrap();
        let mut prev = f64::INFINITY;
        for max_states in [2, 8, 64, 256] {
            let sp = SearchParams { max_states, cut_off_prob: 1e-4, merge: true };
            let best = solve(&h, ContractionParams::new(16, 1, 2.0).unwrap(), sp).best_energy().unwrap();
            assert!(best <= prev + 1e-12, "seed {seed}: {best} after {prev} at max_states {max_states}");
            prev = best;
        }
    }
}

#[test]
fn merging_keeps_the_minimum() {
    for seed in 0..5 {
        let h = random_potts(3, 3, 2, 1.0, 120 + seed);
        let cp = ContractionParams::new(16, 1, 1.0).unwrap();
        let with = solve(&h, cp, SearchParams { max_states: 512, cut_off_prob: 0.0, merge: true });
        let without = solve(&h, cp, SearchParams { max_states: 512, cut_off_prob: 0.0, merge: false });
        assert_eq!(with.best_energy(), without.best_energy());
        assert!(with.len() < without.len());
    }
}

#[test]
fn reported_energies_are_exact() {
    let h = random_potts(4, 4, 3, 1.0, 5);
    let sol = solve(&h, ContractionParams::new(8, 1, 2.0).unwrap(), SearchParams::new(64, 1e-3).unwrap());
    assert!(sol.energies.windows(2).all(|w| w[0] <= w[1]));
    for (s, e) in sol.states.iter().zip(&sol.energies) {
        assert!((h.energy(s).unwrap() - e).abs() <= 1e-9 * e.abs().max(1.0));
    }
}

#[test]
fn states_are_mapped_back_to_the_input_frame() {
    let h = random_potts(2, 3, 3, 1.0, 8);
    let exact = exact_spectrum(&h, DEFAULT_LIMIT).unwrap();
    for tr in LatticeTransform::ALL {
        let sol = low_energy_spectrum::<f64>(
            &h,
            tr,
            &ContractionParams::new(16, 1, 2.0).unwrap(),
            &SearchParams::new(32, 1e-4).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(sol.states[0], exact.states[0], "{}", tr.name());
        assert_eq!(sol.transform_energies, vec![(tr, sol.energies[0])]);
    }
}

#[test]
fn single_precision_agrees_on_ground_state() {
    let h = random_potts(4, 4, 2, 1.0, 13);
    let cp = ContractionParams::new(16, 1, 2.0).unwrap();
    let sp = SearchParams::default();
    let a = low_energy_spectrum::<f32>(&h, LatticeTransform::IDENTITY, &cp, &sp, None).unwrap();
    let b = low_energy_spectrum::<f64>(&h, LatticeTransform::IDENTITY, &cp, &sp, None).unwrap();
    assert_eq!(a.states[0], b.states[0]);
}

#[test]
fn unpacked_droplet_energy_is_exact() {
    // A 3x3 grid where setting site 0 to 1 costs 0.5 and nothing else matters.
    let mut h = PottsHamiltonian::new(3, 3, vec![2; 9]).unwrap();
    for site in 0..9 {
        h.set_node_energy(site, 1, if site == 0 { 0.5 } else { 3.0 }).unwrap();
    }
    let dp = DropletParams::new(1.0, 1, DropletMode::Potts).unwrap();
    let sol = low_energy_spectrum::<f64>(
        &h,
        LatticeTransform::IDENTITY,
        &ContractionParams::new(4, 1, 1.0).unwrap(),
        &SearchParams { max_states: 4, cut_off_prob: 0.0, merge: true },
        Some(&dp),
    )
    .unwrap();
    assert_eq!(sol.states[0], vec![0; 9]);
    let expected = Droplet { flips: [(0, 1)].into(), delta_energy: 0.5, sub_droplets: vec![] };
    assert_eq!(sol.droplets[0], vec![expected]);
    let unpacked = unpack_droplets(&sol);
    let pos = unpacked.states.iter().position(|s| s[0] == 1 && s[1..].iter().all(|&v| v == 0)).unwrap();
    assert_eq!(unpacked.energies[pos], 0.5);
    assert_eq!(h.energy(&unpacked.states[pos]).unwrap(), 0.5);
}

#[test]
fn droplets_respect_separation() {
    let topo = ClusterTopology::new(3, 4, 2);
    let g = king_ising(topo, Distribution::Uniform { low: -1.0, high: 1.0 }, None, 3);
    let h = PottsHamiltonian::cluster(&g, topo).unwrap();
    for cutoff in [0, 3, 8] {
        let dp = DropletParams::new(2.0, cutoff, DropletMode::Spin).unwrap();
        let sol = low_energy_spectrum::<f64>(
            &h,
            LatticeTransform::IDENTITY,
            &ContractionParams::new(16, 1, 2.0).unwrap(),
            &SearchParams::default(),
            Some(&dp),
        )
        .unwrap();
        for (state, ds) in sol.states.iter().zip(&sol.droplets) {
            for (i, a) in ds.iter().enumerate() {
                assert!(a.delta_energy <= 2.0 && a.delta_energy >= 0.0);
                assert!(a.depth() <= dp.max_depth);
                for b in &ds[i + 1..] {
                    assert!(kingpeps::search::droplet_distance(&h, state, a, b, DropletMode::Spin) >= cutoff);
                }
            }
        }
        for (s, e) in unpack_droplets(&sol).states.iter().zip(unpack_droplets(&sol).energies) {
            let direct = g.energy(&h.decode(s).unwrap()).unwrap();
            assert!((direct - e).abs() < 1e-9);
        }
    }
}
