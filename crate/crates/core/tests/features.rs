use std::fs::File;
use std::path::PathBuf;

use guandan::engine::EpisodeState;
use guandan::features::{
    encode_state_compact, read_fixture, sample_inputs, write_fixture, HAND, INPUT_DIM, OTHERS_PLAYED, STATE_DIM, UNSEEN,
};
use guandan::CardMultiset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_SEEDS: [u64; 3] = [11, 22, 33];
const GOLDEN_STRIDE: usize = 97;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_inputs.bin")
}

/// Set `GUANDAN_UPDATE_FIXTURES=1` to rewrite the file after an intended
/// encoding change.
#[test]
fn golden_inputs_are_stable() {
    let fresh = sample_inputs(&GOLDEN_SEEDS, GOLDEN_STRIDE);
    assert!(fresh.len() > 20);
    assert!(fresh.iter().all(|v| v.len() == INPUT_DIM));
    if std::env::var_os("GUANDAN_UPDATE_FIXTURES").is_some() {
        write_fixture(File::create(golden_path()).unwrap(), &fresh).unwrap();
    }
    let stored = read_fixture(File::open(golden_path()).expect("golden fixture present")).unwrap();
    assert_eq!(stored.len(), fresh.len());
    for (i, (a, b)) in stored.iter().zip(&fresh).enumerate() {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()), "vector {i} differs");
    }
}

fn segment(v: &[i8], at: usize) -> [u8; 54] {
    std::array::from_fn(|i| {
        assert!(v[at + i] >= 0);
        v[at + i] as u8
    })
}

#[test]
fn every_fuzzed_state_conserves_the_deck() {
    let deck = *CardMultiset::full_deck().counts();
    let mut states = 0;
    for seed in 0..40u64 {
        let mut state = EpisodeState::new_episode(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        while !state.is_terminal() {
            let viewer = state.current_player();
            let obs = state.observe(viewer);
            let v = encode_state_compact(&obs).unwrap();
            assert_eq!(v.len(), STATE_DIM);
            let mut total = [0u8; 54];
            for seg in [HAND, UNSEEN, OTHERS_PLAYED, OTHERS_PLAYED + 54, OTHERS_PLAYED + 108] {
                for (t, c) in total.iter_mut().zip(segment(&v, seg)) {
                    *t += c;
                }
            }
            for (t, c) in total.iter_mut().zip(obs.played[viewer.index()].counts()) {
                *t += c;
            }
            assert_eq!(total, deck, "seed {seed}");
            states += 1;
            let legal = obs.legal_actions();
            state.step(&legal[rng.gen_range(0..legal.len())]).unwrap();
        }
    }
    assert!(states > 10_000);
}
