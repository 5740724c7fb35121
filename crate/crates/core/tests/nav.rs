mod common;

use common::nav::{block_centroid, celestial_round_trip};

#[test]
fn synthetic_scene_round_trip() {
    for seed in 0..5 {
        let e = celestial_round_trip(seed);
        assert!(e.inliers >= 18, "seed {seed}: {} inliers", e.inliers);
        assert!(e.phi_deg < 0.1, "seed {seed}: roll {}", e.phi_deg);
        assert!(e.translation_px < 0.5, "seed {seed}: shift {}", e.translation_px);
        assert!(e.boresight_deg < 0.05, "seed {seed}: boresight {}", e.boresight_deg);
    }
}

#[test]
fn nine_pixel_block_centroid() {
    assert_eq!(block_centroid(), vec![(11.0, 21.0)]);
}
