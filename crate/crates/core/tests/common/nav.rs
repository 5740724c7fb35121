use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsim::imaging::{cluster_centroids, threshold, GrayImage};
use tdsim::nav::{
    attitude_from_transform, navigate, project, query, render_points, separation_deg, to_centered, EuclideanTransform,
    Extraction, Projection, SkyWindow, StarRecord,
};

pub struct CelestialErrors {
    pub phi_deg: f64,
    pub translation_px: f64,
    pub boresight_deg: f64,
    pub inliers: usize,
}

/// Twenty catalog stars inside a 10°×8° window seen through a known
/// transform, rendered as 3×3 blocks and solved back.
pub fn celestial_round_trip(seed: u64) -> CelestialErrors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ra0, de0) = (rng.random_range(20.0..340.0), rng.random_range(-60.0..60.0));
    let window = SkyWindow::centered(ra0, de0, 10.0, 8.0, 4.0);
    let (w, h, scale) = (800, 640, 60.0);
    let proj = Projection::for_window(&window, scale, w, h);
    let mut catalog = Vec::new();
    while catalog.len() < 20 {
        // stay clear of the borders so every star survives the transform
        let ra = ra0 + rng.random_range(-3.5..3.5) / de0.to_radians().cos();
        let de = de0 + rng.random_range(-3.0..3.0);
        let s = StarRecord { ra_deg: ra.rem_euclid(360.0), de_deg: de, bt_mag: rng.random_range(4.5..9.0) };
        let p = proj.project(s.ra_deg, s.de_deg).unwrap();
        let near = catalog.iter().any(|o: &StarRecord| {
            let q = proj.project(o.ra_deg, o.de_deg).unwrap();
            (p.0 - q.0).hypot(p.1 - q.1) < 12.0
        });
        if !near {
            catalog.push(s);
        }
    }
    // bright stars the query drops
    for _ in 0..5 {
        catalog.push(StarRecord { ra_deg: ra0 + rng.random_range(-3.0..3.0), de_deg: de0 + rng.random_range(-3.0..3.0), bt_mag: 2.0 });
    }
    let truth = EuclideanTransform { a: rng.random_range(-20.0..20.0), b: rng.random_range(-20.0..20.0), phi: rng.random_range(-0.2..0.2) };
    let chart = project(&query(&catalog, &window), &proj).unwrap();
    let spots: Vec<_> = to_centered(&chart, &proj).into_iter().map(|p| truth.apply(p)).map(|(x, y)| (x + proj.cx, y + proj.cy)).collect();
    let img = render_points(&spots, w, h, 255, 10, 250);
    let sol = navigate(&img, &catalog, &window, scale, Extraction::for_image(&img)).unwrap();
    let want = attitude_from_transform(&truth, &proj);
    CelestialErrors {
        phi_deg: (sol.transform.phi - truth.phi).abs().to_degrees(),
        translation_px: (sol.transform.a - truth.a).abs().max((sol.transform.b - truth.b).abs()),
        boresight_deg: separation_deg(sol.attitude.ra, sol.attitude.de, want.ra, want.de),
        inliers: sol.inliers,
    }
}

/// Centroid of a lone 3×3 block centered on (11, 21).
pub fn block_centroid() -> Vec<(f64, f64)> {
    let mut img = GrayImage::filled(32, 32, 255, 0).unwrap();
    for y in 20..=22 {
        for x in 10..=12 {
            img.set(x, y, 255);
        }
    }
    cluster_centroids(&threshold(&img, 128), 9)
}
