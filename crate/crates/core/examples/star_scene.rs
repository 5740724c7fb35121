//! Renders `fixtures/star_scene.pgm` from `fixtures/stars.csv`.
//!
//! The scene shows the catalog window centered on RA 80°, DE 20° at
//! 60 px/deg, moved by `a = 12.5`, `b = -7.25` px and rolled by 4°.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use tdsim::imaging::write_pgm;
use tdsim::nav::{apply_transform, project, query, read_catalog, render_points, to_centered, EuclideanTransform, Projection, SkyWindow};

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let catalog = read_catalog(BufReader::new(File::open(root.join("stars.csv")).unwrap())).unwrap();
    let window = SkyWindow::centered(80.0, 20.0, 10.0, 8.0, 0.0);
    let (w, h) = (640, 480);
    let proj = Projection::for_window(&window, 60.0, w, h);
    let chart = project(&query(&catalog, &window), &proj).unwrap();
    let t = EuclideanTransform { a: 12.5, b: -7.25, phi: 4f64.to_radians() };
    let spots: Vec<_> = to_centered(&chart, &proj).into_iter().map(|p| apply_transform(&t, p)).map(|(x, y)| (x + proj.cx, y + proj.cy)).collect();
    let img = render_points(&spots, w, h, 255, 0, 255);
    write_pgm(&img, BufWriter::new(File::create(root.join("star_scene.pgm")).unwrap())).unwrap();
    println!("{} stars in window", chart.len());
}
