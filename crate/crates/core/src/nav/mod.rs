//! Star-field attitude determination: catalog query, tangent-plane
//! projection, Euclidean matching of catalog and image points, and the
//! resulting boresight and roll.
//!
//! Transforms act on image-centered pixel coordinates (image center at the
//! origin), so a pure roll about the boresight leaves the boresight fixed.

mod sky;
mod solve;

pub use sky::{project, query, read_catalog, separation_deg, BehindTangent, CatalogError, Projection, SkyWindow, StarRecord};
pub use solve::{apply_transform, fit_euclidean, match_and_solve, EuclideanTransform, MatchError, MatchResult, Point, MATCH_TOL};

use thiserror::Error;

use nalgebra::UnitQuaternion;

use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::imaging::{cluster_centroids, threshold, GrayImage};
use crate::value::{Value, ValueTag};

/// Boresight direction (deg) and roll about it (rad).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Attitude {
    pub ra: f64,
    pub de: f64,
    pub roll: f64,
}

/// Boresight is the catalog-plane point that `t` carries onto the image
/// center; roll is `φ`.
pub fn attitude_from_transform(t: &EuclideanTransform, proj: &Projection) -> Attitude {
    let (x, y) = t.invert((0.0, 0.0));
    let (ra, de) = proj.deproject(x + proj.cx, y + proj.cy);
    Attitude { ra, de, roll: t.phi }
}

pub fn to_centered(points: &[Point], proj: &Projection) -> Vec<Point> {
    points.iter().map(|&(x, y)| (x - proj.cx, y - proj.cy)).collect()
}

#[derive(Debug, Error)]
pub enum NavError {
    #[error(transparent)]
    Projection(#[from] BehindTangent),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NavSolution {
    pub attitude: Attitude,
    pub transform: EuclideanTransform,
    pub inliers: usize,
    pub rms_px: f64,
    pub image_points: usize,
    pub catalog_points: usize,
}

/// Pixel threshold and cluster size used by [`navigate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extraction {
    pub level: u16,
    pub min_pixels: usize,
}

impl Extraction {
    /// Half of `maxval`, nine-pixel clusters.
    pub fn for_image(img: &GrayImage) -> Self {
        Self { level: img.maxval().div_ceil(2), min_pixels: 9 }
    }
}

/// Full pipeline: threshold, centroid clusters, query and project the
/// catalog, match, and read off the attitude.
pub fn navigate(
    img: &GrayImage,
    catalog: &[StarRecord],
    window: &SkyWindow,
    plate_scale: f64,
    extraction: Extraction,
) -> Result<NavSolution, NavError> {
    let proj = Projection::for_window(window, plate_scale, img.width(), img.height());
    let spots = cluster_centroids(&threshold(img, extraction.level), extraction.min_pixels);
    let stars = query(catalog, window);
    let chart = project(&stars, &proj)?;
    let m = match_and_solve(&to_centered(&spots, &proj), &to_centered(&chart, &proj))?;
    Ok(NavSolution {
        attitude: attitude_from_transform(&m.transform, &proj),
        transform: m.transform,
        inliers: m.pairs.len(),
        rms_px: m.rms,
        image_points: spots.len(),
        catalog_points: chart.len(),
    })
}

/// Draws each point as a 3×3 block of `value` (centered on the rounded
/// position) over a `background` field. Points whose block would leave the
/// image are skipped.
pub fn render_points(points: &[Point], width: usize, height: usize, maxval: u16, background: u16, value: u16) -> GrayImage {
    let mut img = GrayImage::filled(width, height, maxval, background.min(maxval)).expect("consistent size");
    for &(x, y) in points {
        let (cx, cy) = (x.round(), y.round());
        if cx < 1.0 || cy < 1.0 || cx > width as f64 - 2.0 || cy > height as f64 - 2.0 {
            continue;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        for yy in cy - 1..=cy + 1 {
            for xx in cx - 1..=cx + 1 {
                img.set(xx, yy, value);
            }
        }
    }
    img
}

/// Component `nav.attitude`: ideal attitude sensor. Input `q` (body
/// orientation); outputs `phi`, the rotation vector of `q_ref⁻¹ q` (body
/// axes, rad), and its magnitude `angle`.
#[derive(Clone, Debug)]
pub struct AttitudeError {
    pub q_ref: UnitQuaternion<f64>,
}

impl Component for AttitudeError {
    fn kind(&self) -> &str {
        "nav.attitude"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("q", ValueTag::Quat)]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("phi", ValueTag::Vec3), OutputPort::new("angle", ValueTag::Scalar)]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let phi = (self.q_ref.inverse() * ctx.quat(0)?).scaled_axis();
        Ok(vec![Value::Vec3(phi), Value::Scalar(phi.norm())])
    }
}
