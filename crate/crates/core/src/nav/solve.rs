use thiserror::Error;

/// `x' = (x+a)cosφ + (y+b)sinφ`, `y' = −(x+a)sinφ + (y+b)cosφ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EuclideanTransform {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
}

pub type Point = (f64, f64);

impl EuclideanTransform {
    pub fn apply(&self, p: Point) -> Point {
        let (x, y) = (p.0 + self.a, p.1 + self.b);
        let (s, c) = self.phi.sin_cos();
        (x * c + y * s, -x * s + y * c)
    }

    pub fn invert(&self, p: Point) -> Point {
        let (s, c) = self.phi.sin_cos();
        (p.0 * c - p.1 * s - self.a, p.0 * s + p.1 * c - self.b)
    }
}

pub fn apply_transform(t: &EuclideanTransform, p: Point) -> Point {
    t.apply(p)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("need at least {need} points, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("all source points coincide; rotation is undetermined")]
    Degenerate,
    #[error("no match: best hypothesis explains only {0} points")]
    NoMatch(usize),
}

/// Least-squares Euclidean transform taking each source point onto its
/// target: rotation by 2-D orthogonal Procrustes on centered sets, then the
/// translation.
pub fn fit_euclidean(pairs: &[(Point, Point)]) -> Result<EuclideanTransform, MatchError> {
    if pairs.len() < 2 {
        return Err(MatchError::TooFew { need: 2, got: pairs.len() });
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
    for ((a, b), (c, d)) in pairs {
        sx += a;
        sy += b;
        dx += c;
        dy += d;
    }
    let (sx, sy, dx, dy) = (sx / n, sy / n, dx / n, dy / n);
    let (mut num, mut den, mut spread) = (0.0, 0.0, 0.0);
    for ((a, b), (c, d)) in pairs {
        let (s0, s1, d0, d1) = (a - sx, b - sy, c - dx, d - dy);
        num += d0 * s1 - d1 * s0;
        den += d0 * s0 + d1 * s1;
        spread += s0 * s0 + s1 * s1;
    }
    if spread == 0.0 {
        return Err(MatchError::Degenerate);
    }
    let phi = num.atan2(den);
    let (s, c) = phi.sin_cos();
    // u = d̄ − R s̄, translation t = Rᵀ u
    let (ux, uy) = (dx - (c * sx + s * sy), dy - (-s * sx + c * sy));
    Ok(EuclideanTransform { a: c * ux - s * uy, b: s * ux + c * uy, phi })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub transform: EuclideanTransform,
    /// `(catalog index, image index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub rms: f64,
}

/// Inlier radius (px).
pub const MATCH_TOL: f64 = 1.5;

fn dist(p: Point, q: Point) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

/// Greedy one-to-one correspondences within `MATCH_TOL`, closest first.
fn correspond(t: &EuclideanTransform, catalog: &[Point], image: &[Point]) -> Vec<(usize, usize)> {
    let mut cand = Vec::new();
    for (i, &c) in catalog.iter().enumerate() {
        let p = t.apply(c);
        for (j, &q) in image.iter().enumerate() {
            let d = dist(p, q);
            if d <= MATCH_TOL {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_c, mut used_i) = (vec![false; catalog.len()], vec![false; image.len()]);
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if !used_c[i] && !used_i[j] {
            used_c[i] = true;
            used_i[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

fn score(t: &EuclideanTransform, catalog: &[Point], image: &[Point]) -> usize {
    let moved: Vec<Point> = catalog.iter().map(|&c| t.apply(c)).collect();
    image.iter().filter(|&&q| moved.iter().any(|&p| dist(p, q) <= MATCH_TOL)).count()
}

/// Finds the transform taking catalog points onto image points.
///
/// Every catalog pair is tried against every image pair of similar length
/// (both orientations) in index order; each hypothesis is scored by the
/// number of image points within [`MATCH_TOL`] of a transformed catalog
/// point, the first best hypothesis wins, and it is refined by least squares
/// on its inliers.
pub fn match_and_solve(image: &[Point], catalog: &[Point]) -> Result<MatchResult, MatchError> {
    for set in [image, catalog] {
        if set.len() < 3 {
            return Err(MatchError::TooFew { need: 3, got: set.len() });
        }
    }
    let mut best: Option<(usize, EuclideanTransform)> = None;
    'search: for i in 0..catalog.len() {
        for j in i + 1..catalog.len() {
            let lc = dist(catalog[i], catalog[j]);
            if lc < 2.0 * MATCH_TOL {
                continue;
            }
            for k in 0..image.len() {
                for l in 0..image.len() {
                    if k == l || (dist(image[k], image[l]) - lc).abs() > 2.0 * MATCH_TOL {
                        continue;
                    }
                    let Ok(t) = fit_euclidean(&[(catalog[i], image[k]), (catalog[j], image[l])]) else {
                        continue;
                    };
                    let s = score(&t, catalog, image);
                    if best.as_ref().is_none_or(|(b, _)| s > *b) {
                        best = Some((s, t));
                        if s == image.len() {
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    let (s, mut t) = best.ok_or(MatchError::NoMatch(0))?;
    if s < 3 {
        return Err(MatchError::NoMatch(s));
    }
    let mut pairs = correspond(&t, catalog, image);
    for _ in 0..3 {
        let data: Vec<(Point, Point)> = pairs.iter().map(|&(i, j)| (catalog[i], image[j])).collect();
        t = fit_euclidean(&data)?;
        let next = correspond(&t, catalog, image);
        if next == pairs {
            break;
        }
        pairs = next;
    }
    if pairs.len() < 3 {
        return Err(MatchError::NoMatch(pairs.len()));
    }
    let rms = (pairs.iter().map(|&(i, j)| dist(t.apply(catalog[i]), image[j]).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    Ok(MatchResult { transform: t, pairs, rms })
}
