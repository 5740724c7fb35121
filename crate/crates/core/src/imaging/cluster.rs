use super::BinaryImage;

/// One 8-connected foreground component.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub pixels: usize,
    /// Mean pixel coordinate `(x, y)`.
    pub centroid: (f64, f64),
}

/// All 8-connected components in raster order of their first pixel.
pub fn label_clusters(img: &BinaryImage) -> Vec<Cluster> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || !img.bits()[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut n, mut sx, mut sy) = (0usize, 0u64, 0u64);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            n += 1;
            sx += x as u64;
            sy += y as u64;
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && img.bits()[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Cluster { pixels: n, centroid: (sx as f64 / n as f64, sy as f64 / n as f64) });
    }
    out
}

/// Centroids of components with at least `min_pixels` members; smaller
/// components are dropped as noise.
pub fn cluster_centroids(img: &BinaryImage, min_pixels: usize) -> Vec<(f64, f64)> {
    label_clusters(img).into_iter().filter(|c| c.pixels >= min_pixels.max(1)).map(|c| c.centroid).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(img: &mut BinaryImage, x0: usize, y0: usize) {
        for y in y0..y0 + 3 {
            for x in x0..x0 + 3 {
                img.set(x, y, true);
            }
        }
    }

    #[test]
    fn nine_pixel_block() {
        let mut img = BinaryImage::empty(40, 40);
        block(&mut img, 10, 20);
        assert_eq!(cluster_centroids(&img, 9), vec![(11.0, 21.0)]);
    }

    #[test]
    fn isolated_pixel_dropped() {
        let mut img = BinaryImage::empty(10, 10);
        img.set(4, 4, true);
        assert!(cluster_centroids(&img, 9).is_empty());
        assert_eq!(cluster_centroids(&img, 1), vec![(4.0, 4.0)]);
    }

    #[test]
    fn diagonal_neighbors_connect() {
        let mut img = BinaryImage::empty(5, 5);
        img.set(0, 0, true);
        img.set(1, 1, true);
        img.set(2, 2, true);
        assert_eq!(label_clusters(&img).len(), 1);
    }
}
