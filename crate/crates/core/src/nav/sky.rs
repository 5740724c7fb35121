use std::io::BufRead;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarRecord {
    pub ra_deg: f64,
    pub de_deg: f64,
    pub bt_mag: f64,
}

/// Rectangular sky region plus a magnitude cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkyWindow {
    pub ra_min: f64,
    pub ra_max: f64,
    pub de_min: f64,
    pub de_max: f64,
    pub mag_min: f64,
}

impl SkyWindow {
    pub fn centered(ra0: f64, de0: f64, ra_span: f64, de_span: f64, mag_min: f64) -> Self {
        Self {
            ra_min: ra0 - ra_span / 2.0,
            ra_max: ra0 + ra_span / 2.0,
            de_min: de0 - de_span / 2.0,
            de_max: de0 + de_span / 2.0,
            mag_min,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.ra_min + self.ra_max) / 2.0, (self.de_min + self.de_max) / 2.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("catalog line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("catalog header must contain RAdeg, DEdeg and BTmag")]
    Header,
    #[error("catalog read failed: {0}")]
    Io(String),
}

/// Reads a CSV catalog whose header names the columns `RAdeg`, `DEdeg` and
/// `BTmag` (any order, extra columns ignored).
pub fn read_catalog<R: BufRead>(r: R) -> Result<Vec<StarRecord>, CatalogError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(CatalogError::Header)?.map_err(|e| CatalogError::Io(e.to_string()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |n: &str| names.iter().position(|h| *h == n).ok_or(CatalogError::Header);
    let (ira, ide, imag) = (col("RAdeg")?, col("DEdeg")?, col("BTmag")?);
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CatalogError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |k: usize| -> Result<f64, CatalogError> {
            let s = fields.get(k).ok_or_else(|| CatalogError::Parse { line: i + 2, message: "missing field".into() })?;
            s.parse().map_err(|_| CatalogError::Parse { line: i + 2, message: format!("bad number `{s}`") })
        };
        let rec = StarRecord { ra_deg: get(ira)?, de_deg: get(ide)?, bt_mag: get(imag)? };
        if !(0.0..360.0).contains(&rec.ra_deg) || !(-90.0..=90.0).contains(&rec.de_deg) {
            return Err(CatalogError::Parse { line: i + 2, message: "coordinates out of range".into() });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Rows strictly inside the window with `BTmag > mag_min`, ascending by RA,
/// then DE, then input order.
pub fn query(catalog: &[StarRecord], w: &SkyWindow) -> Vec<StarRecord> {
    let mut rows: Vec<StarRecord> = catalog
        .iter()
        .filter(|s| {
            w.ra_min < s.ra_deg && s.ra_deg < w.ra_max && w.de_min < s.de_deg && s.de_deg < w.de_max && s.bt_mag > w.mag_min
        })
        .copied()
        .collect();
    rows.sort_by(|a, b| a.ra_deg.total_cmp(&b.ra_deg).then(a.de_deg.total_cmp(&b.de_deg)));
    rows
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("star at RA {ra}°, DE {de}° is 90° or more from the tangent point")]
pub struct BehindTangent {
    pub ra: f64,
    pub de: f64,
}

/// Tangent-plane (gnomonic) projection about `(ra0, de0)` onto a pixel grid
/// of `plate_scale` px/deg. The tangent point lands on the image center,
/// `x` grows with RA and `y` grows downward (toward lower DE).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub ra0: f64,
    pub de0: f64,
    pub plate_scale: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Projection {
    pub fn new(ra0: f64, de0: f64, plate_scale: f64, width: usize, height: usize) -> Self {
        Self { ra0, de0, plate_scale, cx: (width as f64 - 1.0) / 2.0, cy: (height as f64 - 1.0) / 2.0 }
    }

    pub fn for_window(w: &SkyWindow, plate_scale: f64, width: usize, height: usize) -> Self {
        let (ra0, de0) = w.center();
        Self::new(ra0, de0, plate_scale, width, height)
    }

    /// Standard coordinates `(ξ, η)` in degrees.
    pub fn standard(&self, ra: f64, de: f64) -> Result<(f64, f64), BehindTangent> {
        let (a, d) = (ra.to_radians(), de.to_radians());
        let (a0, d0) = (self.ra0.to_radians(), self.de0.to_radians());
        let cos_c = d0.sin() * d.sin() + d0.cos() * d.cos() * (a - a0).cos();
        if cos_c <= 0.0 {
            return Err(BehindTangent { ra, de });
        }
        let xi = d.cos() * (a - a0).sin() / cos_c;
        let eta = (d0.cos() * d.sin() - d0.sin() * d.cos() * (a - a0).cos()) / cos_c;
        Ok((xi.to_degrees(), eta.to_degrees()))
    }

    pub fn project(&self, ra: f64, de: f64) -> Result<(f64, f64), BehindTangent> {
        let (xi, eta) = self.standard(ra, de)?;
        Ok((self.cx + xi * self.plate_scale, self.cy - eta * self.plate_scale))
    }

    /// Pixel back to `(RA, DE)` in degrees.
    pub fn deproject(&self, x: f64, y: f64) -> (f64, f64) {
        let xi = ((x - self.cx) / self.plate_scale).to_radians();
        let eta = (-(y - self.cy) / self.plate_scale).to_radians();
        let (a0, d0) = (self.ra0.to_radians(), self.de0.to_radians());
        let rho = xi.hypot(eta);
        if rho == 0.0 {
            return (self.ra0, self.de0);
        }
        let c = rho.atan();
        let de = (c.cos() * d0.sin() + eta * c.sin() * d0.cos() / rho).asin();
        let ra = a0 + (xi * c.sin()).atan2(rho * d0.cos() * c.cos() - eta * d0.sin() * c.sin());
        (ra.to_degrees().rem_euclid(360.0), de.to_degrees())
    }
}

/// Projects every star; fails on the first one behind the tangent plane.
pub fn project(stars: &[StarRecord], p: &Projection) -> Result<Vec<(f64, f64)>, BehindTangent> {
    stars.iter().map(|s| p.project(s.ra_deg, s.de_deg)).collect()
}

/// Angular separation in degrees.
pub fn separation_deg(ra1: f64, de1: f64, ra2: f64, de2: f64) -> f64 {
    let (a1, d1, a2, d2) = (ra1.to_radians(), de1.to_radians(), ra2.to_radians(), de2.to_radians());
    let h = ((d2 - d1) / 2.0).sin().powi(2) + d1.cos() * d2.cos() * ((a2 - a1) / 2.0).sin().powi(2);
    (2.0 * h.sqrt().asin()).to_degrees()
}
