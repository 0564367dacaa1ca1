//! Network geometry, large-scale fading, array responses and local-scattering
//! spatial correlation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{db_to_linear, SystemConfig};
use crate::linalg::{CMat, CVec, C0};
use crate::random::{purpose, stream};
use crate::{Error, Result};

/// Planar position in km.
pub type Point = [f64; 2];

/// Positions of every BS, IRS and UE on the wrapped square.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub area_km: f64,
    /// `(rows, cols)` of the cell grid.
    pub grid: (usize, usize),
    pub bs: Vec<Point>,
    pub irs: Vec<Point>,
    /// UE `(l, k)` is stored at `l * K + k`.
    pub ue: Vec<Point>,
    pub users_per_cell: usize,
}

impl Geometry {
    pub fn ue_position(&self, cell: usize, user: usize) -> Point {
        self.ue[cell * self.users_per_cell + user]
    }
}

/// Grid `(rows, cols)` with `rows * cols = cells` and `rows <= cols <= 2 rows`,
/// choosing the squarest factorization.
pub fn grid_shape(cells: usize) -> Result<(usize, usize)> {
    let mut best = None;
    for rows in 1..=cells {
        if cells % rows != 0 {
            continue;
        }
        let cols = cells / rows;
        if rows <= cols && cols <= 2 * rows {
            best = Some((rows, cols));
        }
    }
    best.ok_or(Error::UnsupportedCellCount(cells))
}

fn wrap_coord(x: f64, area: f64) -> f64 {
    let r = x - area * libm::floor(x / area);
    if r >= area {
        0.0
    } else {
        r
    }
}

/// Minimum-image displacement from `a` to `b` on the torus.
pub fn wrap_delta(a: Point, b: Point, area_km: f64) -> [f64; 2] {
    let mut d = [b[0] - a[0], b[1] - a[1]];
    for x in d.iter_mut() {
        *x -= area_km * libm::round(*x / area_km);
    }
    d
}

/// Euclidean distance on the torus of side `area_km`.
pub fn wrap_distance(a: Point, b: Point, area_km: f64) -> f64 {
    let d = wrap_delta(a, b, area_km);
    libm::hypot(d[0], d[1])
}

/// Places BSs at cell centres, one IRS per cell at `irs_distance_km` from its
/// BS, and `K` UEs per cell uniformly (in area) inside the sector facing the
/// IRS.
pub fn build_geometry(cfg: &SystemConfig, seed: u64) -> Result<Geometry> {
    let (rows, cols) = grid_shape(cfg.cells)?;
    let area = cfg.area_km;
    let mut bs = Vec::with_capacity(cfg.cells);
    for l in 0..cfg.cells {
        let (r, c) = (l / cols, l % cols);
        bs.push([(c as f64 + 0.5) * area / cols as f64, (r as f64 + 0.5) * area / rows as f64]);
    }
    let axis = cfg.irs_azimuth_deg.to_radians();
    let irs: Vec<Point> = bs
        .iter()
        .map(|b| {
            [
                wrap_coord(b[0] + cfg.irs_distance_km * libm::cos(axis), area),
                wrap_coord(b[1] + cfg.irs_distance_km * libm::sin(axis), area),
            ]
        })
        .collect();

    let mut rng = stream(seed, &[purpose::GEOMETRY]);
    let half = 0.5 * cfg.sector_width_deg.to_radians();
    let (r2min, r2max) = (cfg.ue_min_distance_km * cfg.ue_min_distance_km, cfg.ue_max_distance_km * cfg.ue_max_distance_km);
    let mut ue = Vec::with_capacity(cfg.cells * cfg.users_per_cell);
    for b in &bs {
        for _ in 0..cfg.users_per_cell {
            let ang = axis + rng.random_range(-half..=half);
            let rad = libm::sqrt(r2min + (r2max - r2min) * rng.random::<f64>());
            ue.push([
                wrap_coord(b[0] + rad * libm::cos(ang), area),
                wrap_coord(b[1] + rad * libm::sin(ang), area),
            ]);
        }
    }
    Ok(Geometry { area_km: area, grid: (rows, cols), bs, irs, ue, users_per_cell: cfg.users_per_cell })
}

/// UPA response with entries `exp(j 2 pi s (h sin(az) cos(el) + v sin(el)))`;
/// element `(h, v)` sits at index `v * H + h`.
pub fn upa_steering(dims: (usize, usize), azimuth: f64, elevation: f64, spacing: f64) -> CVec {
    let (nh, nv) = dims;
    let kh = TAU * spacing * libm::sin(azimuth) * libm::cos(elevation);
    let kv = TAU * spacing * libm::sin(elevation);
    CVec::from_fn(nh * nv, |i, _| {
        let (h, v) = ((i % nh) as f64, (i / nh) as f64);
        Complex64::from_polar(1.0, kh * h + kv * v)
    })
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Nodes and weights for `E[f(mu + sigma Z)]`, Z standard normal, by composite
/// Gauss-Legendre on `mu +- 6 sigma`. `max_rate` bounds `|d phase / dx|`.
fn gaussian_rule(mu: f64, sigma: f64, max_rate: f64) -> Vec<(f64, f64)> {
    let range = 12.0 * sigma;
    let width = sigma.min(3.0 / max_rate.max(1e-12));
    let panels = libm::ceil(range / width).max(4.0) as usize;
    let h = range / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    let mut total = 0.0;
    for p in 0..panels {
        let centre = -6.0 * sigma + (p as f64 + 0.5) * h;
        for i in 0..4 {
            for s in [-1.0, 1.0] {
                let x = centre + s * 0.5 * h * GL_X[i];
                let w = 0.5 * h * GL_W[i] * libm::exp(-0.5 * (x / sigma) * (x / sigma));
                total += w;
                out.push((mu + x, w));
            }
        }
    }
    for n in out.iter_mut() {
        n.1 /= total;
    }
    out
}

/// Spatial correlation `E[a(az, el) a(az, el)^H]` of a UPA under independent
/// Gaussian azimuth/elevation perturbations with standard deviations
/// `asd_az`, `asd_el` (radians). The result has a unit diagonal.
pub fn local_scattering_corr(
    dims: (usize, usize),
    azimuth: f64,
    elevation: f64,
    asd_az: f64,
    asd_el: f64,
    spacing: f64,
) -> Result<CMat> {
    if !(asd_az > 0.0 && asd_el > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "angular spreads must be positive, got ({asd_az}, {asd_el})"
        )));
    }
    let (nh, nv) = dims;
    let n = nh * nv;
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let rate = TAU * spacing * ((nh - 1) + (nv - 1)).max(1) as f64;
    let az_rule = gaussian_rule(azimuth, asd_az, rate);
    let el_rule = gaussian_rule(elevation, asd_el, rate);

    // Toeplitz-block structure: the entry only depends on (dh, dv).
    let dv_span = 2 * nv - 1;
    let mut table = vec![C0; nh * dv_span];
    let vshift = (nv - 1) as f64;
    for &(el, we) in &el_rule {
        let (s_el, c_el) = (libm::sin(el), libm::cos(el));
        let kv = TAU * spacing * s_el;
        let e2 = Complex64::from_polar(1.0, kv);
        let e2_start = Complex64::from_polar(1.0, -kv * vshift);
        for &(az, wa) in &az_rule {
            let e1 = Complex64::from_polar(1.0, TAU * spacing * libm::sin(az) * c_el);
            let mut p1 = e2_start * (wa * we);
            for dh in 0..nh {
                let row = &mut table[dh * dv_span..(dh + 1) * dv_span];
                let mut p2 = p1;
                for slot in row.iter_mut() {
                    *slot += p2;
                    p2 *= e2;
                }
                p1 *= e1;
            }
        }
    }
    let lookup = |dh: isize, dv: isize| -> Complex64 {
        if dh >= 0 {
            table[dh as usize * dv_span + (dv + nv as isize - 1) as usize]
        } else {
            table[(-dh) as usize * dv_span + (-dv + nv as isize - 1) as usize].conj()
        }
    };
    let mut r = CMat::from_fn(n, n, |a, b| {
        let (ha, va) = ((a % nh) as isize, (a / nh) as isize);
        let (hb, vb) = ((b % nh) as isize, (b / nh) as isize);
        lookup(ha - hb, va - vb)
    });
    crate::linalg::hermitize(&mut r);
    for i in 0..n {
        r[(i, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(r)
}

/// Rician description of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatistics {
    /// `sqrt(beta kappa / (1 + kappa))` times the LoS array response.
    pub mean_los: CVec,
    /// `beta / (1 + kappa)` times the unit-diagonal scattering correlation.
    pub corr: CMat,
    pub rician_k: f64,
    pub beta: f64,
}

impl LinkStatistics {
    pub fn new(beta: f64, rician_k: f64, steering: &CVec, unit_corr: &CMat) -> Self {
        let los = libm::sqrt(beta * rician_k / (1.0 + rician_k));
        let nlos = beta / (1.0 + rician_k);
        Self {
            mean_los: steering * Complex64::new(los, 0.0),
            corr: unit_corr * Complex64::new(nlos, 0.0),
            rician_k,
            beta,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_los.len()
    }

    /// Second-moment matrix `mean mean^H + corr`.
    pub fn covariance(&self) -> CMat {
        &self.mean_los * self.mean_los.adjoint() + &self.corr
    }
}

/// Rician factor rule: `kappa_dB = 13 - 0.03 d` below the cutoff, else 0.
pub fn rician_factor(distance_m: f64, cutoff_m: f64) -> f64 {
    if distance_m < cutoff_m {
        db_to_linear(13.0 - 0.03 * distance_m)
    } else {
        0.0
    }
}

/// Endpoint of a link: position, height and (for arrays) facing azimuth.
#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub pos: Point,
    pub height_m: f64,
    pub facing: f64,
}

/// Angles of `from` as seen by the array at `at`: azimuth relative to the
/// array's facing direction, elevation from the height difference, and the
/// 3-D distance in metres.
pub fn arrival(at: Site, from: Site, area_km: f64) -> (f64, f64, f64) {
    let d = wrap_delta(at.pos, from.pos, area_km);
    let horiz = libm::hypot(d[0], d[1]) * 1000.0;
    let dz = from.height_m - at.height_m;
    let az = wrap_angle(libm::atan2(d[1], d[0]) - at.facing);
    let el = libm::atan2(dz, horiz);
    (az, el, libm::hypot(horiz, dz))
}

fn wrap_angle(a: f64) -> f64 {
    a - TAU * libm::round(a / TAU)
}

/// Sites of BS `l` and IRS `l` for a geometry; the BS faces its IRS, the IRS
/// faces back toward its BS.
pub fn array_sites(geom: &Geometry, cfg: &SystemConfig, cell: usize) -> (Site, Site) {
    let axis = cfg.irs_azimuth_deg.to_radians();
    let bs = Site { pos: geom.bs[cell], height_m: cfg.bs_height_m, facing: axis };
    let irs = Site { pos: geom.irs[cell], height_m: cfg.irs_height_m, facing: axis + PI };
    (bs, irs)
}

/// Which array a UE link terminates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkEnd {
    Bs(usize),
    Irs(usize),
}

/// Statistics of the link from UE `(cell, user)` to `end`. `shadow_db` is
/// added to the large-scale gain.
pub fn build_link_statistics(
    geom: &Geometry,
    cfg: &SystemConfig,
    cell: usize,
    user: usize,
    end: LinkEnd,
    shadow_db: f64,
) -> Result<LinkStatistics> {
    let ue = Site { pos: geom.ue_position(cell, user), height_m: cfg.ue_height_m, facing: 0.0 };
    let (site, dims, spacing, extra) = match end {
        LinkEnd::Bs(j) => (array_sites(geom, cfg, j).0, cfg.bs_dims, cfg.bs_spacing, cfg.direct_extra_loss_db),
        LinkEnd::Irs(i) => (array_sites(geom, cfg, i).1, cfg.irs_dims, cfg.irs_spacing, 0.0),
    };
    let (az, el, dist) = arrival(site, ue, geom.area_km);
    if !(dist > 1e-9) {
        return Err(Error::DegenerateGeometry(format!(
            "UE ({cell}, {user}) coincides with {end:?}"
        )));
    }
    let beta = db_to_linear(cfg.ue_path_loss.gain_db(dist) - extra + shadow_db);
    let kappa = rician_factor(dist, cfg.rician_cutoff_m);
    let steering = upa_steering(dims, az, el, spacing);
    let corr = local_scattering_corr(
        dims,
        az,
        el,
        cfg.asd_az_deg.to_radians(),
        cfg.asd_el_deg.to_radians(),
        spacing,
    )?;
    Ok(LinkStatistics::new(beta, kappa, &steering, &corr))
}

/// Log-normal shadowing draw in dB for link number `link`, zero when disabled.
pub fn shadowing_db(cfg: &SystemConfig, seed: u64, link: u64) -> f64 {
    match cfg.shadowing_std_db {
        Some(s) if s > 0.0 => {
            let mut rng = stream(seed, &[purpose::SHADOWING, link]);
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        }
        _ => 0.0,
    }
}
