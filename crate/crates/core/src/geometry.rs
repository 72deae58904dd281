//! Poisson point processes on a disc and transmitter-receiver network samples.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Independent generator for `stream` under `master_seed`.
pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point { x: r * theta.cos(), y: r * theta.sin() }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Disc of the given radius centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    radius: f64,
}

impl Window {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param(format!("window radius must be positive, got {radius}")));
        }
        Ok(Window { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.norm_sq() <= self.radius * self.radius
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let r = self.radius * rng.random::<f64>().sqrt();
        Point::polar(r, 2.0 * PI * rng.random::<f64>())
    }
}

/// Smallest window radius whose truncated interference tail, relative to the
/// in-window interference from an inner radius of one, is at most `1e-4`.
pub fn min_window_radius(alpha: f64) -> f64 {
    (1.0f64 + 1e4).powf(1.0 / (alpha - 2.0))
}

/// Expected interference beyond `radius` relative to that between 1 and `radius`.
pub fn truncated_tail_ratio(alpha: f64, radius: f64) -> f64 {
    let t = radius.powf(2.0 - alpha);
    t / (1.0 - t)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub points: Vec<Point>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::param(format!("poisson mean {mean}: {e}")))?;
    let n: f64 = dist.sample(rng);
    Ok(n as usize)
}

pub fn sample_ppp_with<R: Rng + ?Sized>(density: f64, window: &Window, rng: &mut R) -> Result<PointSet> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(Error::param(format!("density must be finite and >= 0, got {density}")));
    }
    let n = poisson_count(density * window.area(), rng)?;
    let points = (0..n).map(|_| window.uniform_point(rng)).collect();
    Ok(PointSet { points })
}

/// Homogeneous PPP on `window`; identical seeds give identical sets.
pub fn sample_ppp(density: f64, window: &Window, seed: u64) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ppp_with(density, window, &mut rng)
}

/// Maps every point `x` to `factor * x`; the image of a PPP of density
/// `lambda` is a PPP of density `lambda / factor^2`.
pub fn scale_process(set: &PointSet, factor: f64) -> Result<PointSet> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::param(format!("scale factor must be positive, got {factor}")));
    }
    let points = set.points.iter().map(|p| Point::new(p.x * factor, p.y * factor)).collect();
    Ok(PointSet { points })
}

/// A realisation of the transmitter-receiver pairs. Pair `reference` has its
/// receiver at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSample {
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
    pub link_distances: Vec<f64>,
    /// Fade of each pair's own link.
    pub signal_fades: Vec<f64>,
    /// Fade from each transmitter to the reference receiver.
    pub interference_fades: Vec<f64>,
    pub active: Vec<bool>,
    pub reference: usize,
}

impl NetworkSample {
    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub(crate) fn push_pair<R: Rng + ?Sized>(&mut self, tx: Point, d: f64, rng: &mut R) {
        let phi = 2.0 * PI * rng.random::<f64>();
        let rx = Point::new(tx.x + d * phi.cos(), tx.y + d * phi.sin());
        self.tx.push(tx);
        self.rx.push(rx);
        self.link_distances.push(d);
        self.signal_fades.push(Exp1.sample(rng));
        self.interference_fades.push(Exp1.sample(rng));
        self.active.push(true);
    }

    pub(crate) fn with_reference<R: Rng + ?Sized>(config: &NetworkConfig, capacity: usize, rng: &mut R) -> Self {
        let mut s = NetworkSample {
            tx: Vec::with_capacity(capacity),
            rx: Vec::with_capacity(capacity),
            link_distances: Vec::with_capacity(capacity),
            signal_fades: Vec::with_capacity(capacity),
            interference_fades: Vec::with_capacity(capacity),
            active: Vec::with_capacity(capacity),
            reference: 0,
        };
        let d0 = config.distance.sample(rng);
        let theta = 2.0 * PI * rng.random::<f64>();
        s.tx.push(Point::polar(d0, theta));
        s.rx.push(Point::default());
        s.link_distances.push(d0);
        s.signal_fades.push(Exp1.sample(rng));
        s.interference_fades.push(0.0);
        s.active.push(true);
        s
    }
}

pub fn sample_network_with<R: Rng + ?Sized>(
    config: &NetworkConfig,
    window: &Window,
    rng: &mut R,
) -> Result<NetworkSample> {
    config.validate()?;
    if config.distance.max_value() > window.radius() {
        return Err(Error::param("window too small to contain the reference link"));
    }
    let n = poisson_count(config.lambda_t * window.area(), rng)?;
    let mut s = NetworkSample::with_reference(config, n + 1, rng);
    for _ in 0..n {
        let tx = window.uniform_point(rng);
        let d = config.distance.sample(rng);
        s.push_pair(tx, d, rng);
    }
    Ok(s)
}

/// Reference pair plus a PPP of `lambda_t` further pairs on `window`.
pub fn sample_network(config: &NetworkConfig, window: &Window, seed: u64) -> Result<NetworkSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_network_with(config, window, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let w = Window::new(100.0).unwrap();
        let a = sample_ppp(1e-2, &w, 7).unwrap();
        let b = sample_ppp(1e-2, &w, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| w.contains(p)));
    }

    #[test]
    fn mean_count_matches_density() {
        let w = Window::new(100.0).unwrap();
        let lambda = 1e-3;
        let reps = 2000;
        let total: usize = (0..reps).map(|s| sample_ppp(lambda, &w, s).unwrap().len()).sum();
        let mean = total as f64 / reps as f64;
        let expected = lambda * w.area();
        // Poisson standard error of the mean is sqrt(31.4 / 2000) ~ 0.125.
        assert!((mean - expected).abs() < 0.6, "mean {mean} vs {expected}");
    }

    #[test]
    fn tail_rule_radius() {
        assert!((min_window_radius(4.0) - 100.005).abs() < 1e-2);
        assert!(truncated_tail_ratio(4.0, min_window_radius(4.0)) <= 1.0001e-4);
        assert!(min_window_radius(3.0) > 1e4);
    }

    #[test]
    fn network_reference_layout() {
        let c = NetworkConfig::baseline(1e-3);
        let w = Window::new(200.0).unwrap();
        let s = sample_network(&c, &w, 3).unwrap();
        assert_eq!(s.rx[0], Point::default());
        assert!((s.tx[0].norm() - 8.0).abs() < 1e-12);
        for j in 0..s.len() {
            assert!((s.tx[j].dist(&s.rx[j]) - 8.0).abs() < 1e-9);
        }
        assert!(s.active.iter().all(|&a| a));
    }

    #[test]
    fn rejects_bad_density_and_scale() {
        let w = Window::new(10.0).unwrap();
        assert!(sample_ppp(-1.0, &w, 0).is_err());
        assert!(scale_process(&PointSet::default(), 0.0).is_err());
        assert!(Window::new(0.0).is_err());
    }
}
